#include "coxerr/error.hpp"

namespace coxerr {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::NoEvents: return "NoEvents";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::SeriesOverflow: return "SeriesOverflow";
    case ErrorCode::TruncationFailure: return "TruncationFailure";
    case ErrorCode::DegenerateB: return "DegenerateB";
    case ErrorCode::SingularSandwich: return "SingularSandwich";
    case ErrorCode::SingularKernel: return "SingularKernel";
    case ErrorCode::ResidualFailure: return "ResidualFailure";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::Io: return "Io";
    case ErrorCode::TooManyFailures: return "TooManyFailures";
  }
  return "Unknown";
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::Parse: return 2;
    case ErrorCode::NoEvents: return 3;
    case ErrorCode::NonConvergence: return 4;
    case ErrorCode::SingularSandwich: return 5;
    case ErrorCode::SeriesOverflow: return 6;
    case ErrorCode::TruncationFailure: return 7;
    case ErrorCode::DegenerateB: return 8;
    case ErrorCode::SingularKernel: return 9;
    case ErrorCode::ResidualFailure: return 10;
    case ErrorCode::ZeroVariance: return 11;
    case ErrorCode::InvalidModel: return 12;
    case ErrorCode::InvalidArgument:
    case ErrorCode::OutOfDomain: return 13;
    case ErrorCode::Io: return 14;
    case ErrorCode::TooManyFailures: return 15;
  }
  return 1;
}

}  // namespace coxerr
