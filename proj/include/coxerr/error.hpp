#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace coxerr {

enum class ErrorCode {
  InvalidArgument,
  OutOfDomain,
  NonConvergence,
  NoEvents,
  InvalidModel,
  SeriesOverflow,
  TruncationFailure,
  DegenerateB,
  SingularSandwich,
  SingularKernel,
  ResidualFailure,
  ZeroVariance,
  Parse,
  Io,
  TooManyFailures,
};

std::string_view to_string(ErrorCode code);

// Process exit code used by the CLI for each error class.
int exit_code(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace coxerr
