#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "coxerr/simulate.hpp"

namespace coxerr {

/// Shortest decimal text that parses back to exactly `v`.
std::string format_number(double v);

/// Header `y,delta,w1..wm`, plus `x1..xm,t,c` when `with_truth` is set and
/// the dataset carries hidden truth. A lifetime beyond tau is written `inf`.
void write_dataset(std::ostream& out, const Dataset& data, bool with_truth);
void save_dataset(const std::string& path, const Dataset& data, bool with_truth);

/// Reads the format written by write_dataset. Parse errors name the line.
Dataset read_dataset(std::istream& in, double tau);
Dataset load_dataset(const std::string& path, double tau);

/// Writes rows of numbers under the given header.
void write_table(std::ostream& out, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows);

}  // namespace coxerr
