#include "coxerr/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "coxerr/error.hpp"

namespace coxerr {
namespace {

[[noreturn]] void bad_line(int line, const std::string& why) {
  throw Error(ErrorCode::Parse, "data line " + std::to_string(line) + ": " + why);
}

std::vector<std::string> split(const std::string& row) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(row);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!row.empty() && row.back() == ',') out.emplace_back();
  return out;
}

double parse_cell(const std::string& cell, int line) {
  if (cell == "inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) bad_line(line, "bad number '" + cell + "'");
  return v;
}

}  // namespace

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_dataset(std::ostream& out, const Dataset& data, bool with_truth) {
  const int m = data.dim();
  const bool truth = with_truth && data.hidden.has_value();
  out << "y,delta";
  for (int j = 1; j <= m; ++j) out << ",w" << j;
  if (truth) {
    for (int j = 1; j <= m; ++j) out << ",x" << j;
    out << ",t,c";
  }
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Record& r = data.records[i];
    out << format_number(r.y) << ',' << (r.delta ? 1 : 0);
    for (int j = 0; j < m; ++j) out << ',' << format_number(r.w[j]);
    if (truth) {
      const HiddenTruth& h = (*data.hidden)[i];
      for (int j = 0; j < m; ++j) out << ',' << format_number(h.x[j]);
      out << ',' << format_number(h.t) << ',' << format_number(h.c);
    }
    out << '\n';
  }
}

void save_dataset(const std::string& path, const Dataset& data, bool with_truth) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  write_dataset(out, data, with_truth);
  if (!out) throw Error(ErrorCode::Io, "write to '" + path + "' failed");
}

Dataset read_dataset(std::istream& in, double tau) {
  std::string row;
  if (!std::getline(in, row)) throw Error(ErrorCode::Parse, "data line 1: missing header");
  if (!row.empty() && row.back() == '\r') row.pop_back();
  const auto header = split(row);
  if (header.size() < 3 || header[0] != "y" || header[1] != "delta")
    bad_line(1, "header must start with y,delta,w1");
  int m = 0;
  while (2 + m < static_cast<int>(header.size()) && header[2 + m] == "w" + std::to_string(m + 1)) ++m;
  if (m == 0) bad_line(1, "no covariate columns w1..wm");
  const auto rest = header.size() - 2 - static_cast<std::size_t>(m);
  bool truth = false;
  if (rest == static_cast<std::size_t>(m) + 2) {
    for (int j = 0; j < m; ++j) {
      if (header[2 + m + j] != "x" + std::to_string(j + 1)) bad_line(1, "unexpected column '" + header[2 + m + j] + "'");
    }
    if (header[2 + 2 * m] != "t" || header[3 + 2 * m] != "c") bad_line(1, "expected t,c after x columns");
    truth = true;
  } else if (rest != 0) {
    bad_line(1, "unexpected column '" + header[2 + m] + "'");
  }

  Dataset data;
  data.tau = tau;
  if (truth) data.hidden.emplace();
  int line = 1;
  while (std::getline(in, row)) {
    ++line;
    if (!row.empty() && row.back() == '\r') row.pop_back();
    if (row.empty()) continue;
    const auto cells = split(row);
    if (cells.size() != header.size())
      bad_line(line, "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(cells.size()));
    Record r;
    r.y = parse_cell(cells[0], line);
    if (!(r.y >= 0.0 && r.y <= tau)) bad_line(line, "y outside [0, tau]");
    if (cells[1] == "1") r.delta = true;
    else if (cells[1] == "0") r.delta = false;
    else bad_line(line, "delta must be 0 or 1");
    r.w.resize(m);
    for (int j = 0; j < m; ++j) r.w[j] = parse_cell(cells[2 + j], line);
    if (!r.w.allFinite()) bad_line(line, "covariates must be finite");
    if (truth) {
      HiddenTruth h;
      h.x.resize(m);
      for (int j = 0; j < m; ++j) h.x[j] = parse_cell(cells[2 + m + j], line);
      h.t = parse_cell(cells[2 + 2 * m], line);
      h.c = parse_cell(cells[3 + 2 * m], line);
      data.hidden->push_back(std::move(h));
    }
    data.records.push_back(std::move(r));
  }
  if (data.records.empty()) throw Error(ErrorCode::Parse, "dataset has no records");
  return data;
}

Dataset load_dataset(const std::string& path, double tau) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read data '" + path + "'");
  return read_dataset(in, tau);
}

void write_table(std::ostream& out, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows) {
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << format_number(row[j]);
    out << '\n';
  }
}

}  // namespace coxerr
