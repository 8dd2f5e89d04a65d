#pragma once

// CSV layout: header `t,x_1..x_d,xx_11..xx_dd`; row i holds t_i, X(t_i) and
// the step tensor XX_{t_{i-1},t_i} in row-major order (zeros on row 0).

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "roughman/csv.hpp"
#include "roughman/roughpath.hpp"

namespace roughman {

inline void write_rough_path(std::ostream& out, const RoughPath& p) {
  const Eigen::Index d = p.dim();
  out << "t";
  for (Eigen::Index j = 0; j < d; ++j) out << ",x_" << (j + 1);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index k = 0; k < d; ++k) out << ",xx_" << (j + 1) << (k + 1);
  }
  out << '\n';
  for (std::size_t i = 0; i <= p.steps(); ++i) {
    out << csv::format(p.time(i));
    for (Eigen::Index j = 0; j < d; ++j) out << ',' << csv::format(p.value(i)(j));
    for (Eigen::Index j = 0; j < d; ++j) {
      for (Eigen::Index k = 0; k < d; ++k) out << ',' << csv::format(i == 0 ? 0.0 : p.area(i - 1)(j, k));
    }
    out << '\n';
  }
}

/// Reads the format above. The grid step is taken from t_1, which is written
/// as exactly 1 * dt. The Hoelder exponent is not part of the file.
inline RoughPath read_rough_path(std::istream& in, double alpha) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Io, "rough path csv: missing header");
  const auto header = csv::split(line);
  const std::size_t cols = header.size();
  Eigen::Index d = 0;
  while (static_cast<std::size_t>(1 + d + d * d) < cols) ++d;
  if (d == 0 || static_cast<std::size_t>(1 + d + d * d) != cols || header[0] != "t") {
    throw Error(ErrorKind::Io, "rough path csv: header has " + std::to_string(cols) + " columns, not 1+d+d^2");
  }
  std::vector<Vec> values;
  std::vector<Tensor2> areas;
  std::vector<double> times;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = csv::split(line);
    const std::string where = "rough path csv line " + std::to_string(row);
    if (cells.size() != cols) throw Error(ErrorKind::Io, where + ": expected " + std::to_string(cols) + " cells");
    times.push_back(csv::parse_double(cells[0], where));
    Vec v(d);
    for (Eigen::Index j = 0; j < d; ++j) v(j) = csv::parse_double(cells[1 + j], where);
    Tensor2 a(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
      for (Eigen::Index k = 0; k < d; ++k) a(j, k) = csv::parse_double(cells[1 + d + j * d + k], where);
    }
    if (!values.empty()) areas.push_back(a);
    values.push_back(v);
  }
  if (times.size() < 2) throw Error(ErrorKind::Io, "rough path csv: need at least two rows");
  if (times[0] != 0.0) throw Error(ErrorKind::Io, "rough path csv: grid must start at t=0");
  for (std::size_t i = 2; i < times.size(); ++i) {
    if (std::abs(times[i] - times[1] * static_cast<double>(i)) > 1e-9 * times[i]) {
      throw Error(ErrorKind::Io, "rough path csv: grid is not uniform at row " + std::to_string(i + 2));
    }
  }
  return RoughPath(times[1], std::move(values), std::move(areas), alpha);
}

}  // namespace roughman
