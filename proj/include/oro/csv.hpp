// CSV formats: matrices as comma-separated rows, one row per line, no header;
// vectors as one value per line. Numbers carry 17 significant digits so
// written values round-trip exactly.
#pragma once

#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>

#include "oro/matrix.hpp"

namespace oro {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string matrix_to_csv(const Matrix& m) {
  std::ostringstream out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
  return out.str();
}

inline std::string vector_to_csv(const Vector& v) {
  std::ostringstream out;
  for (double x : v) out << format_double(x) << '\n';
  return out.str();
}

namespace detail {

inline double parse_field(const std::string& field, std::size_t line_no) {
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(field, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("CSV parse error on line " + std::to_string(line_no) +
                                ": not a number: '" + field + "'");
  }
  while (pos < field.size() && (field[pos] == ' ' || field[pos] == '\t')) ++pos;
  if (pos != field.size())
    throw std::invalid_argument("CSV parse error on line " + std::to_string(line_no) +
                                ": trailing characters in '" + field + "'");
  return v;
}

}  // namespace detail

inline Matrix matrix_from_csv(const std::string& text) {
  std::vector<Vector> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Vector row;
    std::istringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) row.push_back(detail::parse_field(field, line_no));
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::invalid_argument("CSV parse error on line " + std::to_string(line_no) +
                                  ": expected " + std::to_string(rows.front().size()) +
                                  " fields, got " + std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("CSV parse error: no data rows");
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

inline Vector vector_from_csv(const std::string& text) {
  const Matrix m = matrix_from_csv(text);
  if (m.cols() != 1)
    throw std::invalid_argument("CSV parse error: expected one value per line for a vector, got " +
                                std::to_string(m.cols()) + " columns");
  Vector v(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) v[i] = m(i, 0);
  return v;
}

}  // namespace oro
