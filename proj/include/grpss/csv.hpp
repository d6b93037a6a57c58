#pragma once

// CSV input: header row, response in the first column, covariates after it in
// group order. Errors carry 1-based (row, column) positions.

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "grpss/model.hpp"

namespace grpss {

namespace csv_detail {

inline std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}

inline std::string trimmed(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

inline double parse_cell(const std::string& raw, int row, int col) {
  const std::string s = trimmed(raw);
  if (s.empty()) throw MissingValue(row, col);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError(row, col, "not a number: '" + s + "'");
  return v;
}

}  // namespace csv_detail

struct CsvTable {
  std::vector<std::string> header;
  MatrixXd values;  // data rows by columns
};

inline CsvTable read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, 1, "empty input");
  CsvTable t;
  t.header = csv_detail::split_row(line);
  const int ncol = static_cast<int>(t.header.size());

  std::vector<std::vector<double>> rows;
  int row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty()) continue;
    auto cells = csv_detail::split_row(line);
    if (static_cast<int>(cells.size()) != ncol)
      throw ParseError(row_no, 1,
                       "expected " + std::to_string(ncol) + " cells, got " +
                           std::to_string(cells.size()));
    std::vector<double> r(ncol);
    for (int c = 0; c < ncol; ++c) r[c] = csv_detail::parse_cell(cells[c], row_no, c + 1);
    rows.push_back(std::move(r));
  }

  t.values.resize(rows.size(), ncol);
  for (size_t i = 0; i < rows.size(); ++i)
    for (int c = 0; c < ncol; ++c) t.values(i, c) = rows[i][c];
  return t;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidParameter("cannot open " + path);
  return read_csv(in);
}

// First column is the response, the rest are covariates in group order.
inline GroupedDesign load_csv(const std::string& path, const std::vector<int>& group_sizes) {
  CsvTable t = read_csv_file(path);
  if (t.header.size() < 2) throw ParseError(1, 1, "need a response column and covariates");
  const int p = static_cast<int>(t.header.size()) - 1;
  return make_design(t.values.rightCols(p), t.values.col(0), group_sizes);
}

}  // namespace grpss
