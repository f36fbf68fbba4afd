// CSV reading and writing for experiment tables.
#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "yfree/linalg.hpp"

namespace yfree {

inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path) {
    if (!out_) throw std::runtime_error("cannot open for writing: " + path);
  }

  void header(const std::vector<std::string>& names) { write_strings(names); }

  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out_ << ',';
      out_ << fmt_g17(values[i]);
    }
    out_ << '\n';
  }

  void write_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

struct CsvTable {
  std::vector<std::string> columns;
  Mat values;  // rows x columns

  int column_index(const std::string& name) const {
    for (std::size_t j = 0; j < columns.size(); ++j)
      if (columns[j] == name) return static_cast<int>(j);
    throw std::invalid_argument("csv: no column named '" + name + "'");
  }
};

// Comma split that keeps trailing empty cells.
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

// Numeric CSV with a header row; missing or non-numeric cells are rejected
// with row/column diagnostics.
inline CsvTable read_numeric_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: empty file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.columns = split_csv_line(line);
  const std::size_t ncol = t.columns.size();
  std::vector<double> data;
  std::size_t nrow = 0;
  for (std::size_t rowno = 2; std::getline(in, line); ++rowno) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != ncol)
      throw std::runtime_error("csv: row " + std::to_string(rowno) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(ncol));
    for (std::size_t col = 0; col < ncol; ++col) {
      const std::string& cell = cells[col];
      if (cell.empty())
        throw std::runtime_error("csv: missing value at row " + std::to_string(rowno) +
                                 ", column '" + t.columns[col] + "'");
      std::size_t used = 0;
      double v;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
        v = 0.0;
      }
      if (used != cell.size())
        throw std::runtime_error("csv: non-numeric value '" + cell + "' at row " +
                                 std::to_string(rowno) + ", column '" + t.columns[col] + "'");
      data.push_back(v);
    }
    ++nrow;
  }
  t.values = Mat(nrow, ncol);
  for (std::size_t i = 0; i < nrow; ++i)
    for (std::size_t j = 0; j < ncol; ++j) t.values(i, j) = data[i * ncol + j];
  return t;
}

}  // namespace yfree
