#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "volsr/errors.hpp"

namespace volsr {

/// Comma-separated tables with a header row. Values never contain commas or
/// quotes in this project, so no quoting rules are needed. Missing inputs
/// are written as empty cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string &name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw io_error("csv column not found: " + name);
  }
};

inline std::string csv_num(double v, int precision = 12) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

inline void write_csv(const CsvTable &t, const std::string &path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw io_error("cannot open for writing: " + tmp);
    for (std::size_t i = 0; i < t.header.size(); ++i) {
      if (i) f << ',';
      f << t.header[i];
    }
    f << '\n';
    for (const auto &row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) f << ',';
        f << row[i];
      }
      f << '\n';
    }
    if (!f) throw io_error("short write: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw io_error("cannot move temp file into place: " + path);
}

inline CsvTable read_csv(const std::string &path) {
  std::ifstream f(path);
  if (!f) throw io_error("cannot open csv: " + path);
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && f.eof()) break;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (first) {
      t.header = cells;
      first = false;
    } else {
      t.rows.push_back(cells);
    }
  }
  return t;
}

} // namespace volsr
