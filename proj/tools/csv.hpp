#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mixfbm/errors.hpp"

namespace mixfbm::cli {

// Two-column numeric CSV with an optional header row and "# key=value" lines.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> cols;
  std::map<std::string, double> meta;
};

inline Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  Table t;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) {
        std::string key = line.substr(1, eq - 1);
        key.erase(0, key.find_first_not_of(' '));
        try {
          t.meta[key] = std::stod(line.substr(eq + 1));
        } catch (...) {
        }
      }
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (t.header.empty() && t.cols.empty()) {
      bool numeric = true;
      try {
        std::stod(cells.at(0));
      } catch (...) {
        numeric = false;
      }
      if (!numeric) {
        t.header = cells;
        continue;
      }
    }
    if (t.cols.empty()) t.cols.resize(cells.size());
    if (cells.size() != t.cols.size())
      throw IoError(path + ":" + std::to_string(lineno) + ": wrong number of columns");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      try {
        t.cols[i].push_back(std::stod(cells[i]));
      } catch (...) {
        throw IoError(path + ":" + std::to_string(lineno) + ": not a number '" + cells[i] + "'");
      }
    }
  }
  if (t.cols.empty() || t.cols[0].empty()) throw IoError(path + ": no data rows");
  return t;
}

inline void write_table(const std::string& path, const std::vector<std::string>& header,
                        const std::vector<std::vector<double>>& cols,
                        const std::map<std::string, double>& meta = {}) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  char buf[40];
  for (const auto& [k, v] : meta) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << "# " << k << "=" << buf << "\n";
  }
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (std::size_t r = 0; r < cols[0].size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", cols[c][r]);
      out << (c ? "," : "") << buf;
    }
    out << "\n";
  }
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace mixfbm::cli
