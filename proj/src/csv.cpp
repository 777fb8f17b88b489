#include "gsnr/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gsnr {

std::string formatNumber(double value, int digits) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) return "0";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, value);
  return buf;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::addRow(std::vector<std::string> cells) {
  if (!header_.empty() && cells.size() != header_.size()) {
    throw DimensionError("CSV row has " + std::to_string(cells.size()) + " cells, header has " +
                         std::to_string(header_.size()));
  }
  rows_.push_back(std::move(cells));
}

void CsvTable::addRow(const std::vector<double>& values, int digits) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(formatNumber(v, digits));
  addRow(std::move(cells));
}

std::size_t CsvTable::columnIndex(const std::string& name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return i;
  }
  throw InvalidArgument("CSV has no column '" + name + "'");
}

double CsvTable::number(std::size_t row, const std::string& column) const {
  const std::string& cell = rows_.at(row).at(columnIndex(column));
  if (cell == "inf") return INFINITY;
  if (cell == "-inf") return -INFINITY;
  if (cell == "nan") return NAN;
  return std::stod(cell);
}

std::string CsvTable::str() const {
  std::string out;
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header_);
  for (const auto& row : rows_) line(row);
  return out;
}

void CsvTable::write(const std::string& path) const { writeTextFile(path, str()); }

CsvTable CsvTable::read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open CSV file " + path);
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) throw Error(path + ": empty CSV file");
  CsvTable table(split(line));
  std::size_t lineNo = 1;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != table.header_.size()) {
      throw Error(path + ":" + std::to_string(lineNo) + ": expected " + std::to_string(table.header_.size()) +
                  " cells");
    }
    table.rows_.push_back(std::move(cells));
  }
  return table;
}

void writeTextFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw Error("write failed for " + path);
}

}  // namespace gsnr
