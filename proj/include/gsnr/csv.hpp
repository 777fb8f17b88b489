#pragma once

#include "gsnr/types.hpp"

#include <string>
#include <vector>

namespace gsnr {

/// Fixed significant-digit formatting ("%.*g"); infinities print as inf/-inf.
std::string formatNumber(double value, int digits = 9);

/// Comma-separated table with a header row and LF line endings.
class CsvTable {
 public:
  CsvTable() = default;
  explicit CsvTable(std::vector<std::string> header);

  void addRow(std::vector<std::string> cells);
  void addRow(const std::vector<double>& values, int digits = 9);

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  std::size_t columnIndex(const std::string& name) const;
  double number(std::size_t row, const std::string& column) const;

  std::string str() const;
  void write(const std::string& path) const;
  static CsvTable read(const std::string& path);

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Writes text to a file, throwing Error (with the path) on I/O failure.
void writeTextFile(const std::string& path, const std::string& text);

}  // namespace gsnr
