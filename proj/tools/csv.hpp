#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace tiltcli {

/// Text cells of a comma-separated file; numbers are formatted with 17
/// significant digits when written through the cell helpers, so reading a
/// file and writing it back reproduces it byte for byte.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
  std::string to_string() const;
};

std::string cell(double v);
std::string cell(long long v);
std::string cell(int v);
std::string cell(long v);
std::string cell(unsigned long long v);
std::string cell(unsigned long v);
std::string cell(bool v);
std::string cell(const std::string& v);
std::string cell(const char* v);

/// Reads a file with a header line. Throws UsageError for a missing file,
/// an empty file or rows whose width differs from the header.
CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text, bool has_header = true);
void write_csv(const std::string& path, const CsvTable& table);
void write_text(const std::string& path, const std::string& text);

/// Every row of a numeric file. A first line that does not parse as numbers
/// is taken as a header.
Eigen::MatrixXd read_numeric_csv(const std::string& path);

}  // namespace tiltcli
