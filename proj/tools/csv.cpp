#include "csv.hpp"

#include "config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace tiltcli {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(line);
  while (std::getline(in, item, ',')) out.push_back(item);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_number(const std::string& text, double& v) {
  if (text.empty()) return false;
  errno = 0;
  char* end = nullptr;
  v = std::strtod(text.c_str(), &end);
  return *end == '\0' && errno != ERANGE;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read CSV file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::string line;
  std::istringstream in(text);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

}  // namespace

void CsvTable::add_row(std::vector<std::string> row) { rows.push_back(std::move(row)); }

std::string CsvTable::to_string() const {
  std::string out;
  const auto emit = [&out](const std::vector<std::string>& r) {
    for (std::size_t k = 0; k < r.size(); ++k) out += (k ? "," : "") + r[k];
    out += "\n";
  };
  emit(header);
  for (const auto& r : rows) emit(r);
  return out;
}

std::string cell(double v) { return format_double(v); }
std::string cell(long long v) { return std::to_string(v); }
std::string cell(int v) { return std::to_string(v); }
std::string cell(long v) { return std::to_string(v); }
std::string cell(unsigned long long v) { return std::to_string(v); }
std::string cell(unsigned long v) { return std::to_string(v); }
std::string cell(bool v) { return v ? "1" : "0"; }
std::string cell(const std::string& v) { return v; }
std::string cell(const char* v) { return v; }

CsvTable parse_csv(const std::string& text, bool has_header) {
  const std::vector<std::string> lines = lines_of(text);
  if (lines.empty()) throw UsageError("CSV input is empty");
  CsvTable t;
  std::size_t first = 0;
  if (has_header) {
    t.header = split_line(lines[0]);
    first = 1;
  }
  const std::size_t width = has_header ? t.header.size() : split_line(lines[0]).size();
  for (std::size_t k = first; k < lines.size(); ++k) {
    std::vector<std::string> row = split_line(lines[k]);
    if (row.size() != width) {
      throw UsageError("malformed CSV: line " + std::to_string(k + 1) + " has " + std::to_string(row.size()) +
                       " fields, expected " + std::to_string(width));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable read_csv(const std::string& path) { return parse_csv(slurp(path), true); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + path + "'");
  out << text;
  if (!out) throw UsageError("failed writing '" + path + "'");
}

void write_csv(const std::string& path, const CsvTable& table) { write_text(path, table.to_string()); }

Eigen::MatrixXd read_numeric_csv(const std::string& path) {
  const std::vector<std::string> lines = lines_of(slurp(path));
  if (lines.empty()) throw UsageError("CSV file '" + path + "' is empty");
  double probe = 0.0;
  const bool header = !parse_number(split_line(lines[0]).front(), probe);
  const CsvTable t = parse_csv(slurp(path), header);
  if (t.rows.empty()) throw UsageError("CSV file '" + path + "' has no data rows");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.rows[0].size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (std::size_t j = 0; j < t.rows[i].size(); ++j) {
      double v = 0.0;
      if (!parse_number(t.rows[i][j], v)) {
        throw UsageError("malformed CSV '" + path + "': row " + std::to_string(i + 1) + ", column " +
                         std::to_string(j + 1) + " is not a number");
      }
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  return m;
}

}  // namespace tiltcli
