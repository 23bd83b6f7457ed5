#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tiltcli {

/// Bad invocation, unreadable or malformed input, or an unknown config key.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Strict INI configuration: flat `key = value` lines under `[section]`
/// headers. Every key present in the file must be read by the command,
/// otherwise check_consumed() names the first unknown one. Every value that
/// is read, including defaults, is echoed so the resolved configuration can
/// be written back out and re-run.
class Config {
 public:
  Config() = default;
  static Config load(const std::string& path);
  static Config parse(const std::string& text, const std::string& base_dir = ".");

  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key, const std::string& fallback);
  double get_double(const std::string& section, const std::string& key, double fallback);
  long long get_int(const std::string& section, const std::string& key, long long fallback);
  std::uint64_t get_u64(const std::string& section, const std::string& key, std::uint64_t fallback);
  bool get_bool(const std::string& section, const std::string& key, bool fallback);
  std::vector<long long> get_int_list(const std::string& section, const std::string& key,
                                      const std::vector<long long>& fallback);
  std::vector<double> get_double_list(const std::string& section, const std::string& key,
                                      const std::vector<double>& fallback);
  std::vector<std::string> get_string_list(const std::string& section, const std::string& key,
                                           const std::vector<std::string>& fallback);
  /// Path relative to the directory of the config file, echoed absolute.
  /// An empty result means the key is absent and there is no fallback.
  std::string get_path(const std::string& section, const std::string& key, const std::string& fallback = "");

  /// Records a value in the echo without reading it from the file.
  void echo_value(const std::string& section, const std::string& key, const std::string& value);

  /// Throws UsageError naming the first key that was never read.
  void check_consumed() const;

  /// Echoed configuration as INI text, sections in first-use order.
  std::string echo_ini() const;

 private:
  const std::string* raw(const std::string& section, const std::string& key);

  std::map<std::string, std::map<std::string, std::string>> values_;
  std::vector<std::pair<std::string, std::string>> file_order_;
  std::set<std::pair<std::string, std::string>> consumed_;
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> echo_;
  std::string base_dir_ = ".";
};

std::string format_double(double v);

}  // namespace tiltcli
