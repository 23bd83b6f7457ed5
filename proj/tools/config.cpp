#include "config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace tiltcli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string where(const std::string& section, const std::string& key) { return "'" + section + "." + key + "'"; }

double parse_double(const std::string& text, const std::string& section, const std::string& key) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || *end != '\0' || errno == ERANGE) {
    throw UsageError("config key " + where(section, key) + ": '" + text + "' is not a number");
  }
  return v;
}

long long parse_int(const std::string& text, const std::string& section, const std::string& key) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(text.c_str(), &end, 10);
  if (text.empty() || *end != '\0' || errno == ERANGE) {
    throw UsageError("config key " + where(section, key) + ": '" + text + "' is not an integer");
  }
  return v;
}

template <class T, class F>
std::string join(const std::vector<T>& v, F f) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) out += (k ? "," : "") + f(v[k]);
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::filesystem::path dir = std::filesystem::absolute(path).parent_path();
  return parse(ss.str(), dir.string());
}

Config Config::parse(const std::string& text, const std::string& base_dir) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw UsageError(std::string("malformed config: ") + e.what());
  }
  Config c;
  c.base_dir_ = base_dir;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw UsageError("config key '" + section + "' is outside any section");
    for (const auto& [key, value] : body) {
      c.values_[section][key] = trim(value.data());
      c.file_order_.emplace_back(section, key);
    }
  }
  return c;
}

bool Config::has(const std::string& section, const std::string& key) const {
  const auto s = values_.find(section);
  return s != values_.end() && s->second.count(key) > 0;
}

const std::string* Config::raw(const std::string& section, const std::string& key) {
  const auto s = values_.find(section);
  if (s == values_.end()) return nullptr;
  const auto k = s->second.find(key);
  if (k == s->second.end()) return nullptr;
  consumed_.emplace(section, key);
  return &k->second;
}

void Config::echo_value(const std::string& section, const std::string& key, const std::string& value) {
  for (auto& [name, entries] : echo_) {
    if (name != section) continue;
    for (auto& [k, v] : entries) {
      if (k == key) {
        v = value;
        return;
      }
    }
    entries.emplace_back(key, value);
    return;
  }
  echo_.push_back({section, {{key, value}}});
}

std::string Config::get_string(const std::string& section, const std::string& key, const std::string& fallback) {
  const std::string* r = raw(section, key);
  const std::string v = r ? *r : fallback;
  echo_value(section, key, v);
  return v;
}

double Config::get_double(const std::string& section, const std::string& key, double fallback) {
  const std::string* r = raw(section, key);
  const double v = r ? parse_double(*r, section, key) : fallback;
  echo_value(section, key, format_double(v));
  return v;
}

long long Config::get_int(const std::string& section, const std::string& key, long long fallback) {
  const std::string* r = raw(section, key);
  const long long v = r ? parse_int(*r, section, key) : fallback;
  echo_value(section, key, std::to_string(v));
  return v;
}

std::uint64_t Config::get_u64(const std::string& section, const std::string& key, std::uint64_t fallback) {
  const std::string* r = raw(section, key);
  std::uint64_t v = fallback;
  if (r) {
    errno = 0;
    char* end = nullptr;
    v = std::strtoull(r->c_str(), &end, 10);
    if (r->empty() || *end != '\0' || errno == ERANGE || (*r)[0] == '-') {
      throw UsageError("config key " + where(section, key) + ": '" + *r + "' is not an unsigned integer");
    }
  }
  echo_value(section, key, std::to_string(v));
  return v;
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) {
  const std::string* r = raw(section, key);
  bool v = fallback;
  if (r) {
    if (*r == "true" || *r == "1") {
      v = true;
    } else if (*r == "false" || *r == "0") {
      v = false;
    } else {
      throw UsageError("config key " + where(section, key) + ": '" + *r + "' is not true or false");
    }
  }
  echo_value(section, key, v ? "true" : "false");
  return v;
}

std::vector<long long> Config::get_int_list(const std::string& section, const std::string& key,
                                            const std::vector<long long>& fallback) {
  const std::string* r = raw(section, key);
  std::vector<long long> v = fallback;
  if (r) {
    v.clear();
    for (const std::string& item : split_list(*r)) v.push_back(parse_int(item, section, key));
  }
  echo_value(section, key, join(v, [](long long x) { return std::to_string(x); }));
  return v;
}

std::vector<double> Config::get_double_list(const std::string& section, const std::string& key,
                                            const std::vector<double>& fallback) {
  const std::string* r = raw(section, key);
  std::vector<double> v = fallback;
  if (r) {
    v.clear();
    for (const std::string& item : split_list(*r)) v.push_back(parse_double(item, section, key));
  }
  echo_value(section, key, join(v, [](double x) { return format_double(x); }));
  return v;
}

std::vector<std::string> Config::get_string_list(const std::string& section, const std::string& key,
                                                 const std::vector<std::string>& fallback) {
  const std::string* r = raw(section, key);
  const std::vector<std::string> v = r ? split_list(*r) : fallback;
  echo_value(section, key, join(v, [](const std::string& x) { return x; }));
  return v;
}

std::string Config::get_path(const std::string& section, const std::string& key, const std::string& fallback) {
  const std::string* r = raw(section, key);
  std::string v = r ? *r : fallback;
  if (!v.empty()) {
    const std::filesystem::path p(v);
    v = (p.is_absolute() ? p : std::filesystem::path(base_dir_) / p).lexically_normal().string();
  }
  echo_value(section, key, v);
  return v;
}

void Config::check_consumed() const {
  for (const auto& entry : file_order_) {
    if (!consumed_.count(entry)) throw UsageError("unknown config key " + where(entry.first, entry.second));
  }
}

std::string Config::echo_ini() const {
  std::string out;
  for (const auto& [section, entries] : echo_) {
    if (!out.empty()) out += "\n";
    out += "[" + section + "]\n";
    for (const auto& [k, v] : entries) out += k + " = " + v + "\n";
  }
  return out;
}

}  // namespace tiltcli
