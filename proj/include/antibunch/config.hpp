#pragma once

// Flat `dotted.key_unit = value` configuration files.
//
//   # comment
//   emitter.gamma_ns_inv = 0.41667   # trailing comments are allowed
//   drive.kind = cw
//
// Keys are unique; values are trimmed strings converted on access. Numbers
// accept `inf`.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "antibunch/errors.hpp"

namespace antibunch {

class Config {
 public:
  static Config parse(std::istream& in) {
    Config c;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
      ++number;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("line " + std::to_string(number), "expected 'key = value'");
      }
      std::string key = trim(line.substr(0, eq));
      std::string value = trim(line.substr(eq + 1));
      if (key.empty()) throw ConfigError("line " + std::to_string(number), "empty key");
      if (!c.values_.emplace(key, value).second) throw ConfigError(key, "duplicate key");
    }
    return c;
  }

  static Config parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  static Config load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open config file " + path.string());
    return parse(in);
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::optional<std::string> find(const std::string& key) const {
    used_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  std::string string(const std::string& key, const std::string& fallback) const {
    return find(key).value_or(fallback);
  }

  std::string required_string(const std::string& key) const {
    auto v = find(key);
    if (!v) throw ConfigError(key, "required key is missing");
    return *v;
  }

  double number(const std::string& key, double fallback) const {
    const auto v = find(key);
    return v ? to_double(key, *v) : fallback;
  }

  double required_number(const std::string& key) const { return to_double(key, required_string(key)); }

  std::uint64_t count(const std::string& key, std::uint64_t fallback) const {
    const auto v = find(key);
    return v ? to_u64(key, *v) : fallback;
  }

  bool flag(const std::string& key, bool fallback) const {
    const auto v = find(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "yes" || *v == "1" || *v == "on") return true;
    if (*v == "false" || *v == "no" || *v == "0" || *v == "off") return false;
    throw ConfigError(key, "expected a boolean, got '" + *v + "'");
  }

  /// Comma-separated list of numbers.
  std::vector<double> numbers(const std::string& key) const {
    std::vector<double> out;
    const auto v = find(key);
    if (!v) return out;
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(to_double(key, item));
    }
    return out;
  }

  /// Keys present in the file but never read.
  std::vector<std::string> unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_) {
      if (!used_.count(k)) out.push_back(k);
    }
    return out;
  }

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  static std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
  }

  static double to_double(const std::string& key, const std::string& text) {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size() || std::isnan(v)) {
      throw ConfigError(key, "expected a number, got '" + text + "'");
    }
    return v;
  }

  static std::uint64_t to_u64(const std::string& key, const std::string& text) {
    // Accept plain integers and exact scientific notation such as 1e9.
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec == std::errc() && ptr == text.data() + text.size()) return v;
    const double d = to_double(key, text);
    if (d < 0.0 || d != std::floor(d) || d > 1.8e19) {
      throw ConfigError(key, "expected a non-negative integer, got '" + text + "'");
    }
    return static_cast<std::uint64_t>(d);
  }

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

}  // namespace antibunch
