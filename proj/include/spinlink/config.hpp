#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "spinlink/errors.hpp"

namespace spinlink {

// Flat key-value run configuration: one `section.key = value` per line,
// '#' comments, blank lines ignored. Keys are dotted, values are plain
// tokens; the full key list lives in the README and the shipped configs.
class Config {
 public:
  static Config from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_string(buf.str(), path);
  }

  static Config from_string(const std::string& text, const std::string& origin = "<string>") {
    Config cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string stripped = strip_comment(line);
      if (trim(stripped).empty()) continue;
      const auto eq = stripped.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
      const std::string key = trim(stripped.substr(0, eq));
      const std::string value = trim(stripped.substr(eq + 1));
      if (key.empty() || value.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key or value");
      cfg.values_[key] = value;
    }
    return cfg;
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::string require_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError(origin_ + ": missing required key '" + key + "'");
    return it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : parse_double(key, it->second);
  }

  std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : parse_int(key, it->second);
  }

  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      return std::stoull(it->second);
    } catch (const std::exception&) {
      throw ConfigError(origin_ + ": key '" + key + "' is not an unsigned integer: " + it->second);
    }
  }

  const std::map<std::string, std::string>& values() const { return values_; }
  const std::string& origin() const { return origin_; }

 private:
  double parse_double(const std::string& key, const std::string& text) const {
    try {
      std::size_t pos = 0;
      const double v = std::stod(text, &pos);
      if (pos != text.size()) throw std::invalid_argument(text);
      return v;
    } catch (const std::exception&) {
      throw ConfigError(origin_ + ": key '" + key + "' is not a number: " + text);
    }
  }

  std::int64_t parse_int(const std::string& key, const std::string& text) const {
    try {
      std::size_t pos = 0;
      const std::int64_t v = std::stoll(text, &pos);
      if (pos != text.size()) throw std::invalid_argument(text);
      return v;
    } catch (const std::exception&) {
      throw ConfigError(origin_ + ": key '" + key + "' is not an integer: " + text);
    }
  }

  static std::string strip_comment(const std::string& line) {
    const auto pos = line.find('#');
    return pos == std::string::npos ? line : line.substr(0, pos);
  }

  static std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
  }

  std::map<std::string, std::string> values_;
  std::string origin_;
};

}  // namespace spinlink
