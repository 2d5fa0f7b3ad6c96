// Flat `key = value` experiment configuration. No nesting, comma-separated
// lists, '#' comments. Keys a command never reads are hard errors, and the
// fully resolved set (defaults and overrides included) is echoed into every
// artifact.
#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hola/errors.hpp"

namespace hola {

class ExperimentConfig {
 public:
  static ExperimentConfig parse_string(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw ArgumentError("config line " + std::to_string(lineno) + ": expected 'key = value'");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty())
        throw ArgumentError("config line " + std::to_string(lineno) + ": empty key");
      if (cfg.values_.count(key))
        throw ArgumentError("config: duplicate key '" + key + "'");
      cfg.values_[key] = value;
    }
    return cfg;
  }

  static ExperimentConfig parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
  }

  void override_key(const std::string& key, const std::string& value) { values_[key] = value; }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key) {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ArgumentError("config: missing required key '" + key + "'");
    used_.insert(key);
    resolved_[key] = it->second;
    return it->second;
  }

  std::string get_string(const std::string& key, const std::string& fallback) {
    used_.insert(key);
    const auto it = values_.find(key);
    const std::string v = it == values_.end() ? fallback : it->second;
    resolved_[key] = v;
    return v;
  }

  double get_double(const std::string& key) { return to_double(key, get_string(key)); }
  double get_double(const std::string& key, double fallback) {
    if (!has(key)) {
      used_.insert(key);
      resolved_[key] = format_double(fallback);
      return fallback;
    }
    return to_double(key, get_string(key));
  }

  std::int64_t get_int(const std::string& key) { return to_int(key, get_string(key)); }
  std::int64_t get_int(const std::string& key, std::int64_t fallback) {
    if (!has(key)) {
      used_.insert(key);
      resolved_[key] = std::to_string(fallback);
      return fallback;
    }
    return to_int(key, get_string(key));
  }

  std::vector<double> get_list(const std::string& key) {
    const std::string raw = get_string(key);
    std::vector<double> out;
    std::stringstream ss(raw);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(to_double(key, trim(tok)));
    if (out.empty()) throw ArgumentError("config: key '" + key + "' holds an empty list");
    return out;
  }

  // Keys present in the file that the command never consumed.
  std::vector<std::string> unknown_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
      if (!used_.count(k)) out.push_back(k);
    return out;
  }

  // Sorted (key, value) pairs of everything the command resolved.
  std::vector<std::pair<std::string, std::string>> resolved() const {
    return {resolved_.begin(), resolved_.end()};
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }
  static double to_double(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      const double d = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw ArgumentError("config: key '" + key + "' is not a number: '" + v + "'");
    }
  }
  static std::int64_t to_int(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      const long long i = std::stoll(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return i;
    } catch (const std::exception&) {
      throw ArgumentError("config: key '" + key + "' is not an integer: '" + v + "'");
    }
  }
  static std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  }

  std::map<std::string, std::string> values_;
  std::map<std::string, std::string> resolved_;
  std::set<std::string> used_;
};

}  // namespace hola
