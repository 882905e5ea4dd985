#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "giant/errors.hpp"

namespace giant {

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace detail

// `key = value` lines; '#' starts a comment. Keys are case-sensitive and may
// appear once. Values are parsed on access and every key must be consumed
// (check_all_used) so typos surface as configuration errors.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(std::istream& in, std::string_view origin = "<config>") {
    KeyValueConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const std::string body = detail::trim(line);
      if (body.empty()) continue;
      const auto eq = body.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(std::string(origin) + ":" + std::to_string(lineno) + ": expected 'key = value'");
      }
      std::string key = detail::trim(std::string_view(body).substr(0, eq));
      std::string value = detail::trim(std::string_view(body).substr(eq + 1));
      if (key.empty()) throw ConfigError(std::string(origin) + ":" + std::to_string(lineno) + ": empty key");
      if (!cfg.entries_.emplace(key, value).second) {
        throw ConfigError(std::string(origin) + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
      }
    }
    return cfg;
  }

  static KeyValueConfig parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  static KeyValueConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse(in, path);
  }

  [[nodiscard]] bool has(const std::string& key) const { return entries_.count(key) != 0; }

  void set(const std::string& key, const std::string& value) { entries_[key] = value; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    used_.insert(key);
    return it->second;
  }

  std::string require_string(const std::string& key) const {
    if (!has(key)) throw ConfigError("missing required key '" + key + "'");
    return get_string(key, {});
  }

  double get_double(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    return to_double(key, get_string(key, {}));
  }

  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    return to_uint(key, get_string(key, {}));
  }

  bool get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto v = get_string(key, {});
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
  }

  // Comma-separated unsigned integers; scientific shorthand like 1e6 accepted.
  std::vector<std::uint64_t> get_uint_list(const std::string& key, std::vector<std::uint64_t> fallback) const {
    if (!has(key)) return fallback;
    std::vector<std::uint64_t> out;
    std::stringstream ss(get_string(key, {}));
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_uint(key, detail::trim(item)));
    if (out.empty()) throw ConfigError("key '" + key + "': empty list");
    return out;
  }

  void check_all_used() const {
    for (const auto& [k, v] : entries_) {
      if (!used_.count(k)) throw ConfigError("unknown config key '" + k + "'");
    }
  }

  [[nodiscard]] const std::map<std::string, std::string>& entries() const noexcept { return entries_; }

  static double to_double(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      const double d = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    }
  }

  static std::uint64_t to_uint(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec == std::errc() && ptr == v.data() + v.size()) return out;
    const double d = to_double(key, v);
    if (d < 0 || d != static_cast<double>(static_cast<std::uint64_t>(d))) {
      throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + v + "'");
    }
    return static_cast<std::uint64_t>(d);
  }

 private:
  std::map<std::string, std::string> entries_;
  mutable std::set<std::string> used_;
};

}  // namespace giant
