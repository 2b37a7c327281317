#pragma once

#include <cctype>
#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gocdf/error.hpp"

namespace gocdf {

/// Parsed `key = value` file with nested `name { ... }` blocks and `#` comments.
class Config {
 public:
  static Config parse(const std::string& text, const std::string& source = "<config>") {
    std::vector<std::string> lines;
    std::istringstream is(text);
    for (std::string line; std::getline(is, line);) lines.push_back(line);
    std::size_t pos = 0;
    Config root;
    root.parse_block(lines, pos, source, false);
    return root;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  bool has_block(const std::string& name) const { return blocks_.count(name) != 0; }

  const Config& block(const std::string& name) const {
    auto it = blocks_.find(name);
    if (it == blocks_.end()) throw ConfigError("missing block '" + name + "'");
    return it->second;
  }

  const std::string& str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing key '" + key + "'");
    return it->second;
  }
  std::string str(const std::string& key, const std::string& fallback) const {
    return has(key) ? str(key) : fallback;
  }

  double real(const std::string& key) const { return to_real(str(key), key); }
  double real(const std::string& key, double fallback) const { return has(key) ? real(key) : fallback; }

  long integer(const std::string& key) const { return to_integer(str(key), key); }
  long integer(const std::string& key, long fallback) const { return has(key) ? integer(key) : fallback; }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const long v = integer(key);
    if (v < 0) throw ConfigError("key '" + key + "': seed must be non-negative");
    return static_cast<std::uint64_t>(v);
  }

  std::vector<std::string> list(const std::string& key) const {
    std::vector<std::string> out;
    if (!has(key)) return out;
    std::stringstream ss(str(key));
    for (std::string item; std::getline(ss, item, ',');) {
      item = trim(item);
      if (item.empty()) throw ConfigError("key '" + key + "': empty list item");
      out.push_back(item);
    }
    return out;
  }

  std::vector<double> real_list(const std::string& key) const {
    std::vector<double> out;
    for (const std::string& s : list(key)) out.push_back(to_real(s, key));
    return out;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  static double to_real(const std::string& s, const std::string& key) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
      throw ConfigError("key '" + key + "': '" + s + "' is not a number");
    }
    return v;
  }

  static long to_integer(const std::string& s, const std::string& key) {
    errno = 0;
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
      throw ConfigError("key '" + key + "': '" + s + "' is not an integer");
    }
    return v;
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  static bool valid_name(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s) {
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
    }
    return true;
  }

  void parse_block(const std::vector<std::string>& lines, std::size_t& pos, const std::string& source,
                   bool nested) {
    while (pos < lines.size()) {
      const std::size_t lineno = pos + 1;
      std::string line = lines[pos++];
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      line = trim(line);
      if (line.empty()) continue;
      auto where = [&] { return source + ":" + std::to_string(lineno) + ": "; };
      if (line == "}") {
        if (!nested) throw ConfigError(where() + "unmatched '}'");
        return;
      }
      if (line.back() == '{') {
        const std::string name = trim(line.substr(0, line.size() - 1));
        if (!valid_name(name)) throw ConfigError(where() + "bad block name '" + name + "'");
        if (blocks_.count(name)) throw ConfigError(where() + "duplicate block '" + name + "'");
        Config child;
        child.parse_block(lines, pos, source, true);
        blocks_.emplace(name, std::move(child));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError(where() + "expected 'key = value'");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (!valid_name(key)) throw ConfigError(where() + "bad key '" + key + "'");
      if (value.empty()) throw ConfigError(where() + "empty value for '" + key + "'");
      if (values_.count(key)) throw ConfigError(where() + "duplicate key '" + key + "'");
      values_[key] = value;
    }
    if (nested) throw ConfigError(source + ": unterminated block");
  }

  std::map<std::string, std::string> values_;
  std::map<std::string, Config> blocks_;
};

}  // namespace gocdf
