#pragma once

// Minimal TOML subset: `[section]` headers, `key = value` with double-quoted
// strings, numbers, booleans and flat arrays of numbers or strings, `#`
// comments. Keys are addressed as "section.key".

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "pars/error.hpp"
#include "pars/numeric.hpp"

namespace pars::config {

using Value = std::variant<bool, double, std::string, std::vector<double>, std::vector<std::string>>;

class Document {
 public:
  void set(std::string key, Value v) { values_[std::move(key)] = std::move(v); }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, Value>& values() const { return values_; }

  template <typename T>
  std::optional<T> get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    if (const T* v = std::get_if<T>(&it->second)) return *v;
    throw Error(ErrorCode::ConfigError, "config key '" + key + "' has the wrong type");
  }

  // Reads `key` into `out` when present, leaving the default otherwise.
  template <typename T>
  void read(const std::string& key, T& out) const {
    if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::uint64_t>) {
      if (auto v = get<double>(key)) {
        if (*v != std::floor(*v) || (std::is_unsigned_v<T> && *v < 0) || std::fabs(*v) > 9007199254740992.0) {
          throw Error(ErrorCode::ConfigError, "config key '" + key + "' must be an integer");
        }
        out = static_cast<T>(*v);
      }
    } else {
      if (auto v = get<T>(key)) out = *v;
    }
  }

 private:
  std::map<std::string, Value> values_;
};

namespace detail {

inline std::string strip_comment(std::string_view line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (line[i] == '#' && !in_string) return std::string(line.substr(0, i));
  }
  return std::string(line);
}

inline std::optional<std::string> parse_string(std::string_view s) {
  if (s.size() < 2 || s.front() != '"' || s.back() != '"') return std::nullopt;
  std::string out;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (s[i] == '\\' && i + 2 < s.size()) {
      const char n = s[++i];
      out += n == 'n' ? '\n' : n == 't' ? '\t' : n;
    } else {
      out += s[i];
    }
  }
  return out;
}

inline Value parse_value(std::string_view raw, const std::string& where) {
  raw = trim(raw);
  if (raw == "true") return true;
  if (raw == "false") return false;
  if (auto s = parse_string(raw)) return *s;
  if (auto n = parse_number(raw)) return *n;
  if (raw.size() >= 2 && raw.front() == '[' && raw.back() == ']') {
    std::vector<double> nums;
    std::vector<std::string> strs;
    std::string_view body = trim(raw.substr(1, raw.size() - 2));
    while (!body.empty()) {
      const auto comma = body.find(',');
      const std::string_view item = trim(body.substr(0, comma));
      if (!item.empty()) {
        if (auto n = parse_number(item)) nums.push_back(*n);
        else if (auto s = parse_string(item)) strs.push_back(*s);
        else throw Error(ErrorCode::ConfigError, where + ": bad array element '" + std::string(item) + "'");
      }
      if (comma == std::string_view::npos) break;
      body = body.substr(comma + 1);
    }
    if (!nums.empty() && !strs.empty()) throw Error(ErrorCode::ConfigError, where + ": mixed array");
    if (!strs.empty()) return strs;
    return nums;
  }
  throw Error(ErrorCode::ConfigError, where + ": cannot parse value '" + std::string(raw) + "'");
}

}  // namespace detail

inline Document parse(std::string_view text) {
  Document doc;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string cleaned = detail::strip_comment(line);
    const std::string_view t = trim(cleaned);
    if (t.empty()) continue;
    const std::string where = "config line " + std::to_string(number);
    if (t.front() == '[') {
      if (t.back() != ']') throw Error(ErrorCode::ConfigError, where + ": unterminated section header");
      section = std::string(trim(t.substr(1, t.size() - 2)));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorCode::ConfigError, where + ": expected key = value");
    const std::string key(trim(t.substr(0, eq)));
    if (key.empty()) throw Error(ErrorCode::ConfigError, where + ": empty key");
    doc.set(section.empty() ? key : section + "." + key, detail::parse_value(t.substr(eq + 1), where));
  }
  return doc;
}

inline Document load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

}  // namespace pars::config
