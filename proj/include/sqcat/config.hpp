#pragma once

// INI run configuration with line-level diagnostics. Every key must be read by
// the consuming scenario; anything left over is rejected as unknown.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

namespace sqcat::config {

/// Invalid or unknown configuration content.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  return out;
}

}  // namespace detail

class Config {
 public:
  /// Parse INI text; \p name labels diagnostics (usually the file path).
  static Config parse(const std::string& text, std::string name) {
    Config c;
    c.name_ = std::move(name);
    std::istringstream is(text);
    try {
      boost::property_tree::ini_parser::read_ini(is, c.tree_);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError(c.name_ + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    c.index_lines(text);
    for (const auto& [section, body] : c.tree_) {
      if (body.empty() && !body.data().empty()) {
        throw ConfigError(c.where(section, "") + "key '" + section + "' outside any section");
      }
    }
    return c;
  }

  static Config load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path.string() + ": cannot open config");
    std::ostringstream ss;
    ss << in.rdbuf();
    Config c = parse(ss.str(), path.string());
    c.dir_ = path.parent_path();
    return c;
  }

  const std::string& name() const { return name_; }
  const std::filesystem::path& directory() const { return dir_; }

  bool has(const std::string& section, const std::string& key) const {
    consumed_.emplace(section, key);
    const auto sec = tree_.get_child_optional(section);
    return sec && sec->get_child_optional(key).has_value();
  }

  std::optional<std::string> raw(const std::string& section, const std::string& key) const {
    consumed_.emplace(section, key);
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    const auto v = sec->get_child_optional(key);
    if (!v) return std::nullopt;
    return detail::trim(v->data());
  }

  double real(const std::string& section, const std::string& key, std::optional<double> fallback = {}) const {
    const auto v = raw(section, key);
    if (!v) return required(section, key, fallback);
    return to_real(section, key, *v);
  }

  long long integer(const std::string& section, const std::string& key,
                    std::optional<long long> fallback = {}) const {
    const auto v = raw(section, key);
    if (!v) return required(section, key, fallback);
    long long out = 0;
    const auto* end = v->data() + v->size();
    const auto [ptr, ec] = std::from_chars(v->data(), end, out);
    if (ec != std::errc() || ptr != end) fail(section, key, "expected an integer, got '" + *v + "'");
    return out;
  }

  bool boolean(const std::string& section, const std::string& key, std::optional<bool> fallback = {}) const {
    const auto v = raw(section, key);
    if (!v) return required(section, key, fallback);
    if (*v == "true") return true;
    if (*v == "false") return false;
    fail(section, key, "expected true or false, got '" + *v + "'");
  }

  std::string choice(const std::string& section, const std::string& key, const std::vector<std::string>& allowed,
                     std::optional<std::string> fallback = {}) const {
    const auto v = raw(section, key);
    const std::string s = v ? *v : required(section, key, fallback);
    for (const auto& a : allowed)
      if (a == s) return s;
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    fail(section, key, "expected one of {" + list + "}, got '" + s + "'");
  }

  std::string text(const std::string& section, const std::string& key,
                   std::optional<std::string> fallback = {}) const {
    const auto v = raw(section, key);
    if (!v) return required(section, key, fallback);
    if (v->empty()) fail(section, key, "must not be empty");
    return *v;
  }

  std::vector<double> reals(const std::string& section, const std::string& key,
                            std::optional<std::vector<double>> fallback = {}) const {
    const auto v = raw(section, key);
    if (!v) return required(section, key, fallback);
    std::vector<double> out;
    for (const auto& item : detail::split(*v, ',')) out.push_back(to_real(section, key, item));
    if (out.empty()) fail(section, key, "empty list");
    return out;
  }

  std::vector<std::string> words(const std::string& section, const std::string& key,
                                 const std::vector<std::string>& allowed,
                                 std::optional<std::vector<std::string>> fallback = {}) const {
    const auto v = raw(section, key);
    const auto items = v ? detail::split(*v, ',') : required(section, key, fallback);
    if (items.empty()) fail(section, key, "empty list");
    for (const auto& s : items) {
      bool ok = false;
      for (const auto& a : allowed) ok = ok || a == s;
      if (!ok) fail(section, key, "unknown entry '" + s + "'");
    }
    return items;
  }

  /// Range check with a diagnostic that names the field.
  void check(bool ok, const std::string& section, const std::string& key, const std::string& what) const {
    if (!ok) fail(section, key, what);
  }

  /// Throws on any key no reader asked for.
  void reject_unknown() const {
    for (const auto& [section, body] : tree_) {
      for (const auto& [key, value] : body) {
        if (!consumed_.count({section, key})) fail(section, key, "unknown key");
      }
    }
  }

  /// section -> key -> raw text, sorted.
  std::map<std::string, std::map<std::string, std::string>> echo() const {
    std::map<std::string, std::map<std::string, std::string>> out;
    for (const auto& [section, body] : tree_)
      for (const auto& [key, value] : body) out[section][key] = detail::trim(value.data());
    return out;
  }

  [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& what) const {
    throw ConfigError(where(section, key) + "[" + section + "] " + key + ": " + what);
  }

 private:
  std::string where(const std::string& section, const std::string& key) const {
    const auto it = lines_.find({section, key});
    if (it != lines_.end()) return name_ + ":" + std::to_string(it->second) + ": ";
    const auto sec = lines_.find({section, ""});
    if (sec != lines_.end()) return name_ + ":" + std::to_string(sec->second) + ": ";
    return name_ + ": ";
  }

  void index_lines(const std::string& text) {
    std::istringstream is(text);
    std::string line, section;
    int n = 0;
    while (std::getline(is, line)) {
      ++n;
      const std::string t = detail::trim(line);
      if (t.empty() || t[0] == ';' || t[0] == '#') continue;
      if (t.front() == '[' && t.back() == ']') {
        section = detail::trim(t.substr(1, t.size() - 2));
        lines_.emplace(std::make_pair(section, std::string{}), n);
        continue;
      }
      const auto eq = t.find('=');
      if (eq != std::string::npos) lines_.emplace(std::make_pair(section, detail::trim(t.substr(0, eq))), n);
    }
  }

  double to_real(const std::string& section, const std::string& key, const std::string& s) const {
    double out = 0.0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, out);
    if (ec != std::errc() || ptr != end || !std::isfinite(out)) {
      fail(section, key, "expected a finite number, got '" + s + "'");
    }
    return out;
  }

  template <class T>
  T required(const std::string& section, const std::string& key, const std::optional<T>& fallback) const {
    if (!fallback) fail(section, key, "missing required key");
    return *fallback;
  }

  std::string name_;
  std::filesystem::path dir_;
  boost::property_tree::ptree tree_;
  std::map<std::pair<std::string, std::string>, int> lines_;
  mutable std::set<std::pair<std::string, std::string>> consumed_;
};

}  // namespace sqcat::config
