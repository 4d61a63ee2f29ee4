#pragma once

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ps {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Sectioned key/value text in a TOML subset: `[section]` headers, `key = value` lines, `#` comments.
/// Values are numbers, booleans or double-quoted strings. Insertion order is kept for round-tripping.
class ConfigFile {
public:
  struct Entry {
    std::string key;
    std::string value;  ///< unquoted text
    bool quoted = false;
  };
  struct Section {
    std::string name;
    std::vector<Entry> entries;
  };

  static ConfigFile parse(std::istream& in, const std::string& origin = "<config>") {
    ConfigFile cfg;
    std::string line;
    int lineno = 0;
    std::string current;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string t = trim(strip_comment(line));
      if (t.empty()) continue;
      auto fail = [&](const std::string& what) {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + what);
      };
      if (t.front() == '[') {
        if (t.back() != ']') fail("unterminated section header");
        current = trim(t.substr(1, t.size() - 2));
        if (current.empty()) fail("empty section name");
        cfg.section(current);
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos) fail("expected key = value");
      const std::string key = trim(t.substr(0, eq));
      std::string val = trim(t.substr(eq + 1));
      if (key.empty()) fail("empty key");
      if (val.empty()) fail("empty value for '" + key + "'");
      bool quoted = false;
      if (val.front() == '"') {
        if (val.size() < 2 || val.back() != '"') fail("unterminated string for '" + key + "'");
        val = val.substr(1, val.size() - 2);
        quoted = true;
      }
      cfg.set_raw(current, key, val, quoted);
    }
    return cfg;
  }

  static ConfigFile parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  static ConfigFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    return parse(in, path);
  }

  const std::vector<Section>& sections() const { return sections_; }

  bool has(const std::string& sec, const std::string& key) const { return find(sec, key) != nullptr; }

  std::string get_string(const std::string& sec, const std::string& key, const std::string& fallback) const {
    const Entry* e = find(sec, key);
    return e ? e->value : fallback;
  }

  double get_double(const std::string& sec, const std::string& key, double fallback) const {
    const Entry* e = find(sec, key);
    if (!e) return fallback;
    char* end = nullptr;
    const double v = std::strtod(e->value.c_str(), &end);
    if (e->quoted || end == e->value.c_str() || *end != '\0')
      throw ConfigError("[" + sec + "] " + key + ": expected a number, got '" + e->value + "'");
    return v;
  }

  long long get_int(const std::string& sec, const std::string& key, long long fallback) const {
    const Entry* e = find(sec, key);
    if (!e) return fallback;
    char* end = nullptr;
    const long long v = std::strtoll(e->value.c_str(), &end, 10);
    if (e->quoted || end == e->value.c_str() || *end != '\0')
      throw ConfigError("[" + sec + "] " + key + ": expected an integer, got '" + e->value + "'");
    return v;
  }

  bool get_bool(const std::string& sec, const std::string& key, bool fallback) const {
    const Entry* e = find(sec, key);
    if (!e) return fallback;
    if (!e->quoted && e->value == "true") return true;
    if (!e->quoted && e->value == "false") return false;
    throw ConfigError("[" + sec + "] " + key + ": expected true or false, got '" + e->value + "'");
  }

  void set(const std::string& sec, const std::string& key, double v) { set_raw(sec, key, format_number(v), false); }
  void set(const std::string& sec, const std::string& key, long long v) { set_raw(sec, key, std::to_string(v), false); }
  void set(const std::string& sec, const std::string& key, int v) { set(sec, key, static_cast<long long>(v)); }
  void set(const std::string& sec, const std::string& key, bool v) { set_raw(sec, key, v ? "true" : "false", false); }
  void set(const std::string& sec, const std::string& key, const std::string& v) { set_raw(sec, key, v, true); }
  void set(const std::string& sec, const std::string& key, const char* v) { set(sec, key, std::string(v)); }

  std::string dump() const {
    std::ostringstream out;
    bool first = true;
    for (const auto& s : sections_) {
      if (!s.name.empty()) {
        if (!first) out << '\n';
        out << '[' << s.name << "]\n";
      }
      first = false;
      for (const auto& e : s.entries) {
        out << e.key << " = ";
        if (e.quoted)
          out << '"' << e.value << '"';
        else
          out << e.value;
        out << '\n';
      }
    }
    return out.str();
  }

  static std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s = buf;
    // Keep the shortest representation that still round-trips.
    for (int prec = 1; prec < 17; ++prec) {
      std::snprintf(buf, sizeof buf, "%.*g", prec, v);
      if (std::strtod(buf, nullptr) == v) {
        s = buf;
        break;
      }
    }
    return s;
  }

private:
  static std::string strip_comment(const std::string& line) {
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_str = !in_str;
      if (line[i] == '#' && !in_str) return line.substr(0, i);
    }
    return line;
  }

  static std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }

  Section& section(const std::string& name) {
    for (auto& s : sections_)
      if (s.name == name) return s;
    sections_.push_back({name, {}});
    return sections_.back();
  }

  const Entry* find(const std::string& sec, const std::string& key) const {
    for (const auto& s : sections_)
      if (s.name == sec)
        for (const auto& e : s.entries)
          if (e.key == key) return &e;
    return nullptr;
  }

  void set_raw(const std::string& sec, const std::string& key, std::string value, bool quoted) {
    Section& s = section(sec);
    for (auto& e : s.entries)
      if (e.key == key) {
        e.value = std::move(value);
        e.quoted = quoted;
        return;
      }
    s.entries.push_back({key, std::move(value), quoted});
  }

  std::vector<Section> sections_;
};

}  // namespace ps
