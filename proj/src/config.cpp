#include "prf/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace prf {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str());
}

ConfigFile ConfigFile::parse_string(const std::string& text) {
  ConfigFile cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    cfg.entries_[section + "." + key] = value;
  }
  return cfg;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  return entries_.count(section + "." + key) > 0;
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   const std::string& fallback) const {
  auto it = entries_.find(section + "." + key);
  return it == entries_.end() ? fallback : it->second;
}

double ConfigFile::parse_number(const std::string& token) {
  std::string t = trim(token);
  double scale = 1.0;
  if (t.size() >= 2 && (t.ends_with("pi") || t.ends_with("PI"))) {
    scale = M_PI;
    t = trim(t.substr(0, t.size() - 2));
    if (t.empty() || t == "-") t += "1";
  }
  char* end = nullptr;
  double v = std::strtod(t.c_str(), &end);
  if (end == t.c_str() || *end != '\0')
    throw ConfigError("cannot parse number: '" + token + "'");
  return v * scale;
}

std::vector<double> ConfigFile::parse_list(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    auto c1 = item.find(':');
    if (c1 != std::string::npos) {
      auto c2 = item.find(':', c1 + 1);
      if (c2 == std::string::npos)
        throw ConfigError("range needs start:stop:step: '" + item + "'");
      double a = parse_number(item.substr(0, c1));
      double b = parse_number(item.substr(c1 + 1, c2 - c1 - 1));
      double h = parse_number(item.substr(c2 + 1));
      if (h <= 0 || b < a) throw ConfigError("bad range: '" + item + "'");
      for (double x = a; x <= b + 1e-9 * h; x += h) out.push_back(std::min(x, b));
    } else {
      out.push_back(parse_number(item));
    }
  }
  return out;
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double fallback) const {
  auto it = entries_.find(section + "." + key);
  return it == entries_.end() ? fallback : parse_number(it->second);
}

long ConfigFile::get_long(const std::string& section, const std::string& key,
                          long fallback) const {
  auto it = entries_.find(section + "." + key);
  if (it == entries_.end()) return fallback;
  double v = parse_number(it->second);
  long l = static_cast<long>(std::llround(v));
  if (std::abs(v - static_cast<double>(l)) > 1e-9)
    throw ConfigError("expected an integer for " + section + "." + key);
  return l;
}

std::vector<double> ConfigFile::get_list(const std::string& section,
                                         const std::string& key,
                                         const std::vector<double>& fallback) const {
  auto it = entries_.find(section + "." + key);
  return it == entries_.end() ? fallback : parse_list(it->second);
}

}  // namespace prf
