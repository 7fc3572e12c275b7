#pragma once

#include <map>
#include <string>
#include <vector>

#include "prf/errors.hpp"

namespace prf {

// Flat sectioned key-value configuration:
//   # comment
//   [section]
//   key = value
// Values are dimensionless (gamma_sigma units). Numbers accept a "pi"
// suffix ("3pi", "0.5pi"); list values are comma separated and may contain
// inclusive ranges "start:stop:step".
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::string& path);
  static ConfigFile parse_string(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  long get_long(const std::string& section, const std::string& key,
                long fallback) const;
  std::vector<double> get_list(const std::string& section, const std::string& key,
                               const std::vector<double>& fallback) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

  static double parse_number(const std::string& token);
  static std::vector<double> parse_list(const std::string& text);

 private:
  std::map<std::string, std::string> entries_;  // "section.key" -> raw value
};

}  // namespace prf
