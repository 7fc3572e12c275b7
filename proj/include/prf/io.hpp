#pragma once

#include <fmt/format.h>

#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "prf/errors.hpp"

namespace prf {

// Round-trip CSV: 17 significant digits, '.' decimal, comma separator,
// mandatory header row.
inline void write_csv(const std::string& path, std::span<const std::string> header,
                      const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (std::size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw std::logic_error("csv row width does not match header: " + path);
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << fmt::format("{:.17g}", row[i]);
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace prf
