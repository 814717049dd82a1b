#pragma once

// Minimal unquoted CSV used by every file format in this project. Fields
// never contain commas or quotes (tokens are validated on construction).

#include <charconv>
#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "chaintrace/errors.hpp"

namespace chaintrace::csv {

inline std::vector<std::string> split(std::string_view line, char delimiter = ',') {
  std::vector<std::string> fields;
  std::size_t begin = 0;
  while (true) {
    const std::size_t end = line.find(delimiter, begin);
    if (end == std::string_view::npos) {
      fields.emplace_back(line.substr(begin));
      return fields;
    }
    fields.emplace_back(line.substr(begin, end - begin));
    begin = end + 1;
  }
}

/// Non-negative decimal integer, digits only.
inline std::int64_t parse_count(std::string_view field, std::size_t line, std::string_view what) {
  std::int64_t value = 0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  if (field.empty() || field.front() == '-' || field.front() == '+') {
    throw ParseError(std::string(what) + " must be a non-negative integer", line);
  }
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw ParseError(std::string(what) + " must be a non-negative integer", line);
  }
  return value;
}

inline double parse_double(std::string_view field, std::size_t line, std::string_view what) {
  try {
    std::size_t used = 0;
    const std::string text(field);
    const double value = std::stod(text, &used);
    if (used != text.size()) throw ParseError(std::string(what) + " is not a number", line);
    return value;
  } catch (const std::logic_error&) {
    throw ParseError(std::string(what) + " is not a number", line);
  }
}

/// Reads the header line and checks it matches exactly.
inline void expect_header(std::istream& in, std::string_view header) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing header", 1);
  if (line != header) {
    throw ParseError("unknown header '" + line + "', expected '" + std::string(header) + "'", 1);
  }
}

}  // namespace chaintrace::csv
