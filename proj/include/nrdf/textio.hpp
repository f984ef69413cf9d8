#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "nrdf/errors.hpp"

namespace nrdf {

// shortest round-trip decimal form used by every text artifact
inline std::string fp17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s, const char* where) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw MalformedFile(std::string(where) + ": bad number '" + s + "'");
  return v;
}

inline long parse_long(const std::string& s, const char* where) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0')
    throw MalformedFile(std::string(where) + ": bad integer '" + s + "'");
  return v;
}

// whitespace tokenizer
inline std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace nrdf
