#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace taskmpc {

// Deterministic float formatting for result files: fixed "%.10g" keeps output
// byte-stable across runs while preserving enough digits for comparisons.
inline std::string fmt_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace taskmpc
