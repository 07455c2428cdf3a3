#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

namespace fastlstd {

/// Shortest decimal string that round-trips to the same double. Keeps CSV and
/// JSON output readable ("0.1" rather than "0.10000000000000001") without
/// losing a bit.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

inline std::string format_number(long long x) { return std::to_string(x); }

}  // namespace fastlstd
