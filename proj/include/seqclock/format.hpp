#pragma once

#include <charconv>
#include <string>

namespace seqclock {

/// Shortest round-trip decimal representation; keeps CSV output
/// deterministic and lossless.
inline std::string fmt_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, end);
}

}  // namespace seqclock
