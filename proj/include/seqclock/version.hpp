#pragma once

namespace seqclock {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace seqclock
