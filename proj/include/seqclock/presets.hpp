#pragma once

#include <string>
#include <string_view>

#include "seqclock/params.hpp"

namespace seqclock {

// Named parameter presets addressable from the CLI (--preset).

/// "paper-standard": the reduced/PWA parameter set fitted to experimental
/// reporter data in the original study.
ReducedParams preset_reduced_standard();

/// "goodwin-fig8": the Goodwin oscillator reference parameterization.
GoodwinParams preset_goodwin();

bool is_reduced_preset(std::string_view name);
bool is_goodwin_preset(std::string_view name);

/// Resolves a preset name for the given model family; throws
/// std::invalid_argument for unknown names.
ReducedParams reduced_preset_by_name(std::string_view name);
GoodwinParams goodwin_preset_by_name(std::string_view name);

}  // namespace seqclock
