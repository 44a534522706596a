#include "seqclock/presets.hpp"

#include <stdexcept>

namespace seqclock {

ReducedParams preset_reduced_standard() {
  ReducedParams p;
  p.alpha = 114.6;
  p.beta = 0.156;
  p.gamma = 1.5;
  p.delta = 0.241;
  p.epsilon = 2.698;
  return p;
}

GoodwinParams preset_goodwin() {
  GoodwinParams p;
  p.alpha1 = 5.0;
  p.alpha2 = 5.0;
  p.alpha3 = 5.0;
  p.gamma1 = 0.5;
  p.gamma2 = 0.5;
  p.gamma3 = 0.5;
  p.K = 1.0;
  p.n = 10.0;
  return p;
}

bool is_reduced_preset(std::string_view name) { return name == "paper-standard"; }

bool is_goodwin_preset(std::string_view name) { return name == "goodwin-fig8"; }

ReducedParams reduced_preset_by_name(std::string_view name) {
  if (is_reduced_preset(name)) return preset_reduced_standard();
  throw std::invalid_argument("unknown reduced-model preset '" + std::string(name) +
                              "' (available: paper-standard)");
}

GoodwinParams goodwin_preset_by_name(std::string_view name) {
  if (is_goodwin_preset(name)) return preset_goodwin();
  throw std::invalid_argument("unknown Goodwin preset '" + std::string(name) +
                              "' (available: goodwin-fig8)");
}

}  // namespace seqclock
