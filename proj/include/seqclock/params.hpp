#pragma once

#include <string>

namespace seqclock {

/// Parameters of the four-variable clock model (two negative feedback
/// loops around an activator complex: Hill-type transcriptional repression
/// plus mass-action sequestration by a partner complex).
///
/// V_* are synthesis rates, gamma_* degradation rates, gamma_B the
/// bilinear sequestration rate and k_R the Hill threshold. Time unit: hours.
struct FullParams {
  double V_R = 1.0;
  double V_B = 1.0;
  double V_D = 1.0;
  double gamma_B = 1.0;
  double gamma_D = 1.0;
  double gamma_R = 1.0;
  double k_R = 1.0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Parameters of the reduced (rescaled) model. All rates in 1/h.
/// alpha is the sequestration rate; the piecewise-affine limit does not
/// depend on it.
struct ReducedParams {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  double delta = 1.0;
  double epsilon = 1.0;

  void validate() const;

  /// Threshold in d above which r can cross its own threshold.
  double d_star() const { return delta / gamma; }
};

/// Parameters of the three-variable Goodwin oscillator used for contrast
/// experiments (Hill-type repression only, no sequestration).
struct GoodwinParams {
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  double alpha3 = 1.0;
  double gamma1 = 1.0;
  double gamma2 = 1.0;
  double gamma3 = 1.0;
  double K = 1.0;
  double n = 1.0;

  void validate() const;
};

/// Maps the full parameter set onto the reduced one:
/// alpha = V_R*gamma_B, beta = gamma_D, gamma = V_B*V_D*V_R/k_R,
/// delta = gamma_R, epsilon = V_B*V_D.
ReducedParams reduce_params(const FullParams& fp);

// Flat key-value JSON round trips. Keys are exactly the field names above.
// Loading rejects missing keys, unknown keys and non-positive values, with
// the offending key named in the exception message.
std::string to_json(const FullParams& p);
std::string to_json(const ReducedParams& p);
std::string to_json(const GoodwinParams& p);
FullParams full_params_from_json(const std::string& text);
ReducedParams reduced_params_from_json(const std::string& text);
GoodwinParams goodwin_params_from_json(const std::string& text);

}  // namespace seqclock
