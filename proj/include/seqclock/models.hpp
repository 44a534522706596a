#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "seqclock/params.hpp"

// Right-hand sides and static nonlinearities of the four model forms:
// the full 4-variable model, its parameter-reduced version, the (x,y)
// transformed system and the Goodwin comparison oscillator. All
// evaluations are pure; validation lives in the state constructors.

namespace seqclock {

/// State of the full model: activator complex B, downstream proteins D, R
/// and the sequestering partner complex P. Concentrations, all >= 0.
struct FullState {
  double B = 0, D = 0, R = 0, P = 0;
  void validate() const {
    if (B < 0 || D < 0 || R < 0 || P < 0) {
      throw std::invalid_argument("FullState components must be nonnegative");
    }
  }
};

/// State of the reduced model (rescaled concentrations b, d, r, p >= 0).
struct ReducedState {
  double b = 0, d = 0, r = 0, p = 0;
  void validate() const {
    if (b < 0 || d < 0 || r < 0 || p < 0) {
      throw std::invalid_argument("ReducedState components must be nonnegative");
    }
  }
};

/// Transformed state: x = b - p (signed), y = b + p. States derived from
/// nonnegative (b, p) satisfy y >= |x|.
struct XyState {
  double x = 0, d = 0, r = 0, y = 0;
};

/// State of the Goodwin oscillator, concentrations X, Y, Z >= 0.
struct GoodwinState {
  double X = 0, Y = 0, Z = 0;
  void validate() const {
    if (X < 0 || Y < 0 || Z < 0) {
      throw std::invalid_argument("GoodwinState components must be nonnegative");
    }
  }
};

/// Decreasing Hill repression k_R^2 / (k_R^2 + R^2), exponent fixed to 2.
inline double hill_full(double R, double k_R) {
  if (R < 0) throw std::domain_error("hill_full: R must be nonnegative");
  if (!(k_R > 0)) throw std::domain_error("hill_full: k_R must be positive");
  return k_R * k_R / (k_R * k_R + R * R);
}

/// Rescaled Hill repression 1 / (1 + r^2).
inline double hill_reduced(double r) {
  if (r < 0) throw std::domain_error("hill_reduced: r must be nonnegative");
  return 1.0 / (1.0 + r * r);
}

/// Switch limit of the Hill function: 1 for r < 1, 0 for r >= 1
/// (strict inequality at the threshold).
inline double switch_h(double r) { return r < 1.0 ? 1.0 : 0.0; }

/// Synthesis input max(x, 0); the surviving activator concentration in the
/// fast-sequestration limit.
inline double f_b(double x) { return x > 0.0 ? x : 0.0; }

/// dB/dt = V_R h(R) - gamma_B B P
/// dD/dt = V_B B - gamma_D D
/// dR/dt = V_D D - gamma_R R
/// dP/dt = V_D D - gamma_B B P
inline std::array<double, 4> rhs_full(const FullState& s, const FullParams& p) {
  const double seq = p.gamma_B * s.B * s.P;
  return {p.V_R * hill_full(s.R, p.k_R) - seq,
          p.V_B * s.B - p.gamma_D * s.D,
          p.V_D * s.D - p.gamma_R * s.R,
          p.V_D * s.D - seq};
}

/// db/dt = h_d(r) - alpha b p
/// dd/dt = b - beta d
/// dr/dt = gamma d - delta r
/// dp/dt = epsilon d - alpha b p
inline std::array<double, 4> rhs_reduced(const ReducedState& s, const ReducedParams& p) {
  const double seq = p.alpha * s.b * s.p;
  return {hill_reduced(s.r) - seq,
          s.b - p.beta * s.d,
          p.gamma * s.d - p.delta * s.r,
          p.epsilon * s.d - seq};
}

/// Transformed system in (x, d, r, y). The x equation carries no alpha
/// term; the sequestration nonlinearity lives entirely in dy/dt.
inline std::array<double, 4> rhs_transformed(const XyState& s, const ReducedParams& p) {
  const double h = hill_reduced(s.r);
  return {h - p.epsilon * s.d,
          0.5 * (s.x + s.y) - p.beta * s.d,
          p.gamma * s.d - p.delta * s.r,
          h + p.epsilon * s.d + 0.5 * p.alpha * (s.x * s.x - s.y * s.y)};
}

/// dX/dt = alpha1 K^n/(K^n + Z^n) - gamma1 X
/// dY/dt = alpha2 X - gamma2 Y
/// dZ/dt = alpha3 Y - gamma3 Z
inline std::array<double, 3> rhs_goodwin(const GoodwinState& s, const GoodwinParams& p) {
  const double kn = std::pow(p.K, p.n);
  const double hill = kn / (kn + std::pow(s.Z, p.n));
  return {p.alpha1 * hill - p.gamma1 * s.X,
          p.alpha2 * s.X - p.gamma2 * s.Y,
          p.alpha3 * s.Y - p.gamma3 * s.Z};
}

inline XyState to_xy(const ReducedState& s) {
  s.validate();
  return {s.b - s.p, s.d, s.r, s.b + s.p};
}

inline ReducedState from_xy(const XyState& s) {
  if (s.y < std::abs(s.x)) {
    throw std::invalid_argument("from_xy: y < |x| would yield a negative concentration");
  }
  return {0.5 * (s.x + s.y), s.d, s.r, 0.5 * (s.y - s.x)};
}

}  // namespace seqclock
