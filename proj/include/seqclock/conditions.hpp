#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "seqclock/params.hpp"

// Machine-checked evaluation of the sufficient conditions for the cyclic
// periodic orbit of the piecewise-affine model, and the parameter-space
// feasibility scan. The conditions are sufficient, not necessary: a failing
// certificate never rules oscillation out.

namespace seqclock {

/// A derived certificate quantity; undefined when a precondition of its
/// formula is violated, with the violated precondition named.
struct MaybeQ {
  double value = std::numeric_limits<double>::quiet_NaN();
  bool defined = false;
  std::string reason;  // violated precondition, empty when defined

  static MaybeQ of(double v) { return {v, true, {}}; }
  static MaybeQ undefined(std::string why) {
    return {std::numeric_limits<double>::quiet_NaN(), false, std::move(why)};
  }
};

struct DerivedQuantities {
  MaybeQ d_star;      // delta/gamma
  MaybeQ H;           // 1 - epsilon*d_star
  MaybeQ x_lower;     // H*sqrt(d_star)
  MaybeQ x_upper;     // (sqrt(beta^2 d*^2 + 2 H d*) - beta d*)/H
  MaybeQ G;           // x_upper - beta*d_star
  MaybeQ F;           // beta*x_lower/(epsilon - beta^2)
  MaybeQ T_r;         // sqrt(2/(gamma*(x_lower - beta/epsilon)))
  MaybeQ T_d;         // (sqrt(G^2 + 2H^2/epsilon) - G)/H
  MaybeQ t1;          // end of the steep-decay leg of the bounding curve
  MaybeQ x_m_t1;      // x on the bounding curve at t1
  MaybeQ t2;          // x_m(t1)/(epsilon*d_star)
  MaybeQ jordan_lhs;  // x_m(t1)*(1/beta - x_m(t1)/(2 epsilon d_star))
};

struct ConditionReport {
  bool assumption1 = false;  // gamma > epsilon*delta
  bool assumption2 = false;  // x_upper > x_lower
  bool tr_defined = false;   // x_lower > beta/epsilon
  bool theorem1 = false;     // T_r < T_d
  bool jordan = false;       // bounding curve ends at x = 0 with d > d_star
  bool all_pass = false;
  DerivedQuantities q;
};

struct Bounds {
  MaybeQ x_lower, x_upper;
};

struct JordanQuantities {
  MaybeQ F, t1, x_m_t1, t2, jordan_lhs;
  std::optional<bool> pass;  // nullopt when a precondition failed
};

bool check_assumption1(const ReducedParams& p);
Bounds compute_bounds(const ReducedParams& p);
std::optional<bool> check_assumption2(const Bounds& b);
MaybeQ compute_Tr(const ReducedParams& p, const MaybeQ& x_lower);
MaybeQ compute_Td(const ReducedParams& p, const MaybeQ& x_upper);
std::optional<bool> check_theorem1(const MaybeQ& T_r, const MaybeQ& T_d);
JordanQuantities compute_jordan(const ReducedParams& p, const MaybeQ& x_lower);

/// Full certificate chain; short-circuits to undefined quantities past the
/// first violated precondition.
ConditionReport check_all(const ReducedParams& p);

std::string report_to_json(const ConditionReport& rep);
ConditionReport report_from_json(const std::string& text);

/// Exact two-leg bounding curve in the (x, d) plane used by the final
/// certificate: a steep-decay leg from (x_lower, d_star) until x = beta*d,
/// then a constant-dx/dt leg until x = 0.
struct JordanCurve {
  double beta = 0, epsilon = 0, d_star = 0, x_lower = 0;
  double t1 = 0, t2 = 0;
  double x1 = 0, d1 = 0;  // state where the legs join
  bool limit_branch = false;

  void eval_first(double t, double& x, double& d) const;   // t in [0, t1]
  void eval_second(double t, double& x, double& d) const;  // t in [0, t2]
};

/// Throws std::domain_error when the curve is undefined for p.
JordanCurve jordan_curve(const ReducedParams& p);

struct ScanRanges {
  std::pair<double, double> beta{1e-2, 1e1};
  std::pair<double, double> gamma{1e-2, 1e1};
  std::pair<double, double> delta{1e-2, 1e1};
  std::pair<double, double> epsilon{1e-2, 1e1};
};

/// One scanned sample: the four PWA parameters (alpha plays no role) and
/// the projection of its ConditionReport onto the exported columns.
struct ScanRow {
  double beta = 0, gamma = 0, delta = 0, epsilon = 0;
  bool assumption1 = false, assumption2 = false, theorem1 = false, jordan = false,
       all_pass = false;
  double d_star, x_lower, x_upper, T_r, T_d, jordan_lhs;  // NaN when undefined
};

struct ParamHistogram {
  std::string name;
  std::vector<double> edges;         // bin edges, log-spaced over the range
  std::vector<std::uint64_t> counts;  // feasible samples per bin
};

struct ScanResult {
  std::vector<ScanRow> samples;
  std::uint64_t feasible_count = 0;
  std::array<ParamHistogram, 4> histograms;
};

/// Deterministic (seeded) log-uniform sampling of (beta, gamma, delta,
/// epsilon); evaluates the full certificate chain per sample.
ScanResult scan_parameters(const ScanRanges& ranges, std::size_t n_samples, std::uint64_t seed);

void write_scan_csv(const ScanResult& scan, std::ostream& os);
std::string histograms_to_json(const ScanResult& scan);

}  // namespace seqclock
