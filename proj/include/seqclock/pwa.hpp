#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "seqclock/params.hpp"

// Event-driven integration of the three-variable piecewise-affine clock
// model. Within each threshold region the flow is affine and solved in
// closed form; threshold crossings are located on the closed-form solution
// by safeguarded bracketing.

namespace seqclock {

struct PwaState {
  double x = 0;  // signed activator-repressor difference
  double d = 0;  // >= 0
  double r = 0;  // >= 0
  double t = 0;  // [h]
};

/// One of the eight threshold octants. The code string orders letters as
/// r, x, d with lowercase below threshold and uppercase above
/// (thresholds r* = 1, x* = 0, d* = delta/gamma).
struct Region {
  bool r_above = false;
  bool x_above = false;
  bool d_above = false;

  std::string code() const;
  static Region from_code(std::string_view code);
  friend bool operator==(const Region&, const Region&) = default;
};

enum class Face : std::uint8_t { none, x, d, r };

std::string_view face_name(Face f);

class PwaError : public std::runtime_error {
 public:
  enum class Kind { degenerate_point, simultaneous_crossing, chattering, overflow };
  PwaError(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Exact affine flow between two events. entry_state and exit_state share
/// their boundary values with the neighbouring segments.
struct AffineSegment {
  Region region;
  double t_start = 0;
  double t_end = 0;
  PwaState entry_state;
  PwaState exit_state;
  Face exit_face = Face::none;
  double x_drive = 0;  // additive external input on dx/dt, 0 when unforced
};

struct PwaPeriod {
  bool periodic = false;
  double period = 0;   // mean marker spacing [h]
  double max_dev = 0;  // largest deviation of a spacing from the mean [h]
  int returns = 0;
};

struct HybridTrajectory {
  std::vector<AffineSegment> segments;
  std::vector<Region> transition_log;  // one region code per segment
  ReducedParams params;

  double t_begin() const;
  double t_end() const;

  /// Exact state at any time covered by the trajectory.
  PwaState state_at(double t) const;

  /// Times at which the given face was crossed in the given direction
  /// (upward = from below threshold to above). Crossings closer than
  /// min_separation to the previous accepted one are dropped.
  std::vector<double> face_crossings(Face face, bool upward, double min_separation = 0) const;

  /// CSV rows `t,x,d,r,region` at the uniform output step plus one row per
  /// event (the event row carries the region being entered).
  void write_csv(std::ostream& os, double sample_dt) const;
};

struct PwaSimOptions {
  double event_tol = 1e-10;            // absolute bracketing tolerance [h]
  std::size_t max_segments = 1000000;  // chattering cap
};

/// Region occupied by a state; a state exactly on a threshold is assigned
/// to the region its flow enters. Throws PwaError::degenerate_point when
/// the flow cannot resolve the side (e.g. the triple point).
Region classify_region(const PwaState& s, const ReducedParams& p, double x_drive = 0);

/// Closed-form flow of `region`'s affine subsystem for duration t >= 0.
/// Valid only up to the first threshold crossing (caller contract).
PwaState solve_affine(const Region& region, const PwaState& s0, const ReducedParams& p, double t,
                      double x_drive = 0);

/// Integrates from s0 until the first threshold crossing or t_max.
AffineSegment advance_to_event(const PwaState& s0, const ReducedParams& p, double t_max,
                               double x_drive = 0, const PwaSimOptions& opts = {});

/// Event-driven simulation over [s0.t, s0.t + t_total].
HybridTrajectory simulate_pwa(const PwaState& s0, const ReducedParams& p, double t_total,
                              const PwaSimOptions& opts = {});

/// Period from the "x crosses 0 upward" marker over the last half of the
/// trajectory; fewer than 3 returns yields periodic = false.
PwaPeriod extract_period_pwa(const HybridTrajectory& traj);

}  // namespace seqclock
