#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "seqclock/params.hpp"

namespace seqclock {

/// Right-hand side callback: writes dy/dt for state y at time t.
using Rhs = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;

struct IntegratorConfig {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  double max_step = 0.25;      // [h]
  double t_transient = 600.0;  // [h] discarded before measurements
  double t_measure = 200.0;    // [h] analysed window for period estimates
  void validate() const;
};

/// Sampled solution of one model run. times strictly increasing, one state
/// vector per sample.
struct Timeseries {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  std::string model;

  std::size_t size() const { return times.size(); }
  double value(std::size_t sample, std::size_t var) const { return states[sample][var]; }
};

/// Adaptive embedded Runge-Kutta stepper (Dormand-Prince 5(4), FSAL) with a
/// fourth-order continuous extension for dense output.
class AdaptiveRk {
 public:
  AdaptiveRk(Rhs f, std::vector<double> y0, double t0, const IntegratorConfig& cfg);

  /// Advances by one accepted step, never past t_limit. Returns false when
  /// already at t_limit. Throws on step-size underflow or a non-finite state.
  bool step(double t_limit);

  double t_prev() const { return t_prev_; }
  double t() const { return t_; }
  std::span<const double> y() const { return y_; }
  std::span<const double> y_prev() const { return y_prev_; }
  std::size_t dim() const { return y_.size(); }

  /// Dense-output evaluation at tt within the last accepted step
  /// [t_prev(), t()].
  void dense(double tt, std::span<double> out) const;

 private:
  double error_norm(const std::vector<double>& y1, const std::vector<double>& yerr) const;
  double initial_step(double t_limit) const;

  Rhs f_;
  IntegratorConfig cfg_;
  double t_ = 0, t_prev_ = 0;
  double h_next_ = 0;
  std::vector<double> y_, y_prev_;
  std::vector<double> k_[7];
  std::vector<double> cont_[5];  // dense-output coefficients of the last step
  double h_last_ = 0;
  std::vector<double> scratch_;
};

/// Integrates from t = 0 to t_total with dense output on a uniform grid of
/// spacing sample_dt (the final time is always included).
Timeseries integrate(const Rhs& f, std::span<const double> y0, const IntegratorConfig& cfg,
                     double t_total, double sample_dt, std::string model_tag);

struct PeriodEstimate {
  bool periodic = false;
  double period = 0;  // mean inter-crossing interval [h]
  double spread = 0;  // max deviation of an interval from the mean [h]
  int crossings = 0;
};

enum class Direction { up, down };

/// Times where variable `var` crosses `level` in the given direction,
/// refined by local cubic interpolation. Crossings closer than
/// min_separation to the previous accepted one are dropped.
std::vector<double> find_crossings(const Timeseries& ts, std::size_t var, double level,
                                   Direction dir, double min_separation = 0);

/// Period from threshold crossings of one variable over the trailing
/// t_measure window; crossing times refined by local cubic interpolation.
/// Fewer than 3 crossings yields periodic = false.
PeriodEstimate estimate_period(const Timeseries& ts, std::size_t var, double threshold,
                               Direction dir, double t_measure);

struct AlphaSweepPoint {
  double alpha = 0;
  double period = 0;
  double spread = 0;
  bool oscillatory = false;
};

struct AlphaSweepResult {
  std::vector<AlphaSweepPoint> points;
  /// Relative period change across oscillatory points in the top decade of
  /// the alpha grid; NaN when fewer than two such points exist.
  double plateau_rel_change = 0;
};

/// Periods of the reduced model over an increasing grid of sequestration
/// rates alpha, keeping the other parameters fixed.
AlphaSweepResult period_vs_alpha(const ReducedParams& base, std::span<const double> alpha_grid,
                                 const IntegratorConfig& cfg);

/// Max over samples of | y - |x| | for a transformed-model run; shrinks as
/// alpha grows.
double check_y_abs_x(const Timeseries& transformed_ts);

}  // namespace seqclock
