#include "seqclock/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "seqclock/models.hpp"

namespace seqclock {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
// Error weights: 5th-order minus embedded 4th-order coefficients.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// Continuous-extension weights.
constexpr double d1 = -12715105075.0 / 11282082432.0;
constexpr double d3 = 87487479700.0 / 32700410799.0;
constexpr double d4 = -10690763975.0 / 1880347072.0;
constexpr double d5 = 701980252875.0 / 199316789632.0;
constexpr double d6 = -1453857185.0 / 822651844.0;
constexpr double d7 = 69997945.0 / 29380423.0;

constexpr double kSafety = 0.9;
constexpr double kShrinkLimit = 0.2;
constexpr double kGrowLimit = 10.0;

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

void IntegratorConfig::validate() const {
  auto tol_ok = [](double tol) { return tol > 0 && tol <= 1e-2; };
  if (!tol_ok(rel_tol) || !tol_ok(abs_tol)) {
    throw std::invalid_argument("IntegratorConfig: tolerances must lie in (0, 1e-2]");
  }
  if (!(max_step > 0)) throw std::invalid_argument("IntegratorConfig: max_step must be positive");
  if (!(t_measure > 0)) throw std::invalid_argument("IntegratorConfig: t_measure must be positive");
  if (t_transient < 0) throw std::invalid_argument("IntegratorConfig: t_transient must be >= 0");
}

AdaptiveRk::AdaptiveRk(Rhs f, std::vector<double> y0, double t0, const IntegratorConfig& cfg)
    : f_(std::move(f)), cfg_(cfg), t_(t0), t_prev_(t0), y_(std::move(y0)), y_prev_(y_) {
  cfg_.validate();
  if (y_.empty()) throw std::invalid_argument("AdaptiveRk: empty state");
  const std::size_t n = y_.size();
  for (auto& k : k_) k.assign(n, 0.0);
  for (auto& c : cont_) c.assign(n, 0.0);
  scratch_.assign(n, 0.0);
  f_(t_, y_, k_[0]);  // FSAL seed
  if (!all_finite(k_[0])) throw std::runtime_error("AdaptiveRk: non-finite derivative at start");
  h_next_ = 0;  // chosen on first step
}

double AdaptiveRk::error_norm(const std::vector<double>& y1, const std::vector<double>& yerr) const {
  double sum = 0;
  for (std::size_t i = 0; i < y_.size(); ++i) {
    const double sc = cfg_.abs_tol + cfg_.rel_tol * std::max(std::abs(y_[i]), std::abs(y1[i]));
    const double q = yerr[i] / sc;
    sum += q * q;
  }
  return std::sqrt(sum / static_cast<double>(y_.size()));
}

double AdaptiveRk::initial_step(double t_limit) const {
  double ynorm = 0, fnorm = 0;
  for (std::size_t i = 0; i < y_.size(); ++i) {
    const double sc = cfg_.abs_tol + cfg_.rel_tol * std::abs(y_[i]);
    ynorm = std::max(ynorm, std::abs(y_[i]) / sc);
    fnorm = std::max(fnorm, std::abs(k_[0][i]) / sc);
  }
  double h = (fnorm > 1e-10) ? 0.01 * std::max(ynorm, 1.0) / fnorm : 1e-4;
  h = std::min({h, cfg_.max_step, t_limit - t_});
  return std::max(h, 1e-12);
}

bool AdaptiveRk::step(double t_limit) {
  const std::size_t n = y_.size();
  if (t_limit - t_ <= std::abs(t_) * 1e-15) return false;
  double h = (h_next_ > 0) ? h_next_ : initial_step(t_limit);
  h = std::min({h, cfg_.max_step, t_limit - t_});

  std::vector<double> y1(n), yerr(n);
  bool rejected = false;
  for (;;) {
    if (h < 1e-14 * std::max(1.0, std::abs(t_))) {
      throw std::runtime_error("AdaptiveRk: step size underflow at t = " + std::to_string(t_));
    }
    auto stage = [&](std::vector<double>& k, double c, auto&&... aw) {
      for (std::size_t i = 0; i < n; ++i) {
        double acc = y_[i];
        ((acc += h * aw.first * aw.second[i]), ...);
        scratch_[i] = acc;
      }
      f_(t_ + c * h, scratch_, k);
    };
    using P = std::pair<double, const std::vector<double>&>;
    stage(k_[1], c2, P{a21, k_[0]});
    stage(k_[2], c3, P{a31, k_[0]}, P{a32, k_[1]});
    stage(k_[3], c4, P{a41, k_[0]}, P{a42, k_[1]}, P{a43, k_[2]});
    stage(k_[4], c5, P{a51, k_[0]}, P{a52, k_[1]}, P{a53, k_[2]}, P{a54, k_[3]});
    stage(k_[5], 1.0, P{a61, k_[0]}, P{a62, k_[1]}, P{a63, k_[2]}, P{a64, k_[3]}, P{a65, k_[4]});
    for (std::size_t i = 0; i < n; ++i) {
      y1[i] = y_[i] + h * (a71 * k_[0][i] + a73 * k_[2][i] + a74 * k_[3][i] + a75 * k_[4][i] +
                           a76 * k_[5][i]);
    }
    f_(t_ + h, y1, k_[6]);
    for (std::size_t i = 0; i < n; ++i) {
      yerr[i] = h * (e1 * k_[0][i] + e3 * k_[2][i] + e4 * k_[3][i] + e5 * k_[4][i] +
                     e6 * k_[5][i] + e7 * k_[6][i]);
    }

    double err = all_finite(y1) && all_finite(k_[6]) ? error_norm(y1, yerr)
                                                     : std::numeric_limits<double>::infinity();
    if (err <= 1.0) {
      // Dense-output coefficients before state rotation.
      for (std::size_t i = 0; i < n; ++i) {
        const double ydiff = y1[i] - y_[i];
        const double bspl = h * k_[0][i] - ydiff;
        cont_[0][i] = y_[i];
        cont_[1][i] = ydiff;
        cont_[2][i] = bspl;
        cont_[3][i] = ydiff - h * k_[6][i] - bspl;
        cont_[4][i] = h * (d1 * k_[0][i] + d3 * k_[2][i] + d4 * k_[3][i] + d5 * k_[4][i] +
                           d6 * k_[5][i] + d7 * k_[6][i]);
      }
      h_last_ = h;
      t_prev_ = t_;
      y_prev_ = y_;
      t_ = (t_limit - (t_ + h) < 1e-12 * std::max(1.0, std::abs(t_limit))) ? t_limit : t_ + h;
      y_.swap(y1);
      k_[0] = k_[6];  // FSAL
      double fac = kSafety * std::pow(std::max(err, 1e-10), -0.2);
      fac = std::clamp(fac, kShrinkLimit, rejected ? 1.0 : kGrowLimit);
      h_next_ = std::min(h * fac, cfg_.max_step);
      return true;
    }
    rejected = true;
    const double fac = std::isfinite(err)
                           ? std::clamp(kSafety * std::pow(err, -0.2), kShrinkLimit, 0.9)
                           : 0.1;
    h *= fac;
  }
}

void AdaptiveRk::dense(double tt, std::span<double> out) const {
  if (h_last_ <= 0) {  // no step taken yet
    std::copy(y_.begin(), y_.end(), out.begin());
    return;
  }
  const double theta = (tt - t_prev_) / h_last_;
  const double theta1 = 1.0 - theta;
  for (std::size_t i = 0; i < y_.size(); ++i) {
    out[i] = cont_[0][i] +
             theta * (cont_[1][i] +
                      theta1 * (cont_[2][i] + theta * (cont_[3][i] + theta1 * cont_[4][i])));
  }
}

Timeseries integrate(const Rhs& f, std::span<const double> y0, const IntegratorConfig& cfg,
                     double t_total, double sample_dt, std::string model_tag) {
  if (t_total < 0) throw std::invalid_argument("integrate: t_total must be >= 0");
  if (!(sample_dt > 0)) throw std::invalid_argument("integrate: sample_dt must be positive");
  Timeseries ts;
  ts.model = std::move(model_tag);
  std::vector<double> y(y0.begin(), y0.end());
  ts.times.push_back(0.0);
  ts.states.emplace_back(y);
  if (t_total == 0) return ts;

  AdaptiveRk rk(f, y, 0.0, cfg);
  std::vector<double> buf(y.size());
  double t_next = sample_dt;
  while (rk.step(t_total)) {
    while (t_next <= rk.t() + 1e-12 && t_next <= t_total) {
      rk.dense(std::min(t_next, rk.t()), buf);
      ts.times.push_back(t_next);
      ts.states.emplace_back(buf);
      t_next += sample_dt;
    }
  }
  if (ts.times.back() < t_total - 1e-9) {
    ts.times.push_back(t_total);
    ts.states.emplace_back(rk.y().begin(), rk.y().end());
  }
  return ts;
}

namespace {

// Polynomial interpolation (Neville) through up to four samples around a
// bracket; used to refine crossing times well below the sampling step.
double interp_value(const Timeseries& ts, std::size_t var, std::size_t left, double t) {
  const std::size_t n = ts.size();
  const std::size_t lo = left >= 1 ? left - 1 : 0;
  const std::size_t hi = std::min(left + 2, n - 1);
  const std::size_t m = hi - lo + 1;
  double xs[4], ys[4];
  for (std::size_t i = 0; i < m; ++i) {
    xs[i] = ts.times[lo + i];
    ys[i] = ts.value(lo + i, var);
  }
  for (std::size_t level = 1; level < m; ++level) {
    for (std::size_t i = 0; i + level < m; ++i) {
      ys[i] = ((t - xs[i + level]) * ys[i] + (xs[i] - t) * ys[i + 1]) / (xs[i] - xs[i + level]);
    }
  }
  return ys[0];
}

double refine_crossing(const Timeseries& ts, std::size_t var, double threshold, bool up,
                       std::size_t left) {
  double ta = ts.times[left], tb = ts.times[left + 1];
  auto g = [&](double t) { return interp_value(ts, var, left, t) - threshold; };
  double ga = g(ta);
  for (int it = 0; it < 80 && (tb - ta) > 1e-13 * std::max(1.0, std::abs(tb)); ++it) {
    const double tm = 0.5 * (ta + tb);
    const double gm = g(tm);
    const bool left_side = up ? (gm < 0) : (gm > 0);
    if (left_side == (up ? (ga < 0) : (ga > 0))) {
      ta = tm;
      ga = gm;
    } else {
      tb = tm;
    }
  }
  return 0.5 * (ta + tb);
}

}  // namespace

std::vector<double> find_crossings(const Timeseries& ts, std::size_t var, double level,
                                   Direction dir, double min_separation) {
  std::vector<double> crossings;
  if (ts.size() < 2) return crossings;
  const bool up = dir == Direction::up;
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    const double a = ts.value(i, var) - level;
    const double b = ts.value(i + 1, var) - level;
    const bool crossed = up ? (a < 0 && b >= 0) : (a > 0 && b <= 0);
    if (!crossed) continue;
    const double t = refine_crossing(ts, var, level, up, i);
    if (!crossings.empty() && t - crossings.back() < min_separation) continue;
    crossings.push_back(t);
  }
  return crossings;
}

PeriodEstimate estimate_period(const Timeseries& ts, std::size_t var, double threshold,
                               Direction dir, double t_measure) {
  PeriodEstimate pe;
  if (ts.size() < 4) return pe;
  const double t_begin = ts.times.back() - t_measure;

  std::vector<double> crossings = find_crossings(ts, var, threshold, dir);
  std::erase_if(crossings, [&](double t) { return t < t_begin; });
  pe.crossings = static_cast<int>(crossings.size());
  if (crossings.size() < 3) return pe;

  double sum = 0;
  for (std::size_t i = 0; i + 1 < crossings.size(); ++i) sum += crossings[i + 1] - crossings[i];
  const double mean = sum / static_cast<double>(crossings.size() - 1);
  double dev = 0;
  for (std::size_t i = 0; i + 1 < crossings.size(); ++i) {
    dev = std::max(dev, std::abs(crossings[i + 1] - crossings[i] - mean));
  }
  pe.periodic = true;
  pe.period = mean;
  pe.spread = dev;
  return pe;
}

namespace {

// Oscillation test for one sweep entry: enough crossings, regular spacing
// and no decaying amplitude across the measured window.
bool looks_oscillatory(const Timeseries& xs, const PeriodEstimate& pe, double t_measure) {
  if (!pe.periodic) return false;
  if (pe.spread > 0.05 * pe.period) return false;
  const double t_end = xs.times.back();
  auto amplitude = [&](double a, double b) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (xs.times[i] < a || xs.times[i] > b) continue;
      lo = std::min(lo, xs.value(i, 0));
      hi = std::max(hi, xs.value(i, 0));
    }
    return hi - lo;
  };
  const double recent = amplitude(t_end - 0.25 * t_measure, t_end);
  const double earlier = amplitude(t_end - t_measure, t_end - 0.75 * t_measure);
  return recent > 1e-3 && recent > 0.5 * earlier;
}

}  // namespace

AlphaSweepResult period_vs_alpha(const ReducedParams& base, std::span<const double> alpha_grid,
                                 const IntegratorConfig& cfg) {
  base.validate();
  cfg.validate();
  for (std::size_t i = 0; i < alpha_grid.size(); ++i) {
    if (!(alpha_grid[i] > 0)) throw std::invalid_argument("period_vs_alpha: alpha must be positive");
    if (i > 0 && alpha_grid[i] <= alpha_grid[i - 1]) {
      throw std::invalid_argument("period_vs_alpha: alpha grid must be increasing");
    }
  }

  AlphaSweepResult result;
  result.points.reserve(alpha_grid.size());
  for (double alpha : alpha_grid) {
    ReducedParams p = base;
    p.alpha = alpha;
    const Rhs rhs = [p](double, std::span<const double> y, std::span<double> dy) {
      const ReducedState s{y[0], y[1], y[2], y[3]};
      const auto d = rhs_reduced(s, p);
      std::copy(d.begin(), d.end(), dy.begin());
    };
    const std::vector<double> y0{1.0, 0.0, 0.0, 0.0};
    const double t_total = cfg.t_transient + cfg.t_measure;
    Timeseries full = integrate(rhs, y0, cfg, t_total, 0.02, "reduced");

    // difference series x = b - p, the comparator used across model forms
    Timeseries xs;
    xs.model = "reduced:x";
    xs.times = full.times;
    xs.states.reserve(full.size());
    for (const auto& s : full.states) xs.states.push_back({s[0] - s[3]});

    const PeriodEstimate pe = estimate_period(xs, 0, 0.0, Direction::up, cfg.t_measure);
    AlphaSweepPoint pt;
    pt.alpha = alpha;
    pt.period = pe.period;
    pt.spread = pe.spread;
    pt.oscillatory = looks_oscillatory(xs, pe, cfg.t_measure);
    result.points.push_back(pt);
  }

  const double alpha_max = alpha_grid.empty() ? 0 : alpha_grid.back();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0;
  int count = 0;
  for (const auto& pt : result.points) {
    if (!pt.oscillatory || pt.alpha < alpha_max / 10.0) continue;
    lo = std::min(lo, pt.period);
    hi = std::max(hi, pt.period);
    sum += pt.period;
    ++count;
  }
  result.plateau_rel_change =
      count >= 2 ? (hi - lo) / (sum / count) : std::numeric_limits<double>::quiet_NaN();
  return result;
}

double check_y_abs_x(const Timeseries& transformed_ts) {
  double worst = 0;
  for (const auto& s : transformed_ts.states) {
    worst = std::max(worst, std::abs(s[3] - std::abs(s[0])));
  }
  return worst;
}

}  // namespace seqclock
