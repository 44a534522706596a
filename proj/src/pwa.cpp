#include "seqclock/pwa.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "seqclock/format.hpp"

namespace seqclock {

namespace {

constexpr double kDegenTol = 1e-9;  // relative tolerance on removable denominators

bool nearly_equal(double a, double b, double scale) { return std::abs(a - b) <= kDegenTol * scale; }

// Closed-form flow of one affine subsystem, precomputed once per segment.
//
//   dx/dt = h + u - eps*d      h = 1 below the r threshold, 0 above
//   dd/dt = f_b(x) - beta*d    f_b = x above the x threshold, 0 below
//   dr/dt = gamma*d - delta*r
//
// With f_b = 0 the system is lower triangular; with f_b = x the (x, d)
// block has eigenvalues -beta/2 +- sqrt(beta^2 - 4 eps)/2 and the solution
// branches on their type. Removable denominators (beta = delta in the r
// response, eigenvalue hitting -delta, critically damped pair) use the
// analytic limit expression.
class RegionFlow {
 public:
  RegionFlow(const Region& region, const PwaState& s0, const ReducedParams& p, double x_drive)
      : beta_(p.beta), delta_(p.delta), eps_(p.epsilon), gamma_(p.gamma) {
    x0_ = s0.x;
    d0_ = s0.d;
    r0_ = s0.r;
    hu_ = (region.r_above ? 0.0 : 1.0) + x_drive;
    coupled_ = region.x_above;
    if (!coupled_) {
      resonant_rd_ = nearly_equal(beta_, delta_, std::max(beta_, delta_));
      return;
    }
    mu_ = -0.5 * beta_;
    const double disc = beta_ * beta_ - 4.0 * eps_;
    const double disc_scale = std::max(beta_ * beta_, 4.0 * eps_);
    if (std::abs(disc) <= kDegenTol * disc_scale) {
      branch_ = Branch::critical;
      om_ = 0;
    } else if (disc < 0) {
      branch_ = Branch::elliptic;
      om_ = 0.5 * std::sqrt(-disc);
    } else {
      branch_ = Branch::hyperbolic;
      om_ = 0.5 * std::sqrt(disc);
    }
    d_eq_ = hu_ / eps_;
    x_eq_ = beta_ * hu_ / eps_;
    wx_ = x0_ - x_eq_;
    wd_ = d0_ - d_eq_;
    a_ = mu_ + delta_;
    if (branch_ == Branch::hyperbolic) {
      const double q = (wx_ - 0.5 * beta_ * wd_) / om_;
      c1_ = 0.5 * (wd_ + q);
      c2_ = 0.5 * (wd_ - q);
      l1_ = mu_ + om_;
      l2_ = mu_ - om_;
    }
  }

  void eval(double t, double& x, double& d, double& r) const {
    const double ed = std::exp(-delta_ * t);
    if (!coupled_) {
      const double eb = std::exp(-beta_ * t);
      d = d0_ * eb;
      x = x0_ + hu_ * t - eps_ * d0_ * (1.0 - eb) / beta_;
      const double psi = resonant_rd_ ? t * ed : (eb - ed) / (delta_ - beta_);
      r = r0_ * ed + gamma_ * d0_ * psi;
      return;
    }
    const double em = std::exp(mu_ * t);
    const double bh = 0.5 * beta_;
    double dint = 0;  // integral of (d(s) - d_eq) against the r kernel
    switch (branch_) {
      case Branch::elliptic: {
        const double co = std::cos(om_ * t);
        const double si = std::sin(om_ * t);
        const double S = si / om_;
        x = em * ((co + bh * S) * wx_ - eps_ * S * wd_) + x_eq_;
        d = em * (S * wx_ + (co - bh * S) * wd_) + d_eq_;
        const double denom = a_ * a_ + om_ * om_;
        const double P = wd_;
        const double Q = (wx_ - bh * wd_) / om_;
        const double ic = (em * (a_ * co + om_ * si) - a_ * ed) / denom;
        const double is = (em * (a_ * si - om_ * co) + om_ * ed) / denom;
        dint = P * ic + Q * is;
        break;
      }
      case Branch::hyperbolic: {
        const double ch = std::cosh(om_ * t);
        const double sh = std::sinh(om_ * t);
        const double S = sh / om_;
        x = em * ((ch + bh * S) * wx_ - eps_ * S * wd_) + x_eq_;
        d = em * (S * wx_ + (ch - bh * S) * wd_) + d_eq_;
        dint = c1_ * mode_response(l1_, t, ed) + c2_ * mode_response(l2_, t, ed);
        break;
      }
      case Branch::critical: {
        x = em * ((1.0 + bh * t) * wx_ - eps_ * t * wd_) + x_eq_;
        d = em * (t * wx_ + (1.0 - bh * t) * wd_) + d_eq_;
        const double p0 = wd_;
        const double q0 = wx_ - bh * wd_;
        if (std::abs(a_) <= kDegenTol * std::max(std::abs(mu_), delta_)) {
          dint = ed * (p0 * t + 0.5 * q0 * t * t);
        } else {
          dint = p0 * (em - ed) / a_ + q0 * (t * em / a_ - (em - ed) / (a_ * a_));
        }
        break;
      }
    }
    r = r0_ * ed + gamma_ * (d_eq_ * (1.0 - ed) / delta_ + dint);
  }

 private:
  enum class Branch { elliptic, hyperbolic, critical };

  // integral of e^{-delta (t-s)} e^{lambda s} over [0, t]
  double mode_response(double lambda, double t, double ed) const {
    const double den = lambda + delta_;
    if (std::abs(den) <= kDegenTol * std::max(std::abs(lambda), delta_)) return t * ed;
    return (std::exp(lambda * t) - ed) / den;
  }

  double beta_, delta_, eps_, gamma_;
  double x0_ = 0, d0_ = 0, r0_ = 0;
  double hu_ = 0;
  bool coupled_ = false;
  bool resonant_rd_ = false;
  Branch branch_ = Branch::elliptic;
  double mu_ = 0, om_ = 0;
  double x_eq_ = 0, d_eq_ = 0, wx_ = 0, wd_ = 0;
  double a_ = 0;
  double c1_ = 0, c2_ = 0, l1_ = 0, l2_ = 0;
};

int sign_of(double v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }

// Scan resolution: a fraction of the fastest relevant timescale, so no
// transversal crossing fits between two consecutive samples.
double scan_step(const Region& region, const ReducedParams& p) {
  double scale = std::min(1.0 / p.beta, 1.0 / p.delta);
  if (region.x_above) {
    const double disc = p.beta * p.beta - 4.0 * p.epsilon;
    if (disc < 0) {
      const double om = 0.5 * std::sqrt(-disc);
      scale = std::min(scale, 2.0 * M_PI / om);
    } else {
      scale = std::min(scale, 2.0 / p.beta);
    }
  }
  return scale / 16.0;
}

}  // namespace

std::string Region::code() const {
  std::string s(3, ' ');
  s[0] = r_above ? 'R' : 'r';
  s[1] = x_above ? 'X' : 'x';
  s[2] = d_above ? 'D' : 'd';
  return s;
}

Region Region::from_code(std::string_view code) {
  auto bad = [&] {
    throw std::invalid_argument("Region::from_code: invalid code '" + std::string(code) + "'");
  };
  if (code.size() != 3) bad();
  Region reg;
  if (code[0] == 'R') reg.r_above = true;
  else if (code[0] != 'r') bad();
  if (code[1] == 'X') reg.x_above = true;
  else if (code[1] != 'x') bad();
  if (code[2] == 'D') reg.d_above = true;
  else if (code[2] != 'd') bad();
  return reg;
}

std::string_view face_name(Face f) {
  switch (f) {
    case Face::x: return "x";
    case Face::d: return "d";
    case Face::r: return "r";
    default: return "none";
  }
}

Region classify_region(const PwaState& s, const ReducedParams& p, double x_drive) {
  p.validate();
  const double ds = p.d_star();
  int sr = sign_of(s.r - 1.0);
  int sx = sign_of(s.x);
  int sd = sign_of(s.d - ds);

  // Boundary coordinates take the side their own flow enters. r's side on
  // its threshold depends only on d, x's on r and d, d's on x; three passes
  // settle every resolvable combination.
  for (int pass = 0; pass < 3 && (sr == 0 || sx == 0 || sd == 0); ++pass) {
    if (sr == 0) {
      const double dr = p.gamma * s.d - p.delta;  // on r = 1
      if (dr != 0) sr = sign_of(dr);
    }
    if (sx == 0 && sr != 0) {
      const double dx = (sr < 0 ? 1.0 : 0.0) + x_drive - p.epsilon * s.d;
      if (dx != 0) sx = sign_of(dx);
    }
    if (sd == 0 && sx != 0) {
      const double dd = (sx > 0 ? s.x : 0.0) - p.beta * s.d;
      if (dd != 0) sd = sign_of(dd);
    }
  }
  if (sr == 0 || sx == 0 || sd == 0) {
    throw PwaError(PwaError::Kind::degenerate_point,
                   "classify_region: flow cannot resolve the threshold side at (x=" +
                       fmt_double(s.x) + ", d=" + fmt_double(s.d) + ", r=" + fmt_double(s.r) + ")");
  }
  return Region{sr > 0, sx > 0, sd > 0};
}

PwaState solve_affine(const Region& region, const PwaState& s0, const ReducedParams& p, double t,
                      double x_drive) {
  p.validate();
  if (t < 0) throw std::invalid_argument("solve_affine: t must be >= 0");
  RegionFlow flow(region, s0, p, x_drive);
  PwaState out;
  flow.eval(t, out.x, out.d, out.r);
  out.t = s0.t + t;
  if (!std::isfinite(out.x) || !std::isfinite(out.d) || !std::isfinite(out.r)) {
    throw PwaError(PwaError::Kind::overflow, "solve_affine: non-finite state at t = " + fmt_double(t));
  }
  return out;
}

namespace {

struct EventFn {
  Face face;
  double threshold;
  int exit_sign;  // sign of (value - threshold) in the neighbouring region
};

double face_value(const PwaState& s, Face face) {
  switch (face) {
    case Face::x: return s.x;
    case Face::d: return s.d;
    case Face::r: return s.r;
    default: return 0;
  }
}

}  // namespace

AffineSegment advance_to_event(const PwaState& s0, const ReducedParams& p, double t_max,
                               double x_drive, const PwaSimOptions& opts) {
  if (!(t_max > 0)) throw std::invalid_argument("advance_to_event: t_max must be positive");
  const Region region = classify_region(s0, p, x_drive);
  const double ds = p.d_star();
  RegionFlow flow(region, s0, p, x_drive);

  const EventFn events[3] = {
      {Face::x, 0.0, region.x_above ? -1 : 1},
      {Face::d, ds, region.d_above ? -1 : 1},
      {Face::r, 1.0, region.r_above ? -1 : 1},
  };

  auto eval = [&](double t) {
    PwaState s;
    flow.eval(t, s.x, s.d, s.r);
    s.t = s0.t + t;
    if (!std::isfinite(s.x) || !std::isfinite(s.d) || !std::isfinite(s.r)) {
      throw PwaError(PwaError::Kind::overflow,
                     "advance_to_event: non-finite state at t = " + fmt_double(t));
    }
    return s;
  };
  auto exited = [&](const PwaState& s, const EventFn& ev) {
    return sign_of(face_value(s, ev.face) - ev.threshold) == ev.exit_sign;
  };

  const double dt = std::min(scan_step(region, p), t_max);
  double t_lo = 0.0;
  double crossing_time[3];
  bool crossed[3] = {false, false, false};

  for (;;) {
    const double t_hi = std::min(t_lo + dt, t_max);
    const PwaState s_hi = eval(t_hi);
    for (int i = 0; i < 3; ++i) {
      if (!exited(s_hi, events[i])) continue;
      // refine the bracket [t_lo, t_hi] on the closed-form solution
      double lo = t_lo, hi = t_hi;
      while (hi - lo > opts.event_tol) {
        const double mid = 0.5 * (lo + hi);
        (exited(eval(mid), events[i]) ? hi : lo) = mid;
      }
      crossed[i] = true;
      crossing_time[i] = 0.5 * (lo + hi);
    }
    if (crossed[0] || crossed[1] || crossed[2]) break;
    if (t_hi >= t_max) {
      AffineSegment seg;
      seg.region = region;
      seg.t_start = s0.t;
      seg.t_end = s0.t + t_max;
      seg.entry_state = s0;
      seg.exit_state = eval(t_max);
      seg.exit_face = Face::none;
      seg.x_drive = x_drive;
      return seg;
    }
    t_lo = t_hi;
  }

  int first = -1;
  for (int i = 0; i < 3; ++i) {
    if (crossed[i] && (first < 0 || crossing_time[i] < crossing_time[first])) first = i;
  }
  for (int i = 0; i < 3; ++i) {
    if (i != first && crossed[i] &&
        std::abs(crossing_time[i] - crossing_time[first]) <= opts.event_tol) {
      throw PwaError(PwaError::Kind::simultaneous_crossing,
                     std::string("advance_to_event: faces ") + std::string(face_name(events[first].face)) +
                         " and " + std::string(face_name(events[i].face)) +
                         " cross within the bracketing tolerance at t = " +
                         fmt_double(s0.t + crossing_time[first]));
    }
  }
  const double t_ev = crossing_time[first];
  if (t_ev <= opts.event_tol) {
    throw PwaError(PwaError::Kind::chattering,
                   "advance_to_event: crossing within tolerance of the segment start at t = " +
                       fmt_double(s0.t));
  }

  AffineSegment seg;
  seg.region = region;
  seg.t_start = s0.t;
  seg.t_end = s0.t + t_ev;
  seg.entry_state = s0;
  seg.exit_state = eval(t_ev);
  switch (events[first].face) {  // land exactly on the crossed threshold
    case Face::x: seg.exit_state.x = 0.0; break;
    case Face::d: seg.exit_state.d = ds; break;
    case Face::r: seg.exit_state.r = 1.0; break;
    default: break;
  }
  seg.exit_state.t = seg.t_end;
  seg.exit_face = events[first].face;
  seg.x_drive = x_drive;
  return seg;
}

HybridTrajectory simulate_pwa(const PwaState& s0, const ReducedParams& p, double t_total,
                              const PwaSimOptions& opts) {
  if (!(t_total > 0)) throw std::invalid_argument("simulate_pwa: t_total must be positive");
  p.validate();
  HybridTrajectory traj;
  traj.params = p;
  PwaState s = s0;
  const double t_end = s0.t + t_total;
  while (s.t < t_end - 1e-12) {
    if (traj.segments.size() >= opts.max_segments) {
      throw PwaError(PwaError::Kind::chattering,
                     "simulate_pwa: segment cap of " + std::to_string(opts.max_segments) +
                         " exceeded (chattering?)");
    }
    AffineSegment seg = advance_to_event(s, p, t_end - s.t, 0.0, opts);
    s = seg.exit_state;
    traj.transition_log.push_back(seg.region);
    traj.segments.push_back(std::move(seg));
  }
  return traj;
}

double HybridTrajectory::t_begin() const {
  return segments.empty() ? 0.0 : segments.front().t_start;
}

double HybridTrajectory::t_end() const { return segments.empty() ? 0.0 : segments.back().t_end; }

PwaState HybridTrajectory::state_at(double t) const {
  if (segments.empty()) throw std::out_of_range("state_at: empty trajectory");
  if (t < t_begin() - 1e-9 || t > t_end() + 1e-9) {
    throw std::out_of_range("state_at: t = " + fmt_double(t) + " outside [" +
                            fmt_double(t_begin()) + ", " + fmt_double(t_end()) + "]");
  }
  auto it = std::upper_bound(segments.begin(), segments.end(), t,
                             [](double tt, const AffineSegment& seg) { return tt < seg.t_end; });
  if (it == segments.end()) --it;
  const AffineSegment& seg = *it;
  const double local = std::clamp(t - seg.t_start, 0.0, seg.t_end - seg.t_start);
  return solve_affine(seg.region, seg.entry_state, params, local, seg.x_drive);
}

std::vector<double> HybridTrajectory::face_crossings(Face face, bool upward,
                                                     double min_separation) const {
  std::vector<double> times;
  for (const auto& seg : segments) {
    if (seg.exit_face != face) continue;
    bool below = false;
    switch (face) {
      case Face::x: below = !seg.region.x_above; break;
      case Face::d: below = !seg.region.d_above; break;
      case Face::r: below = !seg.region.r_above; break;
      default: break;
    }
    if (below != upward) continue;
    if (!times.empty() && seg.t_end - times.back() < min_separation) continue;
    times.push_back(seg.t_end);
  }
  return times;
}

void HybridTrajectory::write_csv(std::ostream& os, double sample_dt) const {
  os << "t,x,d,r,region\n";
  if (segments.empty()) return;
  if (!(sample_dt > 0)) throw std::invalid_argument("write_csv: sample_dt must be positive");

  auto row = [&](double t, const PwaState& s, const Region& reg) {
    os << fmt_double(t) << ',' << fmt_double(s.x) << ',' << fmt_double(s.d) << ','
       << fmt_double(s.r) << ',' << reg.code() << '\n';
  };

  double t_sample = t_begin();
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const AffineSegment& seg = segments[i];
    while (t_sample < seg.t_end - 1e-12) {
      row(t_sample, state_at(t_sample), seg.region);
      t_sample += sample_dt;
    }
    if (seg.exit_face != Face::none) {
      const Region entered = (i + 1 < segments.size()) ? segments[i + 1].region
                                                       : classify_region(seg.exit_state, params);
      row(seg.t_end, seg.exit_state, entered);
      if (std::abs(t_sample - seg.t_end) < 1e-12) t_sample += sample_dt;
    }
  }
  const AffineSegment& last = segments.back();
  if (last.exit_face == Face::none) row(last.t_end, last.exit_state, last.region);
}

PwaPeriod extract_period_pwa(const HybridTrajectory& traj) {
  PwaPeriod result;
  if (traj.segments.empty()) return result;
  const double t_mid = 0.5 * (traj.t_begin() + traj.t_end());
  std::vector<double> markers = traj.face_crossings(Face::x, true);
  std::erase_if(markers, [&](double t) { return t < t_mid; });
  result.returns = static_cast<int>(markers.size());
  if (markers.size() < 3) return result;

  double sum = 0;
  for (std::size_t i = 0; i + 1 < markers.size(); ++i) sum += markers[i + 1] - markers[i];
  const double mean = sum / static_cast<double>(markers.size() - 1);
  double dev = 0;
  for (std::size_t i = 0; i + 1 < markers.size(); ++i) {
    dev = std::max(dev, std::abs(markers[i + 1] - markers[i] - mean));
  }
  result.periodic = true;
  result.period = mean;
  result.max_dev = dev;
  return result;
}

}  // namespace seqclock
