#include "seqclock/phase.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <ostream>
#include <stdexcept>

#include "json.hpp"
#include "seqclock/format.hpp"
#include "seqclock/models.hpp"
#include "seqclock/parallel.hpp"

namespace seqclock {

void PulseSpec::validate() const {
  if (!(length > 0)) throw std::invalid_argument("PulseSpec: length must be positive");
  if (!std::isfinite(amplitude)) throw std::invalid_argument("PulseSpec: amplitude must be finite");
}

void PeriodicStimulus::validate() const {
  pulse.validate();
  if (!(period > pulse.length)) {
    throw std::invalid_argument("PeriodicStimulus: period must exceed the pulse length");
  }
}

double kuramoto_k(std::span<const double> phases) {
  if (phases.empty()) throw std::invalid_argument("kuramoto_k: empty phase list");
  std::complex<double> sum{0, 0};
  for (double phi : phases) sum += std::polar(1.0, phi);
  return std::abs(sum) / static_cast<double>(phases.size());
}

double PhaseMap::operator()(double t) const {
  const auto& m = marker_times;
  // clamp to the edge intervals outside the marker span
  std::size_t i;
  if (t <= m.front()) {
    i = 0;
  } else if (t >= m.back()) {
    i = m.size() - 2;
  } else {
    i = static_cast<std::size_t>(std::upper_bound(m.begin(), m.end(), t) - m.begin()) - 1;
  }
  const double span = m[i + 1] - m[i];
  return 2.0 * M_PI * (static_cast<double>(i) + (t - m[i]) / span);
}

PhaseMap phase_from_markers(std::vector<double> marker_times) {
  if (marker_times.size() < 2) {
    throw std::invalid_argument("phase_from_markers: need at least 2 marker events");
  }
  for (std::size_t i = 0; i + 1 < marker_times.size(); ++i) {
    if (marker_times[i + 1] <= marker_times[i]) {
      throw std::invalid_argument("phase_from_markers: marker times must increase");
    }
  }
  PhaseMap pm;
  pm.marker_times = std::move(marker_times);
  return pm;
}

PhaseMap phase_from_timeseries(const Timeseries& ts, std::size_t var, double level,
                               double min_separation) {
  return phase_from_markers(find_crossings(ts, var, level, Direction::up, min_separation));
}

// ---------------------------------------------------------------------------
// PWA drivers
// ---------------------------------------------------------------------------

PwaAttractor find_pwa_attractor(const ReducedParams& p, double t_settle) {
  p.validate();
  const PwaState s0{1.0, 0.0, 0.0, 0.0};
  const HybridTrajectory traj = simulate_pwa(s0, p, t_settle);
  const PwaPeriod pe = extract_period_pwa(traj);
  if (!pe.periodic) {
    throw std::runtime_error("find_pwa_attractor: no sustained oscillation detected");
  }
  PwaAttractor att;
  att.T_fr = pe.period;
  for (auto it = traj.segments.rbegin(); it != traj.segments.rend(); ++it) {
    if (it->exit_face == Face::x && !it->region.x_above) {
      att.state = it->exit_state;
      att.state.t = 0;
      return att;
    }
  }
  throw std::runtime_error("find_pwa_attractor: no upward x crossing found");
}

HybridTrajectory simulate_pwa_pulsed(const PwaState& s0, const ReducedParams& p, double t_total,
                                     const PulseSpec& pulse, std::span<const double> onsets,
                                     const PwaSimOptions& opts) {
  pulse.validate();
  if (!(t_total > 0)) throw std::invalid_argument("simulate_pwa_pulsed: t_total must be positive");
  struct Edge {
    double t;
    double drive_after;
  };
  std::vector<Edge> edges;
  edges.reserve(2 * onsets.size());
  for (std::size_t i = 0; i < onsets.size(); ++i) {
    if (i > 0 && onsets[i] < onsets[i - 1] + pulse.length) {
      throw std::invalid_argument("simulate_pwa_pulsed: overlapping pulses");
    }
    edges.push_back({onsets[i], pulse.amplitude});
    edges.push_back({onsets[i] + pulse.length, 0.0});
  }

  HybridTrajectory traj;
  traj.params = p;
  PwaState s = s0;
  const double t_end_all = s0.t + t_total;

  double drive = 0.0;
  std::size_t next_edge = 0;
  while (next_edge < edges.size() && edges[next_edge].t <= s.t + 1e-12) {
    drive = edges[next_edge].drive_after;
    ++next_edge;
  }

  while (s.t < t_end_all - 1e-12) {
    if (traj.segments.size() >= opts.max_segments) {
      throw PwaError(PwaError::Kind::chattering, "simulate_pwa_pulsed: segment cap exceeded");
    }
    const double t_stop =
        next_edge < edges.size() ? std::min(edges[next_edge].t, t_end_all) : t_end_all;
    if (t_stop - s.t > 1e-12) {
      AffineSegment seg = advance_to_event(s, p, t_stop - s.t, drive, opts);
      s = seg.exit_state;
      traj.transition_log.push_back(seg.region);
      traj.segments.push_back(std::move(seg));
    }
    if (next_edge < edges.size() && s.t >= edges[next_edge].t - 1e-12) {
      drive = edges[next_edge].drive_after;
      ++next_edge;
    }
  }
  return traj;
}

namespace {

// Asymptotic shift: perturbed marker versus the nearest reference marker,
// which also reduces the shift to the principal branch. Advance positive.
double shift_against_reference(const std::vector<double>& ref_markers, double t_pert) {
  auto it = std::lower_bound(ref_markers.begin(), ref_markers.end(), t_pert);
  double best = std::numeric_limits<double>::infinity();
  if (it != ref_markers.end()) best = *it - t_pert;
  if (it != ref_markers.begin()) {
    const double lower = *(it - 1) - t_pert;
    if (std::abs(lower) < std::abs(best)) best = lower;
  }
  return best;
}

}  // namespace

PrcResult compute_prc(const ReducedParams& p, const PulseSpec& pulse, int n_phases,
                      const PhaseToolsConfig& cfg) {
  pulse.validate();
  if (n_phases < 2) throw std::invalid_argument("compute_prc: n_phases must be >= 2");
  const PwaAttractor att = find_pwa_attractor(p, cfg.t_settle);
  const double T = att.T_fr;
  const double refractory = cfg.refractory_frac * T;
  const double t_total = (cfg.post_pulse_cycles + 3) * T;

  const HybridTrajectory ref = simulate_pwa(att.state, p, t_total);
  const std::vector<double> ref_markers = ref.face_crossings(Face::x, true, refractory);
  if (ref_markers.size() < 3) {
    throw std::runtime_error("compute_prc: reference run lost periodicity");
  }

  PrcResult out;
  out.T_fr = T;
  out.marker = "x crosses 0 upward";
  out.points.resize(static_cast<std::size_t>(n_phases));
  parallel_for_index(static_cast<std::size_t>(n_phases), [&](std::size_t i) {
    const double phase = static_cast<double>(i) / n_phases;
    const double onset = phase * T;
    const HybridTrajectory pert =
        simulate_pwa_pulsed(att.state, p, t_total, pulse, std::span(&onset, 1));
    const std::vector<double> markers = pert.face_crossings(Face::x, true, refractory);
    if (markers.empty()) {
      throw std::runtime_error("compute_prc: perturbed run has no marker events");
    }
    PrcPoint pt;
    pt.phase = phase;
    pt.shift_h = shift_against_reference(ref_markers, markers.back());
    pt.x_positive = ref.state_at(onset).x > 0;
    out.points[i] = pt;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Goodwin drivers
// ---------------------------------------------------------------------------

namespace {

Rhs goodwin_rhs(const GoodwinParams& gp, double z_drive) {
  return [gp, z_drive](double, std::span<const double> y, std::span<double> dy) {
    const GoodwinState s{y[0], y[1], y[2]};
    const auto d = rhs_goodwin(s, gp);
    dy[0] = d[0];
    dy[1] = d[1];
    dy[2] = d[2] + z_drive;
  };
}

struct GoodwinRef {
  std::vector<double> y_marker;  // state exactly at an upward mean-crossing of Z
  double z_mean = 0;
  double period = 0;
  Timeseries one_cycle;  // reference cycle sampled from the marker state
};

GoodwinRef find_goodwin_ref(const GoodwinParams& gp, const PhaseToolsConfig& cfg) {
  gp.validate();
  const std::vector<double> y0{0.1, 0.1, 0.1};
  const Timeseries ts = integrate(goodwin_rhs(gp, 0.0), y0, cfg.ode, cfg.t_settle, 0.05, "goodwin");

  const double window = 0.25 * cfg.t_settle;
  const double t_from = cfg.t_settle - window;
  double sum = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (ts.times[i] < t_from) continue;
    sum += ts.value(i, 2);
    ++count;
  }
  if (count == 0) throw std::runtime_error("find_goodwin_ref: empty analysis window");
  const double z_mean = sum / static_cast<double>(count);

  const PeriodEstimate pe = estimate_period(ts, 2, z_mean, Direction::up, window);
  if (!pe.periodic || pe.spread > 0.05 * pe.period) {
    throw std::runtime_error("find_goodwin_ref: no sustained oscillation detected");
  }

  const std::vector<double> markers =
      find_crossings(ts, 2, z_mean, Direction::up, cfg.refractory_frac * pe.period);
  const double t_marker = markers.back();
  std::size_t idx = ts.size() - 1;
  while (idx > 0 && ts.times[idx] > t_marker) --idx;

  AdaptiveRk rk(goodwin_rhs(gp, 0.0), ts.states[idx], ts.times[idx], cfg.ode);
  while (rk.step(t_marker)) {
  }

  GoodwinRef ref;
  ref.y_marker.assign(rk.y().begin(), rk.y().end());
  ref.z_mean = z_mean;
  ref.period = pe.period;
  ref.one_cycle = integrate(goodwin_rhs(gp, 0.0), ref.y_marker, cfg.ode, pe.period, 0.01, "goodwin");
  return ref;
}

// Integrates the Goodwin model through pulse legs, recording upward
// crossings of Z through `level` (refined on the dense output).
std::vector<double> goodwin_marker_run(const GoodwinParams& gp, std::span<const double> y_start,
                                       double t_total, const PulseSpec& pulse,
                                       std::span<const double> onsets, double level,
                                       double refractory, const IntegratorConfig& cfg) {
  struct Edge {
    double t;
    double drive_after;
  };
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < onsets.size(); ++i) {
    if (i > 0 && onsets[i] < onsets[i - 1] + pulse.length) {
      throw std::invalid_argument("goodwin_marker_run: overlapping pulses");
    }
    edges.push_back({onsets[i], pulse.amplitude});
    edges.push_back({onsets[i] + pulse.length, 0.0});
  }

  std::vector<double> markers;
  std::vector<double> y(y_start.begin(), y_start.end());
  std::vector<double> buf(y.size());
  double t = 0;
  double drive = 0;
  std::size_t next_edge = 0;
  double g_prev = y[2] - level;

  while (t < t_total - 1e-12) {
    const double t_stop = next_edge < edges.size() ? std::min(edges[next_edge].t, t_total) : t_total;
    if (t_stop - t > 1e-12) {
      AdaptiveRk rk(goodwin_rhs(gp, drive), y, t, cfg);
      while (rk.step(t_stop)) {
        const double g_now = rk.y()[2] - level;
        if (g_prev < 0 && g_now >= 0) {
          double lo = rk.t_prev(), hi = rk.t();
          for (int it = 0; it < 60 && hi - lo > 1e-10; ++it) {
            const double mid = 0.5 * (lo + hi);
            rk.dense(mid, buf);
            (buf[2] - level >= 0 ? hi : lo) = mid;
          }
          const double tm = 0.5 * (lo + hi);
          if (markers.empty() || tm - markers.back() >= refractory) markers.push_back(tm);
        }
        g_prev = g_now;
      }
      y.assign(rk.y().begin(), rk.y().end());
      t = rk.t();
    }
    if (next_edge < edges.size() && t >= edges[next_edge].t - 1e-12) {
      drive = edges[next_edge].drive_after;
      ++next_edge;
    }
  }
  return markers;
}

double series_value_at(const Timeseries& ts, std::size_t var, double t) {
  if (t <= ts.times.front()) return ts.value(0, var);
  if (t >= ts.times.back()) return ts.value(ts.size() - 1, var);
  const auto it = std::upper_bound(ts.times.begin(), ts.times.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - ts.times.begin()) - 1;
  const double w = (t - ts.times[i]) / (ts.times[i + 1] - ts.times[i]);
  return (1 - w) * ts.value(i, var) + w * ts.value(i + 1, var);
}

}  // namespace

double goodwin_free_period(const GoodwinParams& p, const PhaseToolsConfig& cfg) {
  return find_goodwin_ref(p, cfg).period;
}

PrcResult compute_prc(const GoodwinParams& p, const PulseSpec& pulse, int n_phases,
                      const PhaseToolsConfig& cfg) {
  pulse.validate();
  if (n_phases < 2) throw std::invalid_argument("compute_prc: n_phases must be >= 2");
  const GoodwinRef ref = find_goodwin_ref(p, cfg);
  const double T = ref.period;
  const double refractory = cfg.refractory_frac * T;
  const double t_total = (cfg.post_pulse_cycles + 3) * T;

  const std::vector<double> ref_markers = goodwin_marker_run(
      p, ref.y_marker, t_total, PulseSpec{0.0, pulse.length}, {}, ref.z_mean, refractory, cfg.ode);
  if (ref_markers.size() < 3) {
    throw std::runtime_error("compute_prc: Goodwin reference run lost periodicity");
  }

  PrcResult out;
  out.T_fr = T;
  out.marker = "Z crosses its trajectory mean upward";
  out.points.resize(static_cast<std::size_t>(n_phases));
  parallel_for_index(static_cast<std::size_t>(n_phases), [&](std::size_t i) {
    const double phase = static_cast<double>(i) / n_phases;
    const double onset = phase * T;
    const std::vector<double> markers =
        goodwin_marker_run(p, ref.y_marker, t_total, pulse, std::span(&onset, 1), ref.z_mean,
                           refractory, cfg.ode);
    if (markers.empty()) {
      throw std::runtime_error("compute_prc: perturbed Goodwin run has no marker events");
    }
    PrcPoint pt;
    pt.phase = phase;
    pt.shift_h = shift_against_reference(ref_markers, markers.back());
    pt.x_positive = series_value_at(ref.one_cycle, 2, onset) > ref.z_mean;
    out.points[i] = pt;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Arnold tongues
// ---------------------------------------------------------------------------

namespace {

std::vector<double> pulse_onsets(double T_st, double horizon) {
  std::vector<double> onsets;
  onsets.reserve(static_cast<std::size_t>(horizon / T_st) + 1);
  for (double t = 0; t < horizon; t += T_st) onsets.push_back(t);
  return onsets;
}

// std of the Kuramoto order parameter between the oscillator phase (from
// marker events) and the exactly periodic stimulus phase, over the trailing
// analysis window.
double std_k_for(const std::vector<double>& osc_markers, double T_st, double w_lo, double w_hi) {
  if (osc_markers.size() < 2) {
    throw std::runtime_error("oscillator produced fewer than 2 marker events");
  }
  const PhaseMap osc = phase_from_markers(osc_markers);
  const double lo = std::max(w_lo, osc.t_min());
  const double hi = std::min(w_hi, osc.t_max());
  if (hi - lo < 0.5 * (w_hi - w_lo)) {
    throw std::runtime_error("oscillator markers do not cover the analysis window");
  }
  constexpr int kSamples = 2048;
  double sum = 0, sumsq = 0;
  for (int j = 0; j < kSamples; ++j) {
    const double t = lo + (hi - lo) * j / (kSamples - 1);
    const double phases[2] = {osc(t), 2.0 * M_PI * t / T_st};
    const double k = kuramoto_k(phases);
    sum += k;
    sumsq += k * k;
  }
  const double mean = sum / kSamples;
  return std::sqrt(std::max(0.0, sumsq / kSamples - mean * mean));
}

void validate_tongue_args(double pulse_length, std::span<const double> amplitudes,
                          std::span<const double> periods, double horizon,
                          double transient_fraction) {
  if (amplitudes.empty() || periods.empty()) {
    throw std::invalid_argument("arnold_tongue: empty grid");
  }
  if (!(pulse_length > 0)) throw std::invalid_argument("arnold_tongue: pulse length must be > 0");
  if (!(transient_fraction > 0) || !(transient_fraction < 1)) {
    throw std::invalid_argument("arnold_tongue: transient fraction must lie in (0, 1)");
  }
  const double max_period = *std::max_element(periods.begin(), periods.end());
  if (horizon < 50.0 * max_period) {
    throw std::invalid_argument("arnold_tongue: horizon must cover >= 50 stimulus periods");
  }
}

template <typename CellFn>
TongueGrid run_tongue(double T_fr, double pulse_length, std::span<const double> amplitudes,
                      std::span<const double> periods, double horizon, double transient_fraction,
                      double threshold, const CellFn& run_cell) {
  TongueGrid grid;
  grid.amplitudes.assign(amplitudes.begin(), amplitudes.end());
  grid.periods.assign(periods.begin(), periods.end());
  grid.T_fr = T_fr;
  grid.horizon = horizon;
  grid.transient_fraction = transient_fraction;
  grid.threshold = threshold;
  grid.pulse_length = pulse_length;
  grid.cells.resize(amplitudes.size() * periods.size());

  parallel_for_index(grid.cells.size(), [&](std::size_t c) {
    const std::size_t ia = c / periods.size();
    const std::size_t ip = c % periods.size();
    TongueCell& cell = grid.cells[c];
    cell.amplitude = amplitudes[ia];
    cell.T_st = periods[ip];
    cell.std_k = std::numeric_limits<double>::quiet_NaN();
    try {
      cell.std_k = run_cell(cell.amplitude, cell.T_st);
      cell.entrained = cell.std_k < threshold;
      cell.ok = true;
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
    }
  });
  return grid;
}

}  // namespace

TongueGrid arnold_tongue(const ReducedParams& p, double pulse_length,
                         std::span<const double> amplitudes, std::span<const double> periods,
                         double horizon, double transient_fraction, const PhaseToolsConfig& cfg) {
  validate_tongue_args(pulse_length, amplitudes, periods, horizon, transient_fraction);
  const PwaAttractor att = find_pwa_attractor(p, cfg.t_settle);
  const double w_lo = horizon * (1.0 - transient_fraction);

  return run_tongue(att.T_fr, pulse_length, amplitudes, periods, horizon, transient_fraction,
                    cfg.entrain_threshold, [&](double A, double T_st) {
                      PeriodicStimulus stim{PulseSpec{A, pulse_length}, T_st};
                      stim.validate();
                      const auto onsets = pulse_onsets(T_st, horizon);
                      const HybridTrajectory traj = simulate_pwa_pulsed(
                          att.state, p, horizon, stim.pulse, onsets);
                      const auto markers =
                          traj.face_crossings(Face::x, true, cfg.refractory_frac * att.T_fr);
                      return std_k_for(markers, T_st, w_lo, horizon);
                    });
}

TongueGrid arnold_tongue(const GoodwinParams& p, double pulse_length,
                         std::span<const double> amplitudes, std::span<const double> periods,
                         double horizon, double transient_fraction, const PhaseToolsConfig& cfg) {
  validate_tongue_args(pulse_length, amplitudes, periods, horizon, transient_fraction);
  const GoodwinRef ref = find_goodwin_ref(p, cfg);
  const double w_lo = horizon * (1.0 - transient_fraction);

  return run_tongue(ref.period, pulse_length, amplitudes, periods, horizon, transient_fraction,
                    cfg.entrain_threshold, [&](double A, double T_st) {
                      PeriodicStimulus stim{PulseSpec{A, pulse_length}, T_st};
                      stim.validate();
                      const auto onsets = pulse_onsets(T_st, horizon);
                      const auto markers = goodwin_marker_run(
                          p, ref.y_marker, horizon, stim.pulse, onsets, ref.z_mean,
                          cfg.refractory_frac * ref.period, cfg.ode);
                      return std_k_for(markers, T_st, w_lo, horizon);
                    });
}

// ---------------------------------------------------------------------------
// Exports
// ---------------------------------------------------------------------------

void write_prc_csv(const PrcResult& prc, std::ostream& os) {
  os << "phase_fraction,shift_hours,x_positive_flag\n";
  for (const auto& pt : prc.points) {
    os << fmt_double(pt.phase) << ',' << fmt_double(pt.shift_h) << ',' << (pt.x_positive ? 1 : 0)
       << '\n';
  }
}

void write_tongue_csv(const TongueGrid& grid, std::ostream& os) {
  os << "A,T_st,std_k,entrained\n";
  for (const auto& cell : grid.cells) {
    os << fmt_double(cell.amplitude) << ',' << fmt_double(cell.T_st) << ','
       << fmt_double(cell.std_k) << ',' << (cell.entrained ? 1 : 0) << '\n';
  }
}

std::string tongue_metadata_json(const TongueGrid& grid) {
  nlohmann::json j;
  j["horizon"] = grid.horizon;
  j["transient_fraction"] = grid.transient_fraction;
  j["std_k_threshold"] = grid.threshold;
  j["T_fr"] = grid.T_fr;
  j["pulse_length"] = grid.pulse_length;
  std::size_t failures = 0;
  for (const auto& cell : grid.cells) {
    if (!cell.ok) ++failures;
  }
  j["failed_cells"] = failures;
  return j.dump(2);
}

}  // namespace seqclock
