#pragma once

#include <span>
#include <string>
#include <vector>

#include "seqclock/integrate.hpp"
#include "seqclock/params.hpp"
#include "seqclock/pwa.hpp"

// Phase response curves by direct perturbed simulation, the Kuramoto order
// parameter and Arnold-tongue entrainment maps, for the PWA oscillator
// (stimulus on x) and the Goodwin oscillator (stimulus on Z).

namespace seqclock {

/// Square pulse: an additive constant on the stimulated variable's rate of
/// change over a window of the given length.
struct PulseSpec {
  double amplitude = 0;  // signed [1/h in state units]
  double length = 0.05;  // [h]
  void validate() const;
};

struct PeriodicStimulus {
  PulseSpec pulse;
  double period = 24.0;  // [h] spacing of pulse onsets
  void validate() const;
};

struct PrcPoint {
  double phase = 0;        // stimulus phase as cycle fraction in [0, 1)
  double shift_h = 0;      // asymptotic shift [h], advance positive
  bool x_positive = false; // stimulated variable above its marker level at onset
};

struct PrcResult {
  std::vector<PrcPoint> points;
  double T_fr = 0;     // free-running period [h]
  std::string marker;  // phase-zero marker definition
};

struct PhaseToolsConfig {
  double t_settle = 1500.0;       // [h] granted for convergence to the limit cycle
  int post_pulse_cycles = 20;     // cycles integrated after the pulse before measuring
  double refractory_frac = 0.25;  // marker refractory window as a fraction of T_fr
  double entrain_threshold = 0.01;  // std(k) below this counts as entrained
  IntegratorConfig ode;           // smooth-model integration settings
};

/// PRC of the PWA oscillator: the pulse drives dx/dt; phase zero is the
/// upward crossing of x through 0.
PrcResult compute_prc(const ReducedParams& p, const PulseSpec& pulse, int n_phases,
                      const PhaseToolsConfig& cfg = {});

/// PRC of the Goodwin oscillator: the pulse drives dZ/dt; phase zero is the
/// upward crossing of Z through its trajectory mean.
PrcResult compute_prc(const GoodwinParams& p, const PulseSpec& pulse, int n_phases,
                      const PhaseToolsConfig& cfg = {});

void write_prc_csv(const PrcResult& prc, std::ostream& os);

/// Modulus of the mean unit phasor of a set of phase angles [rad].
double kuramoto_k(std::span<const double> phases);

/// Piecewise-linear phase built from marker event times: the phase gains
/// 2*pi per marker interval and is continuous and nondecreasing.
struct PhaseMap {
  std::vector<double> marker_times;
  double t_min() const { return marker_times.front(); }
  double t_max() const { return marker_times.back(); }
  double operator()(double t) const;
};

PhaseMap phase_from_markers(std::vector<double> marker_times);
PhaseMap phase_from_timeseries(const Timeseries& ts, std::size_t var, double level,
                               double min_separation = 0);

struct TongueCell {
  double amplitude = 0;
  double T_st = 0;
  double std_k = 0;        // NaN when the cell failed
  bool entrained = false;  // std_k < threshold
  bool ok = false;
  std::string error;
};

struct TongueGrid {
  std::vector<double> amplitudes;
  std::vector<double> periods;
  std::vector<TongueCell> cells;  // row-major, amplitudes x periods
  double T_fr = 0;
  double horizon = 0;
  double transient_fraction = 0;
  double threshold = 0;
  double pulse_length = 0;

  const TongueCell& cell(std::size_t ia, std::size_t ip) const {
    return cells[ia * periods.size() + ip];
  }
};

/// Entrainment map of the PWA oscillator under a periodic square-pulse
/// stimulus on x. Amplitudes are signed (negative pulses stand in for a
/// positive perturbation of the sequestering partner).
TongueGrid arnold_tongue(const ReducedParams& p, double pulse_length,
                         std::span<const double> amplitudes, std::span<const double> periods,
                         double horizon, double transient_fraction,
                         const PhaseToolsConfig& cfg = {});

/// Entrainment map of the Goodwin oscillator under a periodic square-pulse
/// stimulus on Z.
TongueGrid arnold_tongue(const GoodwinParams& p, double pulse_length,
                         std::span<const double> amplitudes, std::span<const double> periods,
                         double horizon, double transient_fraction,
                         const PhaseToolsConfig& cfg = {});

void write_tongue_csv(const TongueGrid& grid, std::ostream& os);
std::string tongue_metadata_json(const TongueGrid& grid);

/// Event-driven simulation of the PWA model under a train of square pulses
/// on dx/dt starting at the given onset times.
HybridTrajectory simulate_pwa_pulsed(const PwaState& s0, const ReducedParams& p, double t_total,
                                     const PulseSpec& pulse, std::span<const double> onsets,
                                     const PwaSimOptions& opts = {});

/// Converged on-attractor state (at an upward x crossing) and free-running
/// period of the PWA oscillator.
struct PwaAttractor {
  PwaState state;  // t = 0, x = 0 exactly
  double T_fr = 0;
};
PwaAttractor find_pwa_attractor(const ReducedParams& p, double t_settle = 1500.0);

/// Free-running period of the Goodwin oscillator (throws when it does not
/// oscillate).
double goodwin_free_period(const GoodwinParams& p, const PhaseToolsConfig& cfg = {});

}  // namespace seqclock
