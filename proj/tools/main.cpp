// seqclock command-line tool: every analysis maps to one subcommand with
// CSV/JSON outputs plus a JSON sidecar holding the fully resolved
// configuration, so any result can be reproduced from its output directory.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "seqclock/conditions.hpp"
#include "seqclock/format.hpp"
#include "seqclock/integrate.hpp"
#include "seqclock/models.hpp"
#include "seqclock/phase.hpp"
#include "seqclock/presets.hpp"
#include "seqclock/pwa.hpp"
#include "seqclock/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace seqclock;

namespace {

struct CommonOpts {
  std::string model = "pwa";
  std::string preset;
  std::string params_file;
  std::string out_dir = "out";
  std::uint64_t seed = 42;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_model = true) {
  if (with_model) cmd->add_option("--model", o.model, "Model selector");
  cmd->add_option("--preset", o.preset, "Named parameter preset (paper-standard, goodwin-fig8)");
  cmd->add_option("--params", o.params_file, "Flat key-value JSON parameter file");
  cmd->add_option("--out", o.out_dir, "Output directory")->required();
  cmd->add_option("--seed", o.seed, "Random seed (where applicable)");
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open parameter file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ReducedParams resolve_reduced(const CommonOpts& o) {
  if (!o.params_file.empty()) return reduced_params_from_json(slurp(o.params_file));
  if (!o.preset.empty()) return reduced_preset_by_name(o.preset);
  throw std::runtime_error("provide --preset paper-standard or --params <file.json>");
}

GoodwinParams resolve_goodwin(const CommonOpts& o) {
  if (!o.params_file.empty()) return goodwin_params_from_json(slurp(o.params_file));
  if (!o.preset.empty()) return goodwin_preset_by_name(o.preset);
  throw std::runtime_error("provide --preset goodwin-fig8 or --params <file.json>");
}

FullParams resolve_full(const CommonOpts& o) {
  if (!o.params_file.empty()) return full_params_from_json(slurp(o.params_file));
  throw std::runtime_error("the full model has no preset; provide --params <file.json>");
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
}

void write_sidecar(const CommonOpts& o, const std::string& command, json resolved) {
  resolved["command"] = command;
  resolved["version"] = kVersion;
  resolved["seed"] = o.seed;
  if (!o.preset.empty()) resolved["preset"] = o.preset;
  write_file(fs::path(o.out_dir) / (command + "_config.json"), resolved.dump(2) + "\n");
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    grid.push_back(std::stod(item));
  }
  if (grid.empty()) throw std::runtime_error("empty grid '" + text + "'");
  return grid;
}

Rhs make_rhs(const std::string& model, const ReducedParams& rp) {
  if (model == "reduced") {
    return [rp](double, std::span<const double> y, std::span<double> dy) {
      const auto d = rhs_reduced(ReducedState{y[0], y[1], y[2], y[3]}, rp);
      std::copy(d.begin(), d.end(), dy.begin());
    };
  }
  return [rp](double, std::span<const double> y, std::span<double> dy) {
    const auto d = rhs_transformed(XyState{y[0], y[1], y[2], y[3]}, rp);
    std::copy(d.begin(), d.end(), dy.begin());
  };
}

void write_timeseries_csv(const fs::path& path, const Timeseries& ts,
                          const std::vector<std::string>& cols, bool header_only) {
  std::ostringstream os;
  os << "t";
  for (const auto& c : cols) os << ',' << c;
  os << '\n';
  if (!header_only) {
    for (std::size_t i = 0; i < ts.size(); ++i) {
      os << fmt_double(ts.times[i]);
      for (std::size_t v = 0; v < cols.size(); ++v) os << ',' << fmt_double(ts.value(i, v));
      os << '\n';
    }
  }
  write_file(path, os.str());
}

// --- subcommand bodies ------------------------------------------------------

int cmd_simulate(const CommonOpts& o, double t_total, double sample_dt) {
  fs::create_directories(o.out_dir);
  json side;
  side["t_total"] = t_total;
  side["sample_dt"] = sample_dt;
  side["model"] = o.model;

  if (o.model == "pwa") {
    const ReducedParams rp = resolve_reduced(o);
    side["params"] = json::parse(to_json(rp));
    std::ostringstream os;
    if (t_total == 0) {
      os << "t,x,d,r,region\n";
    } else {
      const HybridTrajectory traj = simulate_pwa(PwaState{1.0, 0.0, 0.0, 0.0}, rp, t_total);
      traj.write_csv(os, sample_dt);
      const PwaPeriod pe = extract_period_pwa(traj);
      side["period"] = pe.periodic ? json(pe.period) : json(nullptr);
      side["period_max_dev"] = pe.periodic ? json(pe.max_dev) : json(nullptr);
      side["segments"] = traj.segments.size();
      if (pe.periodic) {
        std::cout << "period " << fmt_double(pe.period) << " h (max dev "
                  << fmt_double(pe.max_dev) << " h) over " << pe.returns << " returns\n";
      } else {
        std::cout << "no periodic marker pattern detected\n";
      }
    }
    write_file(fs::path(o.out_dir) / "timeseries.csv", os.str());
    write_sidecar(o, "simulate", side);
    return 0;
  }

  IntegratorConfig cfg;
  Timeseries ts;
  std::vector<std::string> cols;
  if (o.model == "reduced" || o.model == "transformed") {
    const ReducedParams rp = resolve_reduced(o);
    side["params"] = json::parse(to_json(rp));
    const std::vector<double> y0 = o.model == "reduced" ? std::vector<double>{1, 0, 0, 0}
                                                        : std::vector<double>{1, 0, 0, 1};
    cols = o.model == "reduced" ? std::vector<std::string>{"b", "d", "r", "p"}
                                : std::vector<std::string>{"x", "d", "r", "y"};
    if (t_total > 0) ts = integrate(make_rhs(o.model, rp), y0, cfg, t_total, sample_dt, o.model);
  } else if (o.model == "full") {
    const FullParams fp = resolve_full(o);
    side["params"] = json::parse(to_json(fp));
    const Rhs rhs = [fp](double, std::span<const double> y, std::span<double> dy) {
      const auto d = rhs_full(FullState{y[0], y[1], y[2], y[3]}, fp);
      std::copy(d.begin(), d.end(), dy.begin());
    };
    cols = {"B", "D", "R", "P"};
    if (t_total > 0) ts = integrate(rhs, std::vector<double>{1, 0, 0, 0}, cfg, t_total, sample_dt, "full");
  } else if (o.model == "goodwin") {
    const GoodwinParams gp = resolve_goodwin(o);
    side["params"] = json::parse(to_json(gp));
    const Rhs rhs = [gp](double, std::span<const double> y, std::span<double> dy) {
      const auto d = rhs_goodwin(GoodwinState{y[0], y[1], y[2]}, gp);
      std::copy(d.begin(), d.end(), dy.begin());
    };
    cols = {"X", "Y", "Z"};
    if (t_total > 0)
      ts = integrate(rhs, std::vector<double>{0.1, 0.1, 0.1}, cfg, t_total, sample_dt, "goodwin");
  } else {
    throw std::runtime_error("unknown model '" + o.model + "'");
  }
  write_timeseries_csv(fs::path(o.out_dir) / "timeseries.csv", ts, cols, t_total == 0);
  write_sidecar(o, "simulate", side);
  return 0;
}

int cmd_alpha_sweep(const CommonOpts& o, const std::string& grid_text) {
  fs::create_directories(o.out_dir);
  const ReducedParams rp = resolve_reduced(o);
  const std::vector<double> grid = parse_grid(grid_text);
  IntegratorConfig cfg;
  const AlphaSweepResult sweep = period_vs_alpha(rp, grid, cfg);

  std::ostringstream os;
  os << "alpha,period,period_spread,oscillatory\n";
  for (const auto& pt : sweep.points) {
    os << fmt_double(pt.alpha) << ',' << fmt_double(pt.period) << ',' << fmt_double(pt.spread)
       << ',' << (pt.oscillatory ? 1 : 0) << '\n';
  }
  write_file(fs::path(o.out_dir) / "alpha_sweep.csv", os.str());

  json side;
  side["params"] = json::parse(to_json(rp));
  side["alpha_grid"] = grid;
  side["plateau_rel_change"] = sweep.plateau_rel_change;
  write_sidecar(o, "alpha_sweep", side);
  std::cout << "plateau relative period change: " << fmt_double(sweep.plateau_rel_change) << "\n";
  return 0;
}

int cmd_conditions(const CommonOpts& o) {
  fs::create_directories(o.out_dir);
  const ReducedParams rp = resolve_reduced(o);
  const ConditionReport rep = check_all(rp);
  const std::string text = report_to_json(rep);
  write_file(fs::path(o.out_dir) / "conditions.json", text + "\n");
  json side;
  side["params"] = json::parse(to_json(rp));
  write_sidecar(o, "conditions", side);
  std::cout << text << "\n";
  return 0;
}

int cmd_scan(const CommonOpts& o, std::size_t n_samples, double lo, double hi) {
  fs::create_directories(o.out_dir);
  ScanRanges ranges;
  ranges.beta = ranges.gamma = ranges.delta = ranges.epsilon = {lo, hi};
  const ScanResult scan = scan_parameters(ranges, n_samples, o.seed);

  std::ostringstream os;
  write_scan_csv(scan, os);
  write_file(fs::path(o.out_dir) / "scan.csv", os.str());
  write_file(fs::path(o.out_dir) / "scan_histograms.json", histograms_to_json(scan) + "\n");

  json side;
  side["n_samples"] = n_samples;
  side["range_lo"] = lo;
  side["range_hi"] = hi;
  side["feasible_count"] = scan.feasible_count;
  write_sidecar(o, "scan", side);
  std::cout << "feasible " << scan.feasible_count << " of " << n_samples << " samples\n";
  return 0;
}

int cmd_prc(const CommonOpts& o, std::optional<double> amplitude, double length, int n_phases) {
  fs::create_directories(o.out_dir);
  PhaseToolsConfig cfg;
  PrcResult prc;
  json side;
  if (o.model == "pwa") {
    const ReducedParams rp = resolve_reduced(o);
    side["params"] = json::parse(to_json(rp));
    const PulseSpec pulse{amplitude.value_or(-0.5), length};
    side["pulse_amplitude"] = pulse.amplitude;
    prc = compute_prc(rp, pulse, n_phases, cfg);
  } else if (o.model == "goodwin") {
    const GoodwinParams gp = resolve_goodwin(o);
    side["params"] = json::parse(to_json(gp));
    cfg.ode.rel_tol = 1e-8;
    cfg.ode.abs_tol = 1e-11;
    const PulseSpec pulse{amplitude.value_or(0.5), length};
    side["pulse_amplitude"] = pulse.amplitude;
    prc = compute_prc(gp, pulse, n_phases, cfg);
  } else {
    throw std::runtime_error("prc supports --model pwa or goodwin");
  }
  std::ostringstream os;
  write_prc_csv(prc, os);
  write_file(fs::path(o.out_dir) / "prc.csv", os.str());

  side["pulse_length"] = length;
  side["n_phases"] = n_phases;
  side["T_fr"] = prc.T_fr;
  side["marker"] = prc.marker;
  write_sidecar(o, "prc", side);
  std::cout << "T_fr " << fmt_double(prc.T_fr) << " h, " << prc.points.size() << " phases\n";
  return 0;
}

int cmd_arnold(const CommonOpts& o, std::string amp_text, std::string tst_text, double horizon,
               double transient_fraction, double length) {
  fs::create_directories(o.out_dir);
  PhaseToolsConfig cfg;
  TongueGrid grid;
  json side;

  const bool pwa = o.model == "pwa";
  if (!pwa && o.model != "goodwin") {
    throw std::runtime_error("arnold supports --model pwa or goodwin");
  }
  if (horizon <= 0) horizon = pwa ? 25000.0 : 5000.0;

  std::vector<double> amps;
  if (!amp_text.empty()) {
    amps = parse_grid(amp_text);
  } else {
    for (int i = 0; i <= 10; ++i) amps.push_back((pwa ? -1.0 : 1.0) * 0.1 * i);
  }

  if (pwa) {
    const ReducedParams rp = resolve_reduced(o);
    side["params"] = json::parse(to_json(rp));
    std::vector<double> tsts;
    if (!tst_text.empty()) {
      tsts = parse_grid(tst_text);
    } else {
      const double T = find_pwa_attractor(rp, cfg.t_settle).T_fr;
      for (int i = 0; i <= 10; ++i) tsts.push_back(T - 2.0 + 0.4 * i);
    }
    grid = arnold_tongue(rp, length, amps, tsts, horizon, transient_fraction, cfg);
  } else {
    const GoodwinParams gp = resolve_goodwin(o);
    side["params"] = json::parse(to_json(gp));
    cfg.ode.rel_tol = 1e-7;
    cfg.ode.abs_tol = 1e-10;
    std::vector<double> tsts;
    if (!tst_text.empty()) {
      tsts = parse_grid(tst_text);
    } else {
      const double T = goodwin_free_period(gp, cfg);
      for (int i = 0; i <= 10; ++i) tsts.push_back(T - 2.0 + 0.4 * i);
    }
    grid = arnold_tongue(gp, length, amps, tsts, horizon, transient_fraction, cfg);
  }

  std::ostringstream os;
  write_tongue_csv(grid, os);
  write_file(fs::path(o.out_dir) / "tongue.csv", os.str());
  write_file(fs::path(o.out_dir) / "tongue_meta.json", tongue_metadata_json(grid) + "\n");

  side["horizon"] = grid.horizon;
  side["transient_fraction"] = grid.transient_fraction;
  side["pulse_length"] = grid.pulse_length;
  side["amp_grid"] = grid.amplitudes;
  side["tst_grid"] = grid.periods;
  side["T_fr"] = grid.T_fr;
  write_sidecar(o, "arnold", side);

  std::size_t failed = 0;
  for (const auto& cell : grid.cells) {
    if (!cell.ok) ++failed;
  }
  std::cout << "T_fr " << fmt_double(grid.T_fr) << " h, " << grid.cells.size() << " cells, "
            << failed << " failed\n";
  return failed == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"seqclock: simulation, certificates and entrainment analysis for a "
               "sequestration-based circadian oscillator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  CommonOpts sim_o;
  double sim_t_total = 500.0, sim_dt = 0.05;
  auto* sim = app.add_subcommand("simulate", "Integrate one model and export a timeseries CSV");
  add_common(sim, sim_o);
  sim->add_option("--t-total", sim_t_total, "Total simulated time [h]");
  sim->add_option("--sample-dt", sim_dt, "Output sampling step [h]");

  CommonOpts sweep_o;
  std::string sweep_grid = "11.46,36.24,114.6,362.4,1146,3624,11460";
  auto* sweep = app.add_subcommand("alpha-sweep", "Period of the reduced model vs alpha");
  add_common(sweep, sweep_o, false);
  sweep->add_option("--alpha-grid", sweep_grid, "Comma-separated increasing alpha values");

  CommonOpts cond_o;
  auto* cond = app.add_subcommand("conditions", "Evaluate the periodic-orbit certificates");
  add_common(cond, cond_o, false);

  CommonOpts scan_o;
  std::size_t scan_n = 100000;
  double scan_lo = 1e-2, scan_hi = 1e1;
  auto* scan = app.add_subcommand("scan", "Sample parameter space and evaluate certificates");
  add_common(scan, scan_o, false);
  scan->add_option("--n-samples", scan_n, "Number of samples");
  scan->add_option("--range-lo", scan_lo, "Lower bound of every parameter range");
  scan->add_option("--range-hi", scan_hi, "Upper bound of every parameter range");

  CommonOpts prc_o;
  double prc_amp = std::numeric_limits<double>::quiet_NaN();
  double prc_len = 0.05;
  int prc_n = 100;
  auto* prc = app.add_subcommand("prc", "Phase response curve by direct perturbed simulation");
  add_common(prc, prc_o);
  prc->add_option("--pulse-amplitude", prc_amp, "Signed pulse amplitude (default -0.5 pwa, 0.5 goodwin)");
  prc->add_option("--pulse-length", prc_len, "Pulse length [h]");
  prc->add_option("--n-phases", prc_n, "Number of stimulus phases");

  CommonOpts arn_o;
  std::string arn_amps, arn_tsts;
  double arn_horizon = 0, arn_tf = 0.25, arn_len = 0.05;
  auto* arn = app.add_subcommand("arnold", "Arnold tongue: std(k) over an (A, T_st) grid");
  add_common(arn, arn_o);
  arn->add_option("--amp-grid", arn_amps, "Comma-separated signed amplitudes");
  arn->add_option("--tst-grid", arn_tsts, "Comma-separated stimulus periods [h]");
  arn->add_option("--horizon", arn_horizon, "Simulation horizon [h] (default 25000 pwa, 5000 goodwin)");
  arn->add_option("--transient-fraction", arn_tf, "Trailing fraction of the horizon analysed");
  arn->add_option("--pulse-length", arn_len, "Pulse length [h]");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(sim_o, sim_t_total, sim_dt);
    if (sweep->parsed()) return cmd_alpha_sweep(sweep_o, sweep_grid);
    if (cond->parsed()) return cmd_conditions(cond_o);
    if (scan->parsed()) return cmd_scan(scan_o, scan_n, scan_lo, scan_hi);
    if (prc->parsed()) {
      return cmd_prc(prc_o, std::isnan(prc_amp) ? std::nullopt : std::optional<double>(prc_amp),
                     prc_len, prc_n);
    }
    if (arn->parsed()) return cmd_arnold(arn_o, arn_amps, arn_tsts, arn_horizon, arn_tf, arn_len);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
