#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "seqclock/conditions.hpp"
#include "seqclock/presets.hpp"
#include "seqclock/pwa.hpp"
#include "support/oracle.hpp"

using namespace seqclock;

namespace {

// parameter family of the worked formula examples: d* = 0.25 with the
// standard beta and epsilon
ReducedParams example_params() {
  ReducedParams p;
  p.alpha = 1.0;
  p.beta = 0.156;
  p.gamma = 0.2;
  p.delta = 0.05;
  p.epsilon = 2.698;
  return p;
}

// hand-verified all-pass sample
ReducedParams feasible_params() {
  ReducedParams p;
  p.alpha = 1.0;
  p.beta = 0.02;
  p.gamma = 1.0;
  p.delta = 1.0;
  p.epsilon = 0.1;
  return p;
}

std::mt19937_64 rng(2024);

double uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// first time the frozen affine flow of `region` drives `face` to `target`
double frozen_flow_hit_time(const Region& region, const PwaState& s0, const ReducedParams& p,
                            Face face, double target, double t_max) {
  auto value = [&](double t) {
    const PwaState s = solve_affine(region, s0, p, t);
    switch (face) {
      case Face::x: return s.x - target;
      case Face::d: return s.d - target;
      default: return s.r - target;
    }
  };
  const double g0 = value(0.0);
  double lo = 0, hi = 0;
  const double dt = t_max / 4096.0;
  for (double t = dt; t <= t_max; t += dt) {
    if (value(t) * g0 < 0) {
      lo = t - dt;
      hi = t;
      break;
    }
  }
  REQUIRE(hi > 0);
  for (int it = 0; it < 80 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    (value(mid) * g0 < 0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("assumption 1") {
  ReducedParams p = example_params();
  p.gamma = 1.0;
  p.epsilon = 1.0;
  p.delta = 0.2;
  CHECK(check_assumption1(p));

  // the gamma = 0.15 variant of the standard set: eps*delta = 0.650 > 0.15
  ReducedParams low_gamma = preset_reduced_standard();
  low_gamma.gamma = 0.15;
  CHECK_FALSE(check_assumption1(low_gamma));
  CHECK(low_gamma.epsilon * low_gamma.delta == doctest::Approx(0.650).epsilon(1e-3));

  // boundary equality fails (strict inequality)
  ReducedParams edge = example_params();
  edge.gamma = edge.epsilon * edge.delta;
  CHECK_FALSE(check_assumption1(edge));
}

TEST_CASE("bounds formulas against the frozen oracle") {
  const ReducedParams p = example_params();  // d* = 0.25, H = 0.3255
  const Bounds b = compute_bounds(p);
  REQUIRE(b.x_lower.defined);
  REQUIRE(b.x_upper.defined);
  CHECK(b.x_lower.value == doctest::Approx(0.16275).epsilon(1e-12));
  CHECK(b.x_upper.value == doctest::Approx(1.125356651052178).epsilon(1e-12));

  // beta -> 0 reduces the upper bound to sqrt(2 d*/H)
  ReducedParams small_beta = p;
  small_beta.beta = 1e-9;
  const Bounds bb = compute_bounds(small_beta);
  const double ds = small_beta.d_star();
  const double H = 1.0 - small_beta.epsilon * ds;
  CHECK(bb.x_upper.value == doctest::Approx(std::sqrt(2.0 * ds / H)).epsilon(1e-6));

  // undefined under a failing assumption 1, with the precondition named
  ReducedParams bad = p;
  bad.gamma = 0.01;
  const Bounds ub = compute_bounds(bad);
  CHECK_FALSE(ub.x_lower.defined);
  CHECK(ub.x_lower.reason.find("assumption1") != std::string::npos);
}

TEST_CASE("assumption 2") {
  const Bounds b = compute_bounds(example_params());
  REQUIRE(check_assumption2(b).has_value());
  CHECK(*check_assumption2(b));  // 1.1254 > 0.1628

  Bounds equal;
  equal.x_lower = MaybeQ::of(0.5);
  equal.x_upper = MaybeQ::of(0.5);
  CHECK_FALSE(*check_assumption2(equal));  // strict

  Bounds undef;
  undef.x_lower = MaybeQ::undefined("assumption1");
  undef.x_upper = MaybeQ::undefined("assumption1");
  CHECK_FALSE(check_assumption2(undef).has_value());  // propagated undefined
}

TEST_CASE("T_r formula and preconditions") {
  const ReducedParams p = example_params();
  const Bounds b = compute_bounds(p);
  const MaybeQ Tr = compute_Tr(p, b.x_lower);
  REQUIRE(Tr.defined);
  CHECK(Tr.value == doctest::Approx(9.762283633543696).epsilon(1e-12));

  // x_lower = beta/epsilon exactly: undefined with the precondition named
  const MaybeQ at_edge = compute_Tr(p, MaybeQ::of(p.beta / p.epsilon));
  CHECK_FALSE(at_edge.defined);
  CHECK(at_edge.reason.find("beta/epsilon") != std::string::npos);
}

TEST_CASE("T_d formula and limits") {
  const ReducedParams p = example_params();
  const Bounds b = compute_bounds(p);
  const MaybeQ Td = compute_Td(p, b.x_upper);
  REQUIRE(Td.defined);
  CHECK(Td.value == doctest::Approx(0.10926599511388825).epsilon(1e-12));

  // epsilon -> infinity with G, H fixed sends T_d -> 0
  const double fixed_G = b.x_upper.value - p.beta * p.d_star();
  const double H = 1.0 - p.epsilon * p.d_star();
  auto td_of_eps = [&](double eps) {
    return (std::sqrt(fixed_G * fixed_G + 2.0 * H * H / eps) - fixed_G) / H;
  };
  CHECK(td_of_eps(1e12) < 1e-10);
  CHECK(td_of_eps(1e4) < td_of_eps(1e2));
}

TEST_CASE("theorem 1 comparison") {
  CHECK_FALSE(*check_theorem1(MaybeQ::of(9.758), MaybeQ::of(0.1103)));
  CHECK(*check_theorem1(MaybeQ::of(0.1), MaybeQ::of(0.2)));
  CHECK_FALSE(check_theorem1(MaybeQ::undefined("x"), MaybeQ::of(1.0)).has_value());
}

TEST_CASE("jordan quantities for a passing sample") {
  const ReducedParams p = feasible_params();  // d* = 1, H = 0.9, x_lower = 0.9
  const Bounds b = compute_bounds(p);
  const JordanQuantities j = compute_jordan(p, b.x_lower);
  REQUIRE(j.t1.defined);
  CHECK(j.F.value == doctest::Approx(0.18072289156626506).epsilon(1e-12));
  CHECK(j.t1.value == doctest::Approx(0.7318360723481695).epsilon(1e-12));
  CHECK(j.x_m_t1.value == doctest::Approx(0.023178251451866513).epsilon(1e-12));
  CHECK(j.t2.value == doctest::Approx(0.23178251451866513).epsilon(1e-12));
  CHECK(j.jordan_lhs.value == doctest::Approx(1.1562264158914959).epsilon(1e-12));
  REQUIRE(j.pass.has_value());
  CHECK(*j.pass);

  // two algebraic routes to x_m(t1) agree
  const double xl = b.x_lower.value, ds = p.d_star(), F = j.F.value;
  const double alt = xl * std::exp(-(p.epsilon / (p.beta * p.beta - p.epsilon)) *
                                   std::log(p.beta * (ds + F) / (xl + p.beta * F)));
  CHECK(j.x_m_t1.value == doctest::Approx(alt).epsilon(1e-12));
}

TEST_CASE("jordan bounding curve matches its own dynamics") {
  const ReducedParams p = feasible_params();
  const JordanCurve curve = jordan_curve(p);

  // first leg: dx/dt = -(eps/beta) x, dd/dt = x - beta d from (x_lower, d*)
  const auto leg1 = [&](double, const oracle::Vec& s) {
    return oracle::Vec{-(p.epsilon / p.beta) * s[0], s[0] - p.beta * s[1]};
  };
  for (double frac : {0.25, 0.5, 1.0}) {
    const double t = frac * curve.t1;
    double x, d;
    curve.eval_first(t, x, d);
    const auto want = oracle::rk4(leg1, {curve.x_lower, curve.d_star}, 0, t, 20000);
    CHECK(x == doctest::Approx(want[0]).epsilon(1e-9));
    CHECK(d == doctest::Approx(want[1]).epsilon(1e-9));
  }
  // the legs join on the x = beta*d diagonal
  CHECK(curve.x1 == doctest::Approx(p.beta * curve.d1).epsilon(1e-9));

  // second leg: dx/dt = -eps*d*, dd/dt = x - beta d from the joint
  const auto leg2 = [&](double, const oracle::Vec& s) {
    return oracle::Vec{-p.epsilon * curve.d_star, s[0] - p.beta * s[1]};
  };
  double x2 = 0, d2 = 0;
  for (double frac : {0.3, 1.0}) {
    const double t = frac * curve.t2;
    curve.eval_second(t, x2, d2);
    const auto want = oracle::rk4(leg2, {curve.x1, curve.d1}, 0, t, 20000);
    CHECK(x2 == doctest::Approx(want[0]).epsilon(1e-9));
    CHECK(d2 == doctest::Approx(want[1]).epsilon(1e-9));
  }
  // curve terminates on x = 0 with d above the certified lower bound
  CHECK(x2 == doctest::Approx(0.0).epsilon(1e-9));
  const JordanQuantities j = compute_jordan(p, compute_bounds(p).x_lower);
  CHECK(d2 >= j.jordan_lhs.value - 1e-9);
  CHECK(d2 > curve.d_star);
}

TEST_CASE("jordan-pass trajectories exit RXD through face x with d above d*") {
  const ReducedParams p = feasible_params();
  const Bounds b = compute_bounds(p);
  const double ds = p.d_star();
  for (int trial = 0; trial < 200; ++trial) {
    const double x0 = uniform(b.x_lower.value, 3.0 * b.x_lower.value);
    const PwaState s0{x0, ds, 1.0 + uniform(0.001, 0.5)};
    const AffineSegment seg = advance_to_event(s0, p, 1000.0);
    CHECK(seg.exit_face == Face::x);
    CHECK(seg.exit_state.d > ds);
  }
}

TEST_CASE("check_all on the corrected standard preset") {
  // oscillating preset: assumption 1 holds, theorem 1 is the failing
  // certificate (sufficient, not necessary: the system still oscillates)
  const ConditionReport rep = check_all(preset_reduced_standard());
  CHECK(rep.assumption1);
  CHECK(rep.assumption2);
  CHECK(rep.tr_defined);
  CHECK_FALSE(rep.theorem1);
  CHECK_FALSE(rep.all_pass);
  CHECK(rep.q.T_r.value > rep.q.T_d.value);
}

TEST_CASE("check_all short-circuits when assumption 1 fails") {
  ReducedParams low_gamma = preset_reduced_standard();
  low_gamma.gamma = 0.15;
  const ConditionReport rep = check_all(low_gamma);
  CHECK_FALSE(rep.assumption1);
  CHECK_FALSE(rep.all_pass);
  // short-circuit: downstream quantities undefined with assumption1 named
  CHECK_FALSE(rep.q.x_lower.defined);
  CHECK(rep.q.x_lower.reason.find("assumption1") != std::string::npos);
  CHECK_FALSE(rep.q.T_r.defined);
  CHECK_FALSE(rep.q.jordan_lhs.defined);
}

TEST_CASE("check_all never passes a certificate whose preconditions failed") {
  for (int trial = 0; trial < 2000; ++trial) {
    ReducedParams p;
    p.alpha = 1.0;
    p.beta = std::exp(uniform(std::log(1e-2), std::log(1e1)));
    p.gamma = std::exp(uniform(std::log(1e-2), std::log(1e1)));
    p.delta = std::exp(uniform(std::log(1e-2), std::log(1e1)));
    p.epsilon = std::exp(uniform(std::log(1e-2), std::log(1e1)));
    const ConditionReport rep = check_all(p);
    if (!rep.assumption1) {
      CHECK_FALSE(rep.assumption2);
      CHECK_FALSE(rep.theorem1);
      CHECK_FALSE(rep.jordan);
    }
    if (rep.theorem1) {
      CHECK(rep.q.T_r.defined);
      CHECK(rep.q.T_d.defined);
    }
    if (rep.all_pass) {
      CHECK(rep.assumption1);
      CHECK(rep.assumption2);
      CHECK(rep.tr_defined);
      CHECK(rep.theorem1);
      CHECK(rep.jordan);
      CHECK(rep.q.jordan_lhs.defined);
    }
  }
}

TEST_CASE("report JSON round trip is lossless") {
  for (const ConditionReport& rep :
       {check_all(feasible_params()), check_all(preset_reduced_standard())}) {
    const std::string text = report_to_json(rep);
    const ConditionReport back = report_from_json(text);
    CHECK(back.assumption1 == rep.assumption1);
    CHECK(back.assumption2 == rep.assumption2);
    CHECK(back.tr_defined == rep.tr_defined);
    CHECK(back.theorem1 == rep.theorem1);
    CHECK(back.jordan == rep.jordan);
    CHECK(back.all_pass == rep.all_pass);
    CHECK(back.q.T_r.defined == rep.q.T_r.defined);
    if (rep.q.T_r.defined) CHECK(back.q.T_r.value == rep.q.T_r.value);  // bitwise
    if (rep.q.jordan_lhs.defined) CHECK(back.q.jordan_lhs.value == rep.q.jordan_lhs.value);
    CHECK(report_to_json(back) == text);
  }
}

TEST_CASE("x at the rXd -> rXD transition lies within the certified bounds") {
  const ReducedParams p = example_params();
  const Bounds b = compute_bounds(p);
  int transitioned = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    // admissible entry into rXd from rxd: x on its threshold, r below its
    // own, and d in [0, d*/2] (the lower-bound derivation drops the entry d,
    // which is only valid on that half; on the cyclic attractor the entry d
    // is far smaller still)
    const PwaState s0{0.0, uniform(0.0, 0.5 * p.d_star()), uniform(0.0, 0.95)};
    const AffineSegment seg = advance_to_event(s0, p, 1000.0);
    if (seg.exit_face != Face::d) continue;  // lemma hypothesis: stage ends at d*
    ++transitioned;
    CHECK(seg.exit_state.x >= b.x_lower.value - 1e-9);
    CHECK(seg.exit_state.x <= b.x_upper.value + 1e-9);
  }
  CHECK(transitioned > 800);
}

TEST_CASE("tau_r <= T_r and tau_d >= T_d on all-pass samples") {
  // certified bounds quantified over admissible entry states
  const ScanResult scan = scan_parameters(ScanRanges{}, 40000, 7);
  std::vector<ReducedParams> sets;
  sets.push_back(feasible_params());
  for (const auto& row : scan.samples) {
    if (sets.size() >= 4) break;
    if (!row.all_pass) continue;
    ReducedParams p;
    p.alpha = 1.0;
    p.beta = row.beta;
    p.gamma = row.gamma;
    p.delta = row.delta;
    p.epsilon = row.epsilon;
    sets.push_back(p);
  }
  REQUIRE(sets.size() >= 2);

  for (const ReducedParams& p : sets) {
    const Bounds b = compute_bounds(p);
    const MaybeQ Tr = compute_Tr(p, b.x_lower);
    const MaybeQ Td = compute_Td(p, b.x_upper);
    REQUIRE(Tr.defined);
    REQUIRE(Td.defined);
    const double ds = p.d_star();
    const Region rXD = Region::from_code("rXD");
    for (int trial = 0; trial < 100; ++trial) {
      const double x0 = uniform(b.x_lower.value, b.x_upper.value);
      const PwaState s0{x0, ds, uniform(0.0, 0.95)};
      // time for r to reach 1 under the rXD flow
      const double tau_r = frozen_flow_hit_time(rXD, s0, p, Face::r, 1.0, 10.0 * Tr.value);
      CHECK(tau_r <= Tr.value + 1e-9);
      // time for d to reach 1/epsilon under the same (x, d) flow
      const double tau_d =
          frozen_flow_hit_time(rXD, s0, p, Face::d, 1.0 / p.epsilon, 1000.0 * Td.value);
      CHECK(tau_d >= Td.value - 1e-9);
    }
  }
}

TEST_CASE("scan determinism and bookkeeping") {
  const ScanResult a = scan_parameters(ScanRanges{}, 5000, 42);
  const ScanResult b = scan_parameters(ScanRanges{}, 5000, 42);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].beta == b.samples[i].beta);  // bitwise
    CHECK(a.samples[i].epsilon == b.samples[i].epsilon);
    CHECK(a.samples[i].all_pass == b.samples[i].all_pass);
  }
  CHECK(a.feasible_count == b.feasible_count);

  const ScanResult c = scan_parameters(ScanRanges{}, 5000, 43);
  bool any_diff = false;
  for (std::size_t i = 0; i < c.samples.size(); ++i) {
    any_diff |= c.samples[i].beta != a.samples[i].beta;
  }
  CHECK(any_diff);

  // histogram totals equal the feasible count, per parameter
  for (const auto& h : a.histograms) {
    std::uint64_t sum = 0;
    for (auto v : h.counts) sum += v;
    CHECK(sum == a.feasible_count);
  }
}

TEST_CASE("scan finds a nonempty feasible region") {
  const ScanResult scan = scan_parameters(ScanRanges{}, 20000, 11);
  CHECK(scan.feasible_count > 0);

  std::ostringstream os;
  write_scan_csv(scan, os);
  std::istringstream in(os.str());
  std::string header;
  std::getline(in, header);
  CHECK(header ==
        "beta,gamma,delta,epsilon,assumption1,assumption2,theorem1,jordan,all_pass,"
        "d_star,x_lower,x_upper,T_r,T_d,jordan_lhs");
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == scan.samples.size());
}

TEST_CASE("all-pass samples follow the cyclic sequence") {
  const ScanResult scan = scan_parameters(ScanRanges{}, 40000, 5);
  std::vector<ReducedParams> sets;
  for (const auto& row : scan.samples) {
    if (sets.size() >= 3) break;
    if (!row.all_pass) continue;
    sets.push_back(ReducedParams{1.0, row.beta, row.gamma, row.delta, row.epsilon});
  }
  REQUIRE(!sets.empty());

  const char* cycle[6] = {"RxD", "Rxd", "rxd", "rXd", "rXD", "RXD"};
  for (const ReducedParams& p : sets) {
    const double ds = p.d_star();
    for (int trial = 0; trial < 100; ++trial) {
      // random start in RxD, nonnegative, bounded by 10/eps in d, 10 in x and r
      const PwaState s0{-uniform(0.01, 10.0), uniform(1.001 * ds, 10.0 / p.epsilon),
                        uniform(1.001, 10.0)};
      // horizon: generous multiple of the slowest timescales
      const double horizon = 60.0 * (1.0 / p.beta + 1.0 / p.delta + 1.0);
      const HybridTrajectory traj = simulate_pwa(s0, p, horizon);
      const auto& log = traj.transition_log;
      // after at most 2 transient cycles (anchor: third visit to RxD)
      const Region anchor = Region::from_code("RxD");
      std::size_t seen = 0, start = log.size();
      for (std::size_t i = 0; i < log.size(); ++i) {
        if (log[i] == anchor && ++seen == 3) {
          start = i;
          break;
        }
      }
      REQUIRE(start < log.size());
      REQUIRE(log.size() - start >= 12);  // at least two further full cycles
      for (std::size_t i = start; i < log.size(); ++i) {
        CHECK(log[i].code() == cycle[(i - start) % 6]);
      }
    }
  }
}
