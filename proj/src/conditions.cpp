#include "seqclock/conditions.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "json.hpp"
#include "seqclock/format.hpp"
#include "seqclock/parallel.hpp"

namespace seqclock {

namespace {

constexpr double kLimitTol = 1e-9;  // relative tolerance on removable denominators

constexpr const char* kNeedA1 = "assumption1 (gamma > epsilon*delta) violated";
constexpr const char* kNeedBounds = "bounds x_lower/x_upper undefined";
constexpr const char* kNeedTrPre = "x_lower <= beta/epsilon (T_r derivation fails)";
constexpr const char* kNeedLogArg = "nonpositive log argument in t1";
constexpr const char* kFInfinite = "epsilon = beta^2: F infinite (analytic limit used for t1)";

bool epsilon_beta2_limit(const ReducedParams& p) {
  const double s = p.epsilon - p.beta * p.beta;
  return std::abs(s) <= kLimitTol * std::max(p.epsilon, p.beta * p.beta);
}

}  // namespace

bool check_assumption1(const ReducedParams& p) { return p.gamma > p.epsilon * p.delta; }

Bounds compute_bounds(const ReducedParams& p) {
  Bounds b;
  if (!check_assumption1(p)) {
    b.x_lower = MaybeQ::undefined(kNeedA1);
    b.x_upper = MaybeQ::undefined(kNeedA1);
    return b;
  }
  const double ds = p.d_star();
  const double H = 1.0 - p.epsilon * ds;
  if (!(H > 0)) {  // rounding guard; equivalent to assumption 1
    b.x_lower = MaybeQ::undefined(kNeedA1);
    b.x_upper = MaybeQ::undefined(kNeedA1);
    return b;
  }
  b.x_lower = MaybeQ::of(H * std::sqrt(ds));
  b.x_upper =
      MaybeQ::of((std::sqrt(p.beta * p.beta * ds * ds + 2.0 * H * ds) - p.beta * ds) / H);
  return b;
}

std::optional<bool> check_assumption2(const Bounds& b) {
  if (!b.x_lower.defined || !b.x_upper.defined) return std::nullopt;
  return b.x_upper.value > b.x_lower.value;
}

MaybeQ compute_Tr(const ReducedParams& p, const MaybeQ& x_lower) {
  if (!x_lower.defined) return MaybeQ::undefined(kNeedBounds);
  const double slack = x_lower.value - p.beta / p.epsilon;
  if (!(slack > 0)) return MaybeQ::undefined(kNeedTrPre);
  return MaybeQ::of(std::sqrt(2.0 / (p.gamma * slack)));
}

MaybeQ compute_Td(const ReducedParams& p, const MaybeQ& x_upper) {
  if (!x_upper.defined) return MaybeQ::undefined(kNeedBounds);
  const double ds = p.d_star();
  const double H = 1.0 - p.epsilon * ds;
  if (!(H > 0)) return MaybeQ::undefined(kNeedA1);
  const double G = x_upper.value - p.beta * ds;
  return MaybeQ::of((std::sqrt(G * G + 2.0 * H * H / p.epsilon) - G) / H);
}

std::optional<bool> check_theorem1(const MaybeQ& T_r, const MaybeQ& T_d) {
  if (!T_r.defined || !T_d.defined) return std::nullopt;
  return T_r.value < T_d.value;
}

JordanQuantities compute_jordan(const ReducedParams& p, const MaybeQ& x_lower) {
  JordanQuantities j;
  if (!x_lower.defined) {
    j.F = j.t1 = j.x_m_t1 = j.t2 = j.jordan_lhs = MaybeQ::undefined(kNeedBounds);
    return j;
  }
  const double xl = x_lower.value;
  const double ds = p.d_star();
  const double beta = p.beta, eps = p.epsilon;

  if (epsilon_beta2_limit(p)) {
    j.F = MaybeQ::undefined(kFInfinite);
    j.t1 = MaybeQ::of(1.0 / beta - ds / xl);
  } else {
    const double F = beta * xl / (eps - beta * beta);
    j.F = MaybeQ::of(F);
    const double num = ds + F;
    const double den = xl / beta + F;
    if (!(num / den > 0)) {
      j.t1 = j.x_m_t1 = j.t2 = j.jordan_lhs = MaybeQ::undefined(kNeedLogArg);
      return j;
    }
    j.t1 = MaybeQ::of(std::log(num / den) / (beta - eps / beta));
  }

  const double t1 = j.t1.value;
  const double xm = xl * std::exp(-(eps / beta) * t1);
  j.x_m_t1 = MaybeQ::of(xm);
  j.t2 = MaybeQ::of(xm / (eps * ds));
  j.jordan_lhs = MaybeQ::of(xm * (1.0 / beta - xm / (2.0 * eps * ds)));
  // A negative t1 means the curve's start already lies past the leg
  // boundary (x_lower <= beta*d_star); the construction does not apply and
  // the certificate conservatively fails.
  j.pass = (t1 >= 0) && (j.jordan_lhs.value > ds);
  return j;
}

ConditionReport check_all(const ReducedParams& p) {
  p.validate();
  ConditionReport rep;
  DerivedQuantities& q = rep.q;

  const double ds = p.d_star();
  q.d_star = MaybeQ::of(ds);
  q.H = MaybeQ::of(1.0 - p.epsilon * ds);

  rep.assumption1 = check_assumption1(p);
  const Bounds b = compute_bounds(p);
  q.x_lower = b.x_lower;
  q.x_upper = b.x_upper;
  q.G = b.x_upper.defined ? MaybeQ::of(b.x_upper.value - p.beta * ds)
                          : MaybeQ::undefined(kNeedBounds);

  rep.assumption2 = check_assumption2(b).value_or(false);

  q.T_r = compute_Tr(p, b.x_lower);
  rep.tr_defined = q.T_r.defined;
  q.T_d = compute_Td(p, b.x_upper);
  rep.theorem1 = check_theorem1(q.T_r, q.T_d).value_or(false);

  const JordanQuantities j = compute_jordan(p, b.x_lower);
  q.F = j.F;
  q.t1 = j.t1;
  q.x_m_t1 = j.x_m_t1;
  q.t2 = j.t2;
  q.jordan_lhs = j.jordan_lhs;
  rep.jordan = j.pass.value_or(false);

  rep.all_pass =
      rep.assumption1 && rep.assumption2 && rep.tr_defined && rep.theorem1 && rep.jordan;
  return rep;
}

namespace {

using nlohmann::json;

json maybe_to_json(const MaybeQ& m) {
  json j;
  j["defined"] = m.defined;
  if (m.defined) {
    j["value"] = m.value;
  } else {
    j["reason"] = m.reason;
  }
  return j;
}

MaybeQ maybe_from_json(const json& j) {
  MaybeQ m;
  m.defined = j.at("defined").get<bool>();
  if (m.defined) {
    m.value = j.at("value").get<double>();
  } else {
    m.reason = j.value("reason", "");
  }
  return m;
}

constexpr const char* kPassText =
    "all sufficient conditions hold: the cyclic transition sequence and a periodic orbit are "
    "certified";
constexpr const char* kFailText =
    "sufficient conditions not satisfied; the conditions are sufficient, not necessary, so "
    "oscillation is neither guaranteed nor excluded";

}  // namespace

std::string report_to_json(const ConditionReport& rep) {
  json j;
  j["assumption1"] = rep.assumption1;
  j["assumption2"] = rep.assumption2;
  j["tr_defined"] = rep.tr_defined;
  j["theorem1"] = rep.theorem1;
  j["jordan"] = rep.jordan;
  j["all_pass"] = rep.all_pass;
  j["interpretation"] = rep.all_pass ? kPassText : kFailText;
  json& q = j["quantities"];
  q["d_star"] = maybe_to_json(rep.q.d_star);
  q["H"] = maybe_to_json(rep.q.H);
  q["x_lower"] = maybe_to_json(rep.q.x_lower);
  q["x_upper"] = maybe_to_json(rep.q.x_upper);
  q["G"] = maybe_to_json(rep.q.G);
  q["F"] = maybe_to_json(rep.q.F);
  q["T_r"] = maybe_to_json(rep.q.T_r);
  q["T_d"] = maybe_to_json(rep.q.T_d);
  q["t1"] = maybe_to_json(rep.q.t1);
  q["x_m_t1"] = maybe_to_json(rep.q.x_m_t1);
  q["t2"] = maybe_to_json(rep.q.t2);
  q["jordan_lhs"] = maybe_to_json(rep.q.jordan_lhs);
  return j.dump(2);
}

ConditionReport report_from_json(const std::string& text) {
  const json j = json::parse(text);
  ConditionReport rep;
  rep.assumption1 = j.at("assumption1").get<bool>();
  rep.assumption2 = j.at("assumption2").get<bool>();
  rep.tr_defined = j.at("tr_defined").get<bool>();
  rep.theorem1 = j.at("theorem1").get<bool>();
  rep.jordan = j.at("jordan").get<bool>();
  rep.all_pass = j.at("all_pass").get<bool>();
  const json& q = j.at("quantities");
  rep.q.d_star = maybe_from_json(q.at("d_star"));
  rep.q.H = maybe_from_json(q.at("H"));
  rep.q.x_lower = maybe_from_json(q.at("x_lower"));
  rep.q.x_upper = maybe_from_json(q.at("x_upper"));
  rep.q.G = maybe_from_json(q.at("G"));
  rep.q.F = maybe_from_json(q.at("F"));
  rep.q.T_r = maybe_from_json(q.at("T_r"));
  rep.q.T_d = maybe_from_json(q.at("T_d"));
  rep.q.t1 = maybe_from_json(q.at("t1"));
  rep.q.x_m_t1 = maybe_from_json(q.at("x_m_t1"));
  rep.q.t2 = maybe_from_json(q.at("t2"));
  rep.q.jordan_lhs = maybe_from_json(q.at("jordan_lhs"));
  return rep;
}

void JordanCurve::eval_first(double t, double& x, double& d) const {
  const double ef = std::exp(-(epsilon / beta) * t);
  x = x_lower * ef;
  if (limit_branch) {
    d = (d_star + x_lower * t) * std::exp(-beta * t);
  } else {
    const double F = beta * x_lower / (epsilon - beta * beta);
    d = -F * ef + (d_star + F) * std::exp(-beta * t);
  }
}

void JordanCurve::eval_second(double t, double& x, double& d) const {
  x = x1 - epsilon * d_star * t;
  const double b0 = x1 / beta + epsilon * d_star / (beta * beta);
  const double b2 = -epsilon * d_star / (beta * beta);
  d = b0 - (epsilon * d_star / beta) * t + b2 * std::exp(-beta * t);
}

JordanCurve jordan_curve(const ReducedParams& p) {
  const Bounds b = compute_bounds(p);
  const JordanQuantities j = compute_jordan(p, b.x_lower);
  if (!j.t1.defined || j.t1.value < 0) {
    throw std::domain_error("jordan_curve: bounding curve undefined for these parameters");
  }
  JordanCurve c;
  c.beta = p.beta;
  c.epsilon = p.epsilon;
  c.d_star = p.d_star();
  c.x_lower = b.x_lower.value;
  c.limit_branch = epsilon_beta2_limit(p);
  c.t1 = j.t1.value;
  c.t2 = j.t2.value;
  c.eval_first(c.t1, c.x1, c.d1);
  return c;
}

namespace {

// Deterministic cross-platform generator for the scan (splitmix64).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : s_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (s_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double log_uniform(double lo, double hi) {
    return std::exp(std::log(lo) + uniform01() * (std::log(hi) - std::log(lo)));
  }

 private:
  std::uint64_t s_;
};

double q_or_nan(const MaybeQ& m) {
  return m.defined ? m.value : std::numeric_limits<double>::quiet_NaN();
}

constexpr int kHistogramBins = 40;

ParamHistogram make_histogram(const std::string& name, std::pair<double, double> range) {
  ParamHistogram h;
  h.name = name;
  h.edges.resize(kHistogramBins + 1);
  const double llo = std::log(range.first), lhi = std::log(range.second);
  for (int i = 0; i <= kHistogramBins; ++i) {
    h.edges[i] = std::exp(llo + (lhi - llo) * i / kHistogramBins);
  }
  h.counts.assign(kHistogramBins, 0);
  return h;
}

void histogram_add(ParamHistogram& h, double value) {
  int bin = static_cast<int>(std::lower_bound(h.edges.begin(), h.edges.end(), value) -
                             h.edges.begin()) -
            1;
  bin = std::clamp(bin, 0, kHistogramBins - 1);
  ++h.counts[static_cast<std::size_t>(bin)];
}

}  // namespace

ScanResult scan_parameters(const ScanRanges& ranges, std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("scan_parameters: n_samples must be >= 1");
  auto check_range = [](std::pair<double, double> r, const char* name) {
    if (!(r.first > 0) || !(r.second > r.first)) {
      throw std::invalid_argument(std::string("scan_parameters: bad range for ") + name);
    }
  };
  check_range(ranges.beta, "beta");
  check_range(ranges.gamma, "gamma");
  check_range(ranges.delta, "delta");
  check_range(ranges.epsilon, "epsilon");

  ScanResult result;
  result.samples.resize(n_samples);

  SplitMix64 rng(seed);
  for (auto& row : result.samples) {
    row.beta = rng.log_uniform(ranges.beta.first, ranges.beta.second);
    row.gamma = rng.log_uniform(ranges.gamma.first, ranges.gamma.second);
    row.delta = rng.log_uniform(ranges.delta.first, ranges.delta.second);
    row.epsilon = rng.log_uniform(ranges.epsilon.first, ranges.epsilon.second);
  }

  parallel_for_index(n_samples, [&](std::size_t i) {
    ScanRow& row = result.samples[i];
    ReducedParams p;
    p.alpha = 1.0;  // irrelevant to the PWA certificates
    p.beta = row.beta;
    p.gamma = row.gamma;
    p.delta = row.delta;
    p.epsilon = row.epsilon;
    const ConditionReport rep = check_all(p);
    row.assumption1 = rep.assumption1;
    row.assumption2 = rep.assumption2;
    row.theorem1 = rep.theorem1;
    row.jordan = rep.jordan;
    row.all_pass = rep.all_pass;
    row.d_star = q_or_nan(rep.q.d_star);
    row.x_lower = q_or_nan(rep.q.x_lower);
    row.x_upper = q_or_nan(rep.q.x_upper);
    row.T_r = q_or_nan(rep.q.T_r);
    row.T_d = q_or_nan(rep.q.T_d);
    row.jordan_lhs = q_or_nan(rep.q.jordan_lhs);
  });

  result.histograms = {make_histogram("beta", ranges.beta), make_histogram("gamma", ranges.gamma),
                       make_histogram("delta", ranges.delta),
                       make_histogram("epsilon", ranges.epsilon)};
  for (const auto& row : result.samples) {
    if (!row.all_pass) continue;
    ++result.feasible_count;
    histogram_add(result.histograms[0], row.beta);
    histogram_add(result.histograms[1], row.gamma);
    histogram_add(result.histograms[2], row.delta);
    histogram_add(result.histograms[3], row.epsilon);
  }
  return result;
}

void write_scan_csv(const ScanResult& scan, std::ostream& os) {
  os << "beta,gamma,delta,epsilon,assumption1,assumption2,theorem1,jordan,all_pass,"
        "d_star,x_lower,x_upper,T_r,T_d,jordan_lhs\n";
  for (const auto& row : scan.samples) {
    os << fmt_double(row.beta) << ',' << fmt_double(row.gamma) << ',' << fmt_double(row.delta)
       << ',' << fmt_double(row.epsilon) << ',' << (row.assumption1 ? 1 : 0) << ','
       << (row.assumption2 ? 1 : 0) << ',' << (row.theorem1 ? 1 : 0) << ','
       << (row.jordan ? 1 : 0) << ',' << (row.all_pass ? 1 : 0) << ',' << fmt_double(row.d_star)
       << ',' << fmt_double(row.x_lower) << ',' << fmt_double(row.x_upper) << ','
       << fmt_double(row.T_r) << ',' << fmt_double(row.T_d) << ',' << fmt_double(row.jordan_lhs)
       << '\n';
  }
}

std::string histograms_to_json(const ScanResult& scan) {
  nlohmann::json j;
  j["feasible_count"] = scan.feasible_count;
  for (const auto& h : scan.histograms) {
    nlohmann::json hj;
    hj["edges"] = h.edges;
    hj["counts"] = h.counts;
    j["histograms"][h.name] = hj;
  }
  return j.dump(2);
}

}  // namespace seqclock
