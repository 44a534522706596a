#include <cmath>
#include <random>

#include "doctest.h"
#include "json.hpp"
#include "seqclock/models.hpp"
#include "seqclock/presets.hpp"

using namespace seqclock;

namespace {

std::mt19937_64 rng(12345);

double uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

FullParams random_full_params() {
  FullParams p;
  p.V_R = uniform(0.1, 5);
  p.V_B = uniform(0.1, 5);
  p.V_D = uniform(0.1, 5);
  p.gamma_B = uniform(0.1, 5);
  p.gamma_D = uniform(0.1, 5);
  p.gamma_R = uniform(0.1, 5);
  p.k_R = uniform(0.1, 5);
  return p;
}

}  // namespace

TEST_CASE("hill functions") {
  CHECK(hill_full(0, 1) == 1.0);
  CHECK(hill_full(2.5, 2.5) == 0.5);  // R = k_R is the half-activation point
  CHECK(hill_full(2, 1) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK_THROWS_AS(hill_full(-0.1, 1), std::domain_error);
  CHECK_THROWS_AS(hill_full(1, 0), std::domain_error);

  CHECK(hill_reduced(0) == 1.0);
  CHECK(hill_reduced(1) == 0.5);
  CHECK(hill_reduced(3) == doctest::Approx(0.1).epsilon(1e-14));
  CHECK_THROWS_AS(hill_reduced(-1), std::domain_error);

  // strictly decreasing
  double prev = hill_reduced(0);
  for (double r = 0.1; r < 5; r += 0.1) {
    const double v = hill_reduced(r);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("switch function boundary semantics") {
  CHECK(switch_h(0.5) == 1.0);
  CHECK(switch_h(2.0) == 0.0);
  CHECK(switch_h(1.0) == 0.0);  // strict: r < 1
}

TEST_CASE("switch_h is the pointwise steep-Hill limit") {
  // generalized Hill 1/(1 + r^n): at r = 0.9 increases to 1, at r = 1.1
  // decreases to 0, monotonically in n
  auto hill_n = [](double r, double n) { return 1.0 / (1.0 + std::pow(r, n)); };
  double below = hill_n(0.9, 2), above = hill_n(1.1, 2);
  for (double n = 4; n <= 4096; n *= 2) {
    const double b = hill_n(0.9, n);
    const double a = hill_n(1.1, n);
    CHECK(b >= below);  // non-strict: saturates at 1 in double precision
    CHECK(a <= above);
    below = b;
    above = a;
  }
  CHECK(below == doctest::Approx(switch_h(0.9)).epsilon(1e-6));
  CHECK(above == doctest::Approx(switch_h(1.1)).epsilon(1e-6));
}

TEST_CASE("f_b") {
  CHECK(f_b(-1.0) == 0.0);
  CHECK(f_b(0.5) == 0.5);
  CHECK(f_b(0.0) == 0.0);
}

TEST_CASE("rhs_full examples") {
  FullParams p;  // all ones
  const auto at_origin = rhs_full(FullState{0, 0, 0, 0}, p);
  CHECK(at_origin[0] == p.V_R);
  CHECK(at_origin[1] == 0.0);
  CHECK(at_origin[2] == 0.0);
  CHECK(at_origin[3] == 0.0);

  const auto d = rhs_full(FullState{1, 0, 0, 1}, p);
  CHECK(d[0] == doctest::Approx(0.0));   // V_R*h(0) - B*P = 1 - 1
  CHECK(d[1] == doctest::Approx(1.0));   // V_B*B
  CHECK(d[2] == doctest::Approx(0.0));
  CHECK(d[3] == doctest::Approx(-1.0));  // -B*P

  // D nullcline: B = gamma_D D / V_B zeroes the second component
  FullParams q = random_full_params();
  const double D = 0.7;
  const auto nc = rhs_full(FullState{q.gamma_D * D / q.V_B, D, 0.3, 0.2}, q);
  CHECK(nc[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("rhs_reduced matches rescaled rhs_full") {
  // oracle: apply the variable change B = V_R b, D = V_B V_R d, R = k_R r,
  // P = V_R p to the full model and compare component scalings
  for (int trial = 0; trial < 100; ++trial) {
    const FullParams fp = random_full_params();
    const ReducedParams rp = reduce_params(fp);
    const ReducedState s{uniform(0, 2), uniform(0, 2), uniform(0, 2), uniform(0, 2)};
    const FullState S{fp.V_R * s.b, fp.V_B * fp.V_R * s.d, fp.k_R * s.r, fp.V_R * s.p};

    const auto dr = rhs_reduced(s, rp);
    const auto df = rhs_full(S, fp);
    CHECK(dr[0] == doctest::Approx(df[0] / fp.V_R).epsilon(1e-12));
    CHECK(dr[1] == doctest::Approx(df[1] / (fp.V_B * fp.V_R)).epsilon(1e-12));
    CHECK(dr[2] == doctest::Approx(df[2] / fp.k_R).epsilon(1e-12));
    CHECK(dr[3] == doctest::Approx(df[3] / fp.V_R).epsilon(1e-12));
  }
}

TEST_CASE("rhs_reduced basics") {
  const ReducedParams p = preset_reduced_standard();
  const auto at_origin = rhs_reduced(ReducedState{0, 0, 0, 0}, p);
  CHECK(at_origin[0] == 1.0);  // h_d(0) = 1
  CHECK(at_origin[1] == 0.0);
  CHECK(at_origin[2] == 0.0);
  CHECK(at_origin[3] == 0.0);

  // b nullcline: h_d(r) = alpha*b*p
  const double r = 1.0;
  const double bp = hill_reduced(r) / p.alpha;
  const auto nc = rhs_reduced(ReducedState{bp, 0.0, r, 1.0}, p);
  CHECK(nc[0] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("reduce_params") {
  FullParams ones;
  const ReducedParams unit = reduce_params(ones);
  CHECK(unit.alpha == 1.0);
  CHECK(unit.beta == 1.0);
  CHECK(unit.gamma == 1.0);
  CHECK(unit.delta == 1.0);
  CHECK(unit.epsilon == 1.0);

  FullParams fp;
  fp.V_R = 2.0;
  fp.gamma_B = 3.0;
  CHECK(reduce_params(fp).alpha == 6.0);

  FullParams bad;
  bad.k_R = 0.0;
  CHECK_THROWS_AS(reduce_params(bad), std::invalid_argument);
}

TEST_CASE("xy transform round trip") {
  const XyState a = to_xy(ReducedState{1.0, 0.2, 0.3, 0.0});
  CHECK(a.x == 1.0);
  CHECK(a.y == 1.0);
  const XyState b = to_xy(ReducedState{0.3, 0.0, 0.0, 0.7});
  CHECK(b.x == doctest::Approx(-0.4));
  CHECK(b.y == doctest::Approx(1.0));

  CHECK_THROWS_AS((from_xy(XyState{0.5, 0, 0, 0.2})), std::invalid_argument);

  for (int trial = 0; trial < 100; ++trial) {
    const ReducedState s{uniform(0, 3), uniform(0, 3), uniform(0, 3), uniform(0, 3)};
    const ReducedState back = from_xy(to_xy(s));
    CHECK(back.b == doctest::Approx(s.b).epsilon(1e-15));
    CHECK(back.p == doctest::Approx(s.p).epsilon(1e-15));
    CHECK(back.d == s.d);
    CHECK(back.r == s.r);
  }
}

TEST_CASE("rhs_transformed equals the push-forward of rhs_reduced") {
  // oracle: chain rule on x = b - p, y = b + p
  const ReducedParams p = preset_reduced_standard();
  for (int trial = 0; trial < 100; ++trial) {
    const ReducedState s{uniform(0, 2), uniform(0, 2), uniform(0, 2), uniform(0, 2)};
    const auto dr = rhs_reduced(s, p);
    const XyState xs = to_xy(s);
    const auto dt = rhs_transformed(xs, p);
    CHECK(dt[0] == doctest::Approx(dr[0] - dr[3]).epsilon(1e-10));  // dx = db - dp
    CHECK(dt[1] == doctest::Approx(dr[1]).epsilon(1e-12));
    CHECK(dt[2] == doctest::Approx(dr[2]).epsilon(1e-12));
    CHECK(dt[3] == doctest::Approx(dr[0] + dr[3]).epsilon(1e-10));  // dy = db + dp
  }
}

TEST_CASE("transformed x equation is independent of alpha") {
  ReducedParams p = preset_reduced_standard();
  const XyState s{0.4, 1.1, 0.8, 0.9};
  const double dx_ref = rhs_transformed(s, p)[0];
  p.alpha *= 10.0;
  CHECK(rhs_transformed(s, p)[0] == dx_ref);  // bit-identical
  p.alpha *= 1e6;
  CHECK(rhs_transformed(s, p)[0] == dx_ref);
}

TEST_CASE("y = |x| zeroes the sequestration term") {
  const ReducedParams p = preset_reduced_standard();
  const XyState s{-0.7, 0.5, 0.4, 0.7};  // b = 0
  const auto d = rhs_transformed(s, p);
  CHECK(d[3] == doctest::Approx(hill_reduced(s.r) + p.epsilon * s.d).epsilon(1e-12));
}

TEST_CASE("rhs_goodwin") {
  const GoodwinParams p = preset_goodwin();
  const auto at_origin = rhs_goodwin(GoodwinState{0, 0, 0}, p);
  CHECK(at_origin[0] == p.alpha1);
  CHECK(at_origin[1] == 0.0);
  CHECK(at_origin[2] == 0.0);

  // Z = K halves the synthesis term
  const auto half = rhs_goodwin(GoodwinState{0, 0, p.K}, p);
  CHECK(half[0] == doctest::Approx(0.5 * p.alpha1).epsilon(1e-12));

  // fixed point of the linear cascade
  const double X = 0.8;
  const double Y = p.alpha2 * X / p.gamma2;
  const double Z = p.alpha3 * Y / p.gamma3;
  const auto fp = rhs_goodwin(GoodwinState{X, Y, Z}, p);
  CHECK(fp[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(fp[2] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("forward invariance of the nonnegative orthant on zero faces") {
  // each component's derivative is >= 0 on its own zero face
  for (int trial = 0; trial < 200; ++trial) {
    const FullParams fp = random_full_params();
    const ReducedParams rp = reduce_params(fp);
    const GoodwinParams gp = preset_goodwin();
    const double a = uniform(0, 2), b = uniform(0, 2), c = uniform(0, 2);

    CHECK(rhs_full(FullState{0, a, b, c}, fp)[0] >= 0);
    CHECK(rhs_full(FullState{a, 0, b, c}, fp)[1] >= 0);
    CHECK(rhs_full(FullState{a, b, 0, c}, fp)[2] >= 0);
    CHECK(rhs_full(FullState{a, b, c, 0}, fp)[3] >= 0);

    CHECK(rhs_reduced(ReducedState{0, a, b, c}, rp)[0] >= 0);
    CHECK(rhs_reduced(ReducedState{a, 0, b, c}, rp)[1] >= 0);
    CHECK(rhs_reduced(ReducedState{a, b, 0, c}, rp)[2] >= 0);
    CHECK(rhs_reduced(ReducedState{a, b, c, 0}, rp)[3] >= 0);

    CHECK(rhs_goodwin(GoodwinState{0, a, b}, gp)[0] >= 0);
    CHECK(rhs_goodwin(GoodwinState{a, 0, b}, gp)[1] >= 0);
    CHECK(rhs_goodwin(GoodwinState{a, b, 0}, gp)[2] >= 0);
  }
}

TEST_CASE("state validation") {
  CHECK_THROWS_AS((FullState{-1, 0, 0, 0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((ReducedState{0, -1, 0, 0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((GoodwinState{0, 0, -1}.validate()), std::invalid_argument);
  CHECK_NOTHROW((FullState{0, 0, 0, 0}.validate()));
}

TEST_CASE("parameter JSON round trips") {
  const ReducedParams rp = preset_reduced_standard();
  const ReducedParams rp2 = reduced_params_from_json(to_json(rp));
  CHECK(rp2.alpha == rp.alpha);
  CHECK(rp2.beta == rp.beta);
  CHECK(rp2.gamma == rp.gamma);
  CHECK(rp2.delta == rp.delta);
  CHECK(rp2.epsilon == rp.epsilon);

  FullParams fp;
  fp.V_R = 2.5;
  fp.k_R = 0.3;
  const FullParams fp2 = full_params_from_json(to_json(fp));
  CHECK(fp2.V_R == fp.V_R);
  CHECK(fp2.k_R == fp.k_R);

  const GoodwinParams gp = preset_goodwin();
  const GoodwinParams gp2 = goodwin_params_from_json(to_json(gp));
  CHECK(gp2.n == gp.n);
  CHECK(gp2.K == gp.K);
}

TEST_CASE("parameter JSON rejects bad documents naming the key") {
  CHECK_THROWS_WITH_AS(reduced_params_from_json(R"({"alpha":1,"beta":1,"gamma":1,"delta":1})"),
                       doctest::Contains("epsilon"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      reduced_params_from_json(
          R"({"alpha":1,"beta":1,"gamma":1,"delta":1,"epsilon":1,"zeta":1})"),
      doctest::Contains("zeta"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      reduced_params_from_json(R"({"alpha":-1,"beta":1,"gamma":1,"delta":1,"epsilon":1})"),
      doctest::Contains("alpha"), std::invalid_argument);
  CHECK_THROWS_AS(full_params_from_json("not json"), nlohmann::json::exception);
}
