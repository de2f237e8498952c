#include <gtest/gtest.h>

#include "ughc/johnson.hpp"
#include "ughc/steppoly.hpp"

using namespace ughc;

TEST(StepPoly, PropertiesAcrossParameters) {
  for (double beta : {0.3, 0.5, 0.7})
    for (double nu : {0.05, 0.1}) {
      auto p = build_step_poly(beta, nu);
      auto r = check_step(p);
      EXPECT_TRUE(r.ok()) << beta << " " << nu;
      EXPECT_LE(p.degree(), p.degree_cap);
      EXPECT_LE(p(0), nu);
      EXPECT_GE(p(1), 1 - nu);
      EXPECT_LE(p(beta), nu);
      EXPECT_GE(p(beta + nu), 1 - nu);
      EXPECT_GT(r.points, 10000);
    }
}

TEST(StepPoly, MonotoneSamples) {
  auto p = build_step_poly(0.5, 0.1);
  EXPECT_LE(p(0.52), p(0.55));
  EXPECT_LE(p(0.55), p(0.58));
}

TEST(StepPoly, MarkovEndpoints) {
  auto p = build_step_poly(0.5, 0.1);
  auto r = check_step(p, 1000);
  EXPECT_GE(r.markov_lower, -1e-9);
  EXPECT_GE(r.markov_upper, -1e-9);
  EXPECT_GE(r.composition, -1e-9);
  EXPECT_GE(r.mirrored, -1e-9);
}

TEST(StepPoly, ChebyshevAndMonomialAgree) {
  auto p = build_step_poly(0.5, 0.1);
  auto m = p.monomial();
  for (double x : {0.0, 0.1, 0.37, 0.5, 0.99}) {
    long double s = 0;
    for (int k = static_cast<int>(m.size()) - 1; k >= 0; --k) s = s * x + m[k];
    EXPECT_NEAR(static_cast<double>(s), p(x), 1e-6 * std::max(1.0, std::pow(10.0, p.log10_max_monomial_coef - 12)));
  }
  EXPECT_GT(p.log10_max_monomial_coef, 0);
}

TEST(StepPoly, RejectsBadParameters) {
  EXPECT_THROW(build_step_poly(0.1, 0.2), ParameterError);
  EXPECT_THROW(build_step_poly(0.95, 0.1), ParameterError);
}

TEST(StepPoly, ExpandLocalFunctionIsExact) {
  VarSpace vs{4, 3};
  std::vector<std::pair<int, int>> slots{{0, 1}, {0, 3}};
  auto f = [](const std::vector<int>& lab) { return 0.1 * lab[0] + 0.7 * (lab[1] == 2) + 0.05 * lab[0] * lab[1]; };
  auto P = expand_local_function(vs, slots, f);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      Assignment x{0, a, 0, b};
      EXPECT_NEAR(evaluate(P, vs, x), f({a, b}), 1e-14);
    }
  EXPECT_LE(P.total_degree(), 2);
}

TEST(StepPoly, ComposeValExactOnTriangle) {
  UGInstance inst(3, 2, {{0, 1, 0, 0}, {1, 2, 0, 0}, {0, 2, 0, 0}}, true);
  VarSpace vs{3, 2};
  auto p = build_step_poly(0.5, 0.1);
  auto ev = compose_val(p, inst, vs, 0, ValMode::Single, {6, 0});
  EXPECT_FALSE(ev.truncated);
  for (int code = 0; code < 8; ++code) {
    Assignment x{code & 1, (code >> 1) & 1, (code >> 2) & 1};
    const double vv = vertex_value(inst, x, 0);
    EXPECT_NEAR(evaluate(ev.poly, vs, x), p(vv), 1e-12);
    if (vv == 1.0) EXPECT_GE(evaluate(ev.poly, vs, x), 1 - p.nu);
    if (vv == 0.0) EXPECT_LE(evaluate(ev.poly, vs, x), p.nu);
  }
  auto both = compose_val(p, inst, vs, 1, ValMode::Both, {6, 6});
  EXPECT_FALSE(both.truncated);
  Assignment x{0, 0, 0}, y{0, 1, 1};
  EXPECT_NEAR(evaluate(both.poly, vs, x, &y), p(vertex_value_and(inst, x, y, 1)), 1e-12);
}

TEST(StepPoly, TruncatedSurrogateEqualsLinearForm) {
  JohnsonGraph g(6, 2, 1);
  auto [inst, A] = plant(g.simple(), 3, {0.3, 2});
  VarSpace vs{inst.vertex_count(), 3};
  auto p = build_step_poly(0.5, 0.1);
  auto ev = compose_val(p, inst, vs, 4, ValMode::Single, {4, 0});
  ASSERT_TRUE(ev.truncated);
  EXPECT_EQ(ev.poly.total_degree(), 2);
  Rng rng(5);
  for (int it = 0; it < 50; ++it) {
    Assignment x(inst.vertex_count());
    for (auto& a : x) a = uniform_below(rng, 3);
    const double lin = (vertex_value(inst, x, 4) - 0.5 + 0.1) / 0.2;
    EXPECT_NEAR(evaluate(ev.poly, vs, x), lin, 1e-12);
    EXPECT_NEAR(ev.eval(vs, x), std::clamp(lin, 0.0, 1.0), 1e-12);
  }
  EXPECT_THROW(compose_val(p, inst, vs, 4, ValMode::Single, {1, 0}), DegreeExhausted);
}
