#include <gtest/gtest.h>

#include "ughc/johnson.hpp"
#include "ughc/sos.hpp"

using namespace ughc;

namespace {

UGInstance triangle() { return UGInstance(3, 2, {{0, 1, 1, 0}, {1, 2, 1, 0}, {0, 2, 1, 0}}, true); }

PseudoExpectation solved(const UGInstance& inst, int D, double* obj = nullptr) {
  auto [pe, info] = solve(relax(inst, D));
  if (obj) *obj = info.objective;
  return pe;
}

Poly random_poly(const VarSpace& vs, int deg, Rng& rng, int terms = 6) {
  Poly p;
  for (int t = 0; t < terms; ++t) {
    Mono m;
    const int d = static_cast<int>(uniform_below(rng, deg + 1));
    for (int i = 0; i < d; ++i) m.push(vs.id(0, uniform_below(rng, vs.n), uniform_below(rng, vs.q)));
    if (!canonical(m, vs)) continue;
    p.terms.push_back({m, 2 * uniform01(rng) - 1});
  }
  p.normalize();
  return p;
}

}  // namespace

TEST(Sos, ConsistentInstanceHasValueOne) {
  JohnsonGraph g(5, 2, 1);
  for (int q : {2, 3}) {
    auto [inst, A] = plant(g.simple(), q, {0.0, 4});
    double obj = 0;
    auto pe = solved(inst, 2, &obj);
    EXPECT_NEAR(obj, 1.0, 1e-6);
    EXPECT_NEAR(pe(val_poly(inst, pe.vars())), 1.0, 1e-6);
  }
}

TEST(Sos, TriangleBothDegrees) {
  auto inst = triangle();
  const double opt = brute_force_opt(inst).value;
  double o2 = 0, o4 = 0;
  solved(inst, 2, &o2);
  solved(inst, 4, &o4);
  // frozen from an independent full-basis conic solve
  EXPECT_NEAR(o2, 0.75, 1e-6);
  EXPECT_GE(o2, opt - 1e-6);
  EXPECT_NEAR(o4, opt, 1e-6);
}

TEST(Sos, MatchesIndependentConicSolver) {
  // values frozen from a full-basis formulation solved by an external conic solver
  JohnsonGraph g5(5, 2, 1), g4(4, 2, 1);
  double o = 0;
  solved(plant(g5.simple(), 2, {0.3, 3}).first, 2, &o);
  EXPECT_NEAR(o, 0.834886349, 2e-6);
  solved(plant(g5.simple(), 3, {0.3, 3}).first, 2, &o);
  EXPECT_NEAR(o, 0.833561796, 2e-6);
  solved(plant(g4.simple(), 3, {0.5, 7}).first, 2, &o);
  EXPECT_NEAR(o, 0.739698060, 2e-6);
}

TEST(Sos, DominanceAndDegreeMonotonicity) {
  JohnsonGraph g(5, 2, 1);
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    auto [inst, A] = plant(g.simple(), 2, {0.4, seed});
    const double opt = brute_force_opt(inst).value;
    double o2 = 0, o4 = 0;
    auto p2 = solved(inst, 2, &o2);
    auto p4 = solved(inst, 4, &o4);
    EXPECT_GE(o2, opt - 1e-6);
    EXPECT_GE(o4, opt - 1e-6);
    EXPECT_LE(o4, o2 + 1e-6);
    EXPECT_TRUE(validate(p2).ok());
    EXPECT_TRUE(validate(p4).ok());
  }
}

TEST(Sos, BudgetExceeded) {
  JohnsonGraph g(8, 2, 1);
  auto [inst, A] = plant(g.simple(), 2, {0.0, 1});
  EXPECT_THROW(relax(inst, 4), BudgetExceeded);
  EXPECT_THROW(relax(inst, 3), ParameterError);
}

TEST(Sos, ValidateReports) {
  JohnsonGraph g(4, 2, 1);
  auto [inst, A] = plant(g.simple(), 3, {0.2, 2});
  auto pe = solved(inst, 4);
  auto rep = validate(pe);
  EXPECT_TRUE(rep.ok());
  EXPECT_LE(rep.scaling, 1e-6);
  EXPECT_GE(rep.min_eig, -1e-7);
  EXPECT_LE(rep.partition, 1e-6);
  EXPECT_GE(rep.marginal_min, -1e-8);

  auto integral = validate(from_assignment(A, 3));
  EXPECT_TRUE(integral.ok());
  EXPECT_EQ(integral.partition, 0.0);
  EXPECT_EQ(integral.scaling, 0.0);
  EXPECT_EQ(integral.marginal_sum, 0.0);
}

TEST(Sos, CorruptedTableIsFlagged) {
  JohnsonGraph g(4, 2, 1);
  auto [inst, A] = plant(g.simple(), 2, {0.0, 2});
  auto pe = solved(inst, 2);
  auto j = pe_to_json(pe);
  EXPECT_EQ(j["basis"], "full");
  auto back = pe_from_json(j);
  EXPECT_TRUE(validate(back).ok());
  for (const char* key : {"X:1:0", "X:0:1|X:3:0", "X:2:1"}) {
    auto bad = j;
    bad["moments"][key] = bad["moments"][key].get<double>() + 1.0;
    EXPECT_FALSE(validate(pe_from_json(bad)).ok()) << key;
  }
}

TEST(Sos, SerializationRoundTrip) {
  JohnsonGraph g(4, 2, 1);
  auto [inst, A] = plant(g.simple(), 3, {0.3, 9});
  auto pe = solved(inst, 2);
  auto back = pe_from_json(pe_to_json(pe));
  auto vs = pe.vars();
  EXPECT_NEAR(back(val_poly(inst, vs)), pe(val_poly(inst, vs)), 1e-12);
  auto red = pe_from_json(pe_to_json(pe, 10));
  EXPECT_EQ(pe_to_json(pe, 10)["basis"], "reduced");
  EXPECT_NEAR(red(val_poly(inst, vs)), pe(val_poly(inst, vs)), 1e-12);
  EXPECT_EQ(parse_mono_key("X:2:1|X:0:2", vs), parse_mono_key("X:0:2|X:2:1", vs));
  EXPECT_THROW(parse_mono_key("X:0:1|X:0:2", vs), ParameterError);
}

TEST(Sos, FromAssignmentAndMixture) {
  JohnsonGraph g(5, 2, 1);
  auto [inst, A] = plant(g.simple(), 3, {0.2, 5});
  auto pe = from_assignment(A, 3);
  EXPECT_DOUBLE_EQ(pe(val_poly(inst, pe.vars())), value(inst, A));
  auto B = shift(A, 2, 3);
  auto mix = mixture({{pe, 0.5}, {from_assignment(B, 3), 0.5}});
  for (int u = 0; u < 10; ++u)
    for (int a = 0; a < 3; ++a) EXPECT_DOUBLE_EQ(mix.x(u, a), 0.5 * ((A[u] == a) + (B[u] == a)));
  EXPECT_TRUE(validate(mix).ok());
  EXPECT_THROW(mixture({{pe, 0.7}, {pe, 0.7}}), ParameterError);
}

TEST(Sos, ProductFactorizes) {
  JohnsonGraph g(4, 2, 1);
  auto [inst, A] = plant(g.simple(), 2, {0.3, 1});
  double obj = 0;
  auto pe = solved(inst, 4, &obj);
  auto pp = product(pe);
  const auto& vs = pe.vars();
  for (int u = 0; u < 6; ++u)
    for (int v = 0; v < 6; ++v) EXPECT_NEAR(pp.xx(u, 0, v, 1, 0, 1), pe.x(u, 0) * pe.x(v, 1), 1e-15);
  EXPECT_GE(pp(val_and_poly(inst, vs)), obj * obj - 1e-9);
  // product of integral = integral pair
  Assignment B = shift(A, 1, 2);
  auto ip = product(from_assignment(A, 2), from_assignment(B, 2));
  EXPECT_TRUE(ip.is_distribution());
  EXPECT_DOUBLE_EQ(ip(val_and_poly(inst, vs)), value_and(inst, A, B));
  EXPECT_TRUE(validate(pp).ok());
}

TEST(Sos, ConditionBasics) {
  JohnsonGraph g(4, 2, 1);
  auto [inst, A] = plant(g.simple(), 3, {0.0, 8});
  auto pe = from_assignment(A, 3);
  const auto& vs = pe.vars();
  auto one = condition(pe, EventPoly::from(Poly::constant(1.0), "one"));
  EXPECT_DOUBLE_EQ(one.x(2, A[2]), 1.0);
  auto same = condition(pe, EventPoly::from(x_var(vs, 0, 3, A[3]), "vertex"));
  for (int u = 0; u < 6; ++u) EXPECT_DOUBLE_EQ(same.x(u, A[u]), 1.0);
  EXPECT_THROW(condition(pe, EventPoly::from(x_var(vs, 0, 3, A[3] + 1), "vertex")), NearZeroEvent);

  // mixture algebra: conditioning on X_{u,0} selects the component with x(u) = 0
  Assignment B = shift(A, 1, 3);
  auto mix = mixture({{pe, 0.3}, {from_assignment(B, 3), 0.7}});
  const int u = 0, a = A[0];
  auto sel = condition(mix, EventPoly::from(x_var(vs, 0, u, a), "vertex"));
  for (int v = 0; v < 6; ++v)
    for (int b = 0; b < 3; ++b) EXPECT_DOUBLE_EQ(sel.x(v, b), (A[v] == b) ? 1.0 : 0.0);
}

TEST(Sos, ConditioningMomentBackedKeepsValidity) {
  JohnsonGraph g(4, 2, 1);
  auto [inst, A] = plant(g.simple(), 2, {0.34, 3});
  auto pe = solved(inst, 4);
  const auto& vs = pe.vars();
  for (int u = 0; u < 6; ++u)
    for (int a = 0; a < 2; ++a) {
      auto c = condition(pe, EventPoly::from(x_var(vs, 0, u, a), "vertex"));
      EXPECT_EQ(c.degree(), 2);
      EXPECT_NEAR(c.x(u, a), 1.0, 1e-9);
      auto rep = validate(c);
      EXPECT_GE(rep.min_eig, -1e-6);
      EXPECT_LE(rep.partition, 1e-6);
    }
  auto c = condition(pe, EventPoly::from(x_var(vs, 0, 0, 0), "vertex"));
  EXPECT_THROW(condition(c, EventPoly::from(x_var(vs, 0, 1, 0), "vertex")), DegreeExhausted);
  auto p2 = solved(inst, 2);
  EXPECT_THROW(condition(p2, EventPoly::from(x_var(vs, 0, 1, 0), "vertex")), DegreeExhausted);
}

TEST(Sos, PseudoProbabilities) {
  JohnsonGraph g(4, 2, 1);
  auto [inst, A] = plant(g.simple(), 3, {0.3, 4});
  auto pe = solved(inst, 2);
  const auto& vs = pe.vars();
  for (int u = 0; u < 6; ++u) {
    double s = 0;
    for (int a = 0; a < 3; ++a) s += pseudo_probability(pe, x_var(vs, 0, u, a));
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
  auto pp = product(pe);
  auto ev = mul(x_var(vs, 0, 1, 2), x_var(vs, 1, 1, 0), vs);
  EXPECT_NEAR(pseudo_probability(pp, ev), pe.x(1, 2) * pe.x(1, 0), 1e-12);
  auto integ = from_assignment(A, 3);
  EXPECT_EQ(pseudo_probability(integ, x_var(vs, 0, 2, A[2])), 1.0);
  auto given = x_var(vs, 0, 2, A[2] + 1);
  EXPECT_THROW(pseudo_probability(integ, x_var(vs, 0, 1, 0), &given), NearZeroEvent);
}

TEST(Sos, ShiftSymmetrize) {
  JohnsonGraph g(4, 2, 1);
  auto [inst, A] = plant(g.simple(), 3, {0.3, 6});
  double obj = 0;
  auto pe = solved(inst, 2, &obj);
  auto sym = shift_symmetrize(pe);
  const auto& vs = pe.vars();
  for (int u = 0; u < 6; ++u)
    for (int a = 0; a < 3; ++a) EXPECT_NEAR(sym.x(u, a), 1.0 / 3, 1e-12);
  EXPECT_NEAR(sym(val_poly(inst, vs)), obj, 1e-9);
  auto twice = shift_symmetrize(sym);
  Rng rng(3);
  for (int it = 0; it < 30; ++it) {
    auto p = random_poly(vs, 2, rng);
    EXPECT_NEAR(twice(p), sym(p), 1e-12);
  }
  auto dsym = shift_symmetrize(from_assignment(A, 3));
  EXPECT_TRUE(dsym.is_distribution());
  EXPECT_EQ(dsym.distribution()->points().size(), 3u);
  EXPECT_DOUBLE_EQ(dsym(val_poly(inst, vs)), value(inst, A));
}

TEST(Sos, ZIdentities) {
  JohnsonGraph g(4, 2, 1);
  auto [inst, A] = plant(g.simple(), 2, {0.3, 2});
  auto pe = solved(inst, 4);
  auto rep = z_identities(product(pe), inst);
  EXPECT_LE(rep.worst(), 1e-9);
  Assignment B = A;
  B[0] ^= 1;
  auto ip = product(from_assignment(A, 2), from_assignment(B, 2));
  auto r2 = z_identities(ip, inst);
  EXPECT_EQ(r2.worst(), 0.0);
  for (int u = 0; u < 6; ++u)
    for (int s = 0; s < 2; ++s) EXPECT_EQ(z_moment(ip, {{u, s}}), mod(A[u] - B[u], 2) == s ? 1.0 : 0.0);
}

TEST(Sos, PseudoCauchySchwarz) {
  JohnsonGraph g(4, 2, 1);
  auto [inst, A] = plant(g.simple(), 3, {0.3, 11});
  auto pe = solved(inst, 2);
  const auto& vs = pe.vars();
  Rng rng(17);
  for (int it = 0; it < 100; ++it) {
    auto f = random_poly(vs, 1, rng), h = random_poly(vs, 1, rng);
    const double fg = pe(mul(f, h, vs)), ff = pe(mul(f, f, vs)), gg = pe(mul(h, h, vs));
    EXPECT_LE(fg * fg, ff * gg + 1e-9);
  }
}

TEST(Sos, LocalMarginalsAreDistributions) {
  JohnsonGraph g(5, 2, 1);
  auto [inst, A] = plant(g.simple(), 3, {0.5, 12});
  auto pe = solved(inst, 2);
  for (int u = 0; u < 10; ++u)
    for (int v = u + 1; v < 10; ++v) {
      double s = 0;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          EXPECT_GE(pe.xx(u, a, v, b), -1e-8);
          s += pe.xx(u, a, v, b);
        }
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
}
