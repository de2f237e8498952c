#include <gtest/gtest.h>

#include "ughc/johnson.hpp"
#include "ughc/ug_core.hpp"

using namespace ughc;

namespace {

UGInstance triangle() {
  return UGInstance(3, 2, {{0, 1, 1, 0}, {1, 2, 1, 0}, {0, 2, 1, 0}}, true);
}

// Independent oracle: enumerate every assignment, nothing pinned.
double full_enum_opt(const UGInstance& inst) {
  const int n = inst.vertex_count(), q = inst.q();
  double best = 0;
  Assignment x(n, 0);
  for (std::uint64_t code = 0; code < ipow(q, n); ++code) {
    std::uint64_t c = code;
    for (int i = 0; i < n; ++i) { x[i] = static_cast<int>(c % q); c /= q; }
    int sat = 0;
    for (const auto& e : inst.edges()) sat += ((x[e.u] - x[e.v]) % q + q) % q == e.b;
    best = std::max(best, static_cast<double>(sat) / inst.edges().size());
  }
  return best;
}

}  // namespace

TEST(UgCore, ConstantAssignmentSatisfiesZeroShifts) {
  JohnsonGraph g(4, 2, 1);
  auto [inst, A] = plant(g.simple(), 3, {0.0, 1});
  std::vector<int> zeros(inst.edges().size(), 0);
  auto z = inst.with_shifts(zeros);
  EXPECT_DOUBLE_EQ(value(z, Assignment(z.vertex_count(), 2)), 1.0);
}

TEST(UgCore, SingleFlippedVertex) {
  JohnsonGraph g(6, 3, 1);
  auto s = g.simple();
  std::vector<Edge> E;
  for (auto [u, v] : s.edges) E.push_back({u, v, 0, 0});
  UGInstance inst(s.n, 2, E, true);
  Assignment x(s.n, 0);
  x[5] = 1;
  const double d = g.degree();
  EXPECT_NEAR(value(inst, x), 1.0 - d / inst.edges().size(), 1e-15);
  EXPECT_EQ(vertex_value(inst, x, 5), 0.0);
  EXPECT_EQ(vertex_value(inst, x, g.neighbors(5)[0]), 1.0 - 1.0 / d);
}

TEST(UgCore, TriangleOpt) {
  auto inst = triangle();
  const double oracle = full_enum_opt(inst);
  EXPECT_NEAR(oracle, 2.0 / 3.0, 1e-15);
  auto r = brute_force_opt(inst);
  EXPECT_NEAR(r.value, 2.0 / 3.0, 1e-15);
  EXPECT_EQ(r.x[0], 0);
  EXPECT_NEAR(value(inst, r.x), r.value, 1e-15);
}

TEST(UgCore, BruteForceMatchesFullEnumeration) {
  JohnsonGraph g(5, 2, 1);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto [inst, A] = plant(g.simple(), 2, {0.4, seed});
    EXPECT_NEAR(brute_force_opt(inst).value, full_enum_opt(inst), 1e-12);
  }
}

TEST(UgCore, BruteForceBudget) {
  JohnsonGraph g(8, 2, 1);
  auto [inst, A] = plant(g.simple(), 3, {0.1, 3});
  EXPECT_THROW(brute_force_opt(inst, 1000), BudgetExceeded);
}

TEST(UgCore, PlantedValueIsGenerationCount) {
  JohnsonGraph g(8, 2, 1);
  auto s = g.simple();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto [inst, A] = plant(s, 3, {0.2, seed});
    // recount mismatches against the clean shifts
    int mism = 0;
    for (const auto& e : inst.edges()) mism += mod(A[e.u] - A[e.v], 3) != e.b;
    EXPECT_LE(mism, inst.planted->corrupted);
    EXPECT_EQ(inst.planted->corrupted, static_cast<int>(std::lround(0.2 * s.edges.size())));
    EXPECT_DOUBLE_EQ(value(inst, A), 1.0 - static_cast<double>(mism) / s.edges.size());
    EXPECT_DOUBLE_EQ(inst.planted->realized_value, value(inst, A));
  }
}

TEST(UgCore, PlantZeroNoiseAndFullNoise) {
  JohnsonGraph g(8, 2, 1);
  auto [inst, A] = plant(g.simple(), 2, {0.0, 11});
  EXPECT_EQ(value(inst, A), 1.0);
  double avg = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) avg += plant(g.simple(), 2, {1.0, seed}).first.planted->realized_value;
  EXPECT_NEAR(avg / 200, 0.5, 0.02);
  EXPECT_THROW(plant(g.simple(), 2, {1.5, 0}), ParameterError);
}

TEST(UgCore, PlantIsDeterministic) {
  JohnsonGraph g(6, 2, 1);
  auto a = plant(g.simple(), 3, {0.3, 42});
  auto b = plant(g.simple(), 3, {0.3, 42});
  EXPECT_EQ(to_json(a.first).dump(), to_json(b.first).dump());
  EXPECT_EQ(a.second, b.second);
}

TEST(UgCore, ValueAndProperties) {
  JohnsonGraph g(6, 2, 1);
  auto [inst, A] = plant(g.simple(), 3, {0.3, 5});
  Rng rng(9);
  for (int it = 0; it < 20; ++it) {
    Assignment x(inst.vertex_count()), y(inst.vertex_count());
    for (auto& a : x) a = uniform_below(rng, 3);
    for (auto& a : y) a = uniform_below(rng, 3);
    EXPECT_EQ(value_and(inst, x, x), value(inst, x));
    EXPECT_EQ(value_and(inst, x, shift(x, 2, 3)), value(inst, x));
    EXPECT_LE(value_and(inst, x, y), std::min(value(inst, x), value(inst, y)));
  }
}

TEST(UgCore, IndependentPairsQ2EdgeCount) {
  JohnsonGraph g(8, 2, 1);
  auto [inst, A] = plant(g.simple(), 2, {1.0, 1});
  Rng rng(4);
  Assignment x(inst.vertex_count()), y(inst.vertex_count());
  for (auto& a : x) a = uniform_below(rng, 2);
  for (auto& a : y) a = uniform_below(rng, 2);
  int both = 0;
  for (const auto& e : inst.edges())
    both += (mod(x[e.u] - x[e.v], 2) == e.b) && (mod(y[e.u] - y[e.v], 2) == e.b);
  EXPECT_DOUBLE_EQ(value_and(inst, x, y), static_cast<double>(both) / inst.edges().size());
}

TEST(UgCore, ShiftInvarianceAndDoubleCounting) {
  JohnsonGraph g(7, 3, 1);
  auto [inst, A] = plant(g.simple(), 4, {0.25, 8});
  Rng rng(1);
  for (int it = 0; it < 10; ++it) {
    Assignment x(inst.vertex_count());
    for (auto& a : x) a = uniform_below(rng, 4);
    for (int s = 0; s < 4; ++s) EXPECT_EQ(value(inst, shift(x, s, 4)), value(inst, x));
    double avg = 0;
    for (int u = 0; u < inst.vertex_count(); ++u) avg += vertex_value(inst, x, u);
    EXPECT_NEAR(avg / inst.vertex_count(), value(inst, x), 1e-12);
  }
}

TEST(UgCore, BruteForceInvariantUnderGaugeAndRelabel) {
  JohnsonGraph g(5, 2, 1);
  auto [inst, A] = plant(g.simple(), 3, {0.5, 21});
  const double opt = brute_force_opt(inst).value;
  // gauge: b_e += y(u) - y(v)
  Rng rng(2);
  Assignment y(inst.vertex_count());
  for (auto& a : y) a = uniform_below(rng, 3);
  std::vector<int> b;
  for (const auto& e : inst.edges()) b.push_back(e.b + y[e.u] - y[e.v]);
  EXPECT_NEAR(brute_force_opt(inst.with_shifts(b)).value, opt, 1e-12);
  // relabel vertices by reversal
  const int n = inst.vertex_count();
  std::vector<Edge> E;
  for (const auto& e : inst.edges()) E.push_back({n - 1 - e.u, n - 1 - e.v, e.b, 0});
  EXPECT_NEAR(brute_force_opt(UGInstance(n, 3, E, true)).value, opt, 1e-12);
}

TEST(UgCore, RandomizeEdges) {
  JohnsonGraph g(6, 2, 1);
  auto [inst, A] = plant(g.simple(), 3, {0.0, 3});
  auto same = randomize_edges(inst, {}, 5);
  EXPECT_EQ(to_json(same).dump(), to_json(inst).dump());
  std::vector<int> S = {0, 4};
  auto r = randomize_edges(inst, S, 5);
  EXPECT_EQ(to_json(r).dump(), to_json(randomize_edges(inst, S, 5)).dump());
  for (std::size_t i = 0; i < r.edges().size(); ++i) {
    const auto& e = r.edges()[i];
    bool touched = e.u == 0 || e.u == 4 || e.v == 0 || e.v == 4;
    if (!touched) EXPECT_EQ(e.b, inst.edges()[i].b);
  }
  // Full randomization averages to 1/q at any fixed x.
  std::vector<int> all(inst.vertex_count());
  std::iota(all.begin(), all.end(), 0);
  double avg = 0;
  for (std::uint64_t s = 0; s < 300; ++s) avg += value(randomize_edges(inst, all, s), A);
  EXPECT_NEAR(avg / 300, 1.0 / 3, 0.02);
}

TEST(UgCore, RandomizeDropBound) {
  JohnsonGraph g(6, 2, 1);
  auto [inst, A] = plant(g.simple(), 2, {0.1, 17});
  const double opt = brute_force_opt(inst).value;
  for (int k = 1; k <= 4; ++k) {
    std::vector<int> S(k);
    std::iota(S.begin(), S.end(), 0);
    auto r = randomize_edges(inst, S, 99 + k);
    EXPECT_GE(brute_force_opt(r).value, opt - 2.0 * k / inst.vertex_count() - 1e-12);
  }
}

TEST(UgCore, JsonRoundTrip) {
  JohnsonGraph g(6, 2, 1);
  auto [inst, A] = plant(g.simple(), 3, {0.2, 7});
  auto j = to_json(inst);
  auto back = instance_from_json(j);
  EXPECT_EQ(to_json(back).dump(), j.dump());
  EXPECT_EQ(value(back, A), value(inst, A));
  EXPECT_EQ(back.graph->n, 6);
}

TEST(UgCore, RejectsBadInput) {
  EXPECT_THROW(UGInstance(3, 2, {{1, 1, 0, 0}}, true), ParameterError);
  EXPECT_THROW(UGInstance(3, 1, {{0, 1, 0, 0}}, true), ParameterError);
  auto inst = triangle();
  EXPECT_THROW(value(inst, Assignment{0, 1}), ParameterError);
}
