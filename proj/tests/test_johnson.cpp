#include <gtest/gtest.h>

#include "ughc/johnson.hpp"

using namespace ughc;

namespace {

// Oracle: adjacency straight from the definition, pairs of sets.
int count_adjacent(const JohnsonGraph& g, int v) {
  int c = 0;
  for (int w = 0; w < g.vertex_count(); ++w) {
    std::vector<int> I;
    std::set_intersection(g.set_of(v).begin(), g.set_of(v).end(), g.set_of(w).begin(), g.set_of(w).end(),
                          std::back_inserter(I));
    c += static_cast<int>(I.size()) == g.l() - g.t();
  }
  return c;
}

}  // namespace

TEST(Johnson, ColexRoundTrip) {
  for (std::uint64_t r = 0; r < binom(9, 4); ++r) EXPECT_EQ(colex_rank(colex_unrank(r, 4)), r);
  EXPECT_EQ(colex_unrank(0, 3), (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(colex_unrank(1, 3), (std::vector<int>{0, 1, 3}));
}

TEST(Johnson, SmallGraphs) {
  JohnsonGraph a(4, 2, 1);
  EXPECT_EQ(a.vertex_count(), 6);
  EXPECT_EQ(a.degree(), 4);
  JohnsonGraph b(6, 3, 1);
  EXPECT_EQ(b.vertex_count(), 20);
  EXPECT_EQ(b.degree(), 9);
  for (const auto* g : {&a, &b})
    for (int v = 0; v < g->vertex_count(); ++v) {
      EXPECT_EQ(static_cast<int>(g->neighbors(v).size()), count_adjacent(*g, v));
      EXPECT_EQ(g->neighbors(v).size(), g->degree_formula());
    }
}

TEST(Johnson, RejectsBadParameters) {
  EXPECT_THROW(JohnsonGraph(6, 3, 0), ParameterError);
  EXPECT_THROW(JohnsonGraph::from_alpha(6, 3, 0.5), ParameterError);
  EXPECT_THROW(JohnsonGraph(3, 3, 1), ParameterError);
}

TEST(Johnson, Densities) {
  JohnsonGraph g(6, 3, 1);
  std::vector<double> c(g.vertex_count(), 0.3);
  EXPECT_NEAR(density(g, c, {2}), 0.3, 1e-15);
  std::vector<double> F(g.vertex_count(), 0.0);
  F[g.index_of({1, 2, 4})] = 1;
  EXPECT_NEAR(density(g, F, {1}), 1.0 / 10, 1e-15);
  std::vector<double> ind(g.vertex_count(), 0.0);
  for (int v : g.basic_set({3})) ind[v] = 1;
  EXPECT_EQ(density(g, ind, {3, 5}), 1.0);
  EXPECT_NEAR(density(g, ind, {}), 10.0 / 20, 1e-15);
  EXPECT_THROW(g.basic_set({0, 1, 2}), ParameterError);
}

TEST(Johnson, ExpansionBasics) {
  JohnsonGraph g(6, 3, 1);
  std::vector<int> all(g.vertex_count());
  std::iota(all.begin(), all.end(), 0);
  EXPECT_EQ(expansion(g, all), 0.0);
  EXPECT_EQ(expansion(g, {4}), 1.0);
  EXPECT_EQ(laplacian_form(g, std::vector<double>(g.vertex_count(), 0.7)), 0.0);
  EXPECT_THROW(expansion(g, {}), ParameterError);
}

TEST(Johnson, ExpansionEqualsLaplacianRatio) {
  JohnsonGraph g(7, 3, 2);
  Rng rng(3);
  for (int it = 0; it < 30; ++it) {
    std::vector<int> S;
    std::vector<double> F(g.vertex_count(), 0.0);
    for (int v = 0; v < g.vertex_count(); ++v)
      if (uniform01(rng) < 0.3) { S.push_back(v); F[v] = 1; }
    if (S.empty()) continue;
    const double delta = static_cast<double>(S.size()) / g.vertex_count();
    EXPECT_NEAR(expansion(g, S), laplacian_form(g, F) / delta, 1e-12);
  }
}

TEST(Johnson, SubcubeExpansionJ842) {
  JohnsonGraph g(8, 4, 2);
  auto rep = subcube_expansion_bound(g, 1);
  // Oracle: a vertex of J|_a keeps a iff the removed pair avoids a.
  const double exact = 1.0 - binomd(3, 2) * binomd(4, 2) / (binomd(4, 2) * binomd(4, 2));
  EXPECT_NEAR(exact, 0.5, 1e-15);
  EXPECT_NEAR(rep.exact, exact, 1e-12);
  EXPECT_NEAR(rep.closed_form, exact, 1e-12);
  EXPECT_NEAR(rep.bound, 2.0 / 3.0, 1e-12);
  EXPECT_TRUE(rep.ok);
  auto r0 = subcube_expansion_bound(g, 0);
  EXPECT_EQ(r0.exact, 0.0);
  EXPECT_TRUE(r0.ok);
  EXPECT_LE(r0.bound, rep.bound);
}

TEST(Johnson, SubcubeExpansionBoundMonotoneAndSound) {
  for (auto [n, l, t] : std::vector<std::tuple<int, int, int>>{{9, 4, 1}, {10, 4, 2}, {10, 5, 1}, {11, 8, 2}}) {
    JohnsonGraph g(n, l, t);
    double prev = -1;
    for (int r = 0; 4 * r <= l; ++r) {
      auto rep = subcube_expansion_bound(g, r);
      EXPECT_TRUE(rep.ok) << n << " " << l << " " << t << " r=" << r;
      EXPECT_NEAR(rep.exact, rep.closed_form, 1e-12);
      EXPECT_GE(rep.bound, prev);
      prev = rep.bound;
    }
  }
}

TEST(Johnson, PerVertexOutflowVsSqrtEps) {
  // r = floor(32 sqrt(eps) / alpha): per-vertex outflow of J|_a must stay below 200 sqrt(eps).
  for (auto [n, l, t] : std::vector<std::tuple<int, int, int>>{{8, 4, 2}, {9, 4, 1}, {10, 8, 2}}) {
    JohnsonGraph g(n, l, t);
    for (double eps : {0.0001, 0.001, 0.003, 0.01}) {
      int r = static_cast<int>(std::floor(32 * std::sqrt(eps) / g.alpha()));
      if (4 * r >= l || r == 0) continue;
      std::vector<int> a(r);
      std::iota(a.begin(), a.end(), 0);
      for (int v : g.basic_set(a)) EXPECT_LE(vertex_outflow(g, v, a), 200 * std::sqrt(eps));
      EXPECT_LE(expansion(g, g.basic_set(a)), 200 * std::sqrt(eps));
    }
  }
}

TEST(Johnson, RestrictionIsJohnson) {
  JohnsonGraph g(8, 4, 2);
  EXPECT_TRUE(restriction_isomorphic(g, {}));
  EXPECT_TRUE(restriction_isomorphic(g, {3}));
  EXPECT_TRUE(restriction_isomorphic(g, {1, 6}));
  JohnsonGraph h(9, 3, 1);
  EXPECT_TRUE(restriction_isomorphic(h, {0, 8}));
}
