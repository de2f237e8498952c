#pragma once

#include <algorithm>
#include <concepts>
#include <set>
#include <vector>

#include "ughc/common.hpp"
#include "ughc/ug_core.hpp"

namespace ughc {

// A graph whose non-expanding "basic sets" are indexed by small subsets.
template <typename G>
concept GraphWithBasicSets = requires(const G& g, const std::vector<int>& a) {
  { g.vertex_count() } -> std::convertible_to<int>;
  { g.neighbors(0) } -> std::convertible_to<const std::vector<int>&>;
  { g.basic_set(a) } -> std::convertible_to<std::vector<int>>;
};

// Procedure: colex_rank
inline std::uint64_t colex_rank(const std::vector<int>& s) {
  std::uint64_t r = 0;
  for (std::size_t i = 0; i < s.size(); ++i) r += binom(s[i], static_cast<long>(i) + 1);
  return r;
}

// Procedure: colex_unrank
inline std::vector<int> colex_unrank(std::uint64_t r, int k) {
  std::vector<int> s(k);
  for (int i = k; i >= 1; --i) {
    int c = i - 1;
    while (binom(c + 1, i) <= r) ++c;
    s[i - 1] = c;
    r -= binom(c, i);
  }
  return s;
}

class JohnsonGraph {
 public:
  static constexpr std::uint64_t kMaxVertices = 200000;

  JohnsonGraph(int n, int l, int t) : n_(n), l_(l), t_(t) {
    if (l < 1 || n <= l) throw ParameterError("need 1 <= l < n");
    if (t < 1 || t > l) throw ParameterError("need 1 <= t <= l (t = alpha*l must be a positive integer)");
    const std::uint64_t N = binom(n, l);
    if (N > kMaxVertices) throw BudgetExceeded("Johnson graph too large to enumerate");
    sets_.resize(N);
    for (std::uint64_t r = 0; r < N; ++r) sets_[r] = colex_unrank(r, l);
    adj_.assign(N, {});
    for (std::uint64_t r = 0; r < N; ++r) {
      const auto& A = sets_[r];
      std::vector<int> outside;
      for (int x = 0, j = 0; x < n; ++x) {
        if (j < l && A[j] == x) { ++j; continue; }
        outside.push_back(x);
      }
      for_each_subset(l, t, [&](const std::vector<int>& rem) {
        for_each_subset(static_cast<int>(outside.size()), t, [&](const std::vector<int>& add) {
          std::vector<int> B;
          B.reserve(l);
          for (int i = 0, k = 0; i < l; ++i) {
            if (k < t && rem[k] == i) { ++k; continue; }
            B.push_back(A[i]);
          }
          for (int i : add) B.push_back(outside[i]);
          std::sort(B.begin(), B.end());
          adj_[r].push_back(static_cast<int>(colex_rank(B)));
        });
      });
      std::sort(adj_[r].begin(), adj_[r].end());
    }
  }

  static JohnsonGraph from_alpha(int n, int l, double alpha) {
    double t = alpha * l;
    if (std::abs(t - std::round(t)) > 1e-9) throw ParameterError("alpha*l must be an integer");
    return JohnsonGraph(n, l, static_cast<int>(std::lround(t)));
  }

  int n() const { return n_; }
  int l() const { return l_; }
  int t() const { return t_; }
  double alpha() const { return static_cast<double>(t_) / l_; }
  int vertex_count() const { return static_cast<int>(sets_.size()); }
  const std::vector<int>& set_of(int v) const { return sets_[v]; }
  int index_of(const std::vector<int>& s) const { return static_cast<int>(colex_rank(s)); }
  const std::vector<int>& neighbors(int v) const { return adj_[v]; }
  std::uint64_t degree_formula() const { return binom(l_, t_) * binom(n_ - l_, t_); }
  int degree() const { return adj_.empty() ? 0 : static_cast<int>(adj_[0].size()); }

  std::size_t edge_count() const { return sets_.size() * static_cast<std::size_t>(degree()) / 2; }

  SimpleGraph simple() const {
    SimpleGraph g;
    g.n = vertex_count();
    for (int u = 0; u < g.n; ++u)
      for (int v : adj_[u])
        if (u < v) g.edges.emplace_back(u, v);
    g.tag = GraphTag{"johnson", n_, l_, t_};
    return g;
  }

  bool contains(int v, const std::vector<int>& a) const {
    return std::includes(sets_[v].begin(), sets_[v].end(), a.begin(), a.end());
  }

  // J|_a: all vertices whose set contains a.
  std::vector<int> basic_set(const std::vector<int>& a) const {
    if (static_cast<int>(a.size()) > l_ - 1) throw ParameterError("restriction must have size <= l-1");
    std::vector<int> out;
    for (int v = 0; v < vertex_count(); ++v)
      if (contains(v, a)) out.push_back(v);
    if (out.empty()) throw ParameterError("empty subcube");
    return out;
  }

  std::vector<char> mask_of(const std::vector<int>& S) const {
    std::vector<char> m(vertex_count(), 0);
    for (int v : S) m[v] = 1;
    return m;
  }

 private:
  int n_, l_, t_;
  std::vector<std::vector<int>> sets_;
  std::vector<std::vector<int>> adj_;
};

static_assert(GraphWithBasicSets<JohnsonGraph>);

struct Subcube {
  std::vector<int> a;
  std::vector<int> vertices;
};

inline Subcube subcube(const JohnsonGraph& g, std::vector<int> a) {
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  Subcube s{a, g.basic_set(a)};
  return s;
}

// Procedure: density
inline double density(const JohnsonGraph& g, const std::vector<double>& F, const std::vector<int>& a) {
  auto S = g.basic_set(a);
  double s = 0;
  for (int v : S) s += F[v];
  return s / static_cast<double>(S.size());
}

// Procedure: expansion
// Fraction of edges leaving S, from a uniform endpoint in S.
inline double expansion(const JohnsonGraph& g, const std::vector<int>& S) {
  if (S.empty()) throw ParameterError("expansion of empty set");
  auto m = g.mask_of(S);
  long out = 0, tot = 0;
  for (int u : S)
    for (int v : g.neighbors(u)) { ++tot; out += !m[v]; }
  return tot ? static_cast<double>(out) / static_cast<double>(tot) : 0.0;
}

// Procedure: laplacian_form
// 1/2 E_{edge}[(F(u)-F(v))^2] for the normalized Laplacian.
inline double laplacian_form(const JohnsonGraph& g, const std::vector<double>& F) {
  double s = 0;
  long cnt = 0;
  for (int u = 0; u < g.vertex_count(); ++u)
    for (int v : g.neighbors(u)) {
      if (v < u) continue;
      double d = F[u] - F[v];
      s += d * d;
      ++cnt;
    }
  return cnt ? 0.5 * s / static_cast<double>(cnt) : 0.0;
}

// Fraction of v's neighbours outside J|_a (same for every v in J|_a).
inline double vertex_outflow(const JohnsonGraph& g, int v, const std::vector<int>& a) {
  int out = 0;
  for (int w : g.neighbors(v)) out += !g.contains(w, a);
  return g.neighbors(v).empty() ? 0.0 : static_cast<double>(out) / g.neighbors(v).size();
}

struct SubcubeExpansionReport {
  double bound = 0;        // 1 - (1 - 4 alpha / 3)^r
  double exact = 0;        // worst enumerated expansion over |a| = r
  double closed_form = 0;  // 1 - C(l-r,t)/C(l,t)
  bool ok = false;
};

// Procedure: subcube_expansion_bound
inline SubcubeExpansionReport subcube_expansion_bound(const JohnsonGraph& g, int r) {
  if (4 * r > g.l()) throw ParameterError("need r <= l/4");
  SubcubeExpansionReport rep;
  rep.bound = 1.0 - std::pow(1.0 - 4.0 * g.alpha() / 3.0, r);
  rep.closed_form = 1.0 - binomd(g.l() - r, g.t()) / binomd(g.l(), g.t());
  if (r == 0) {
    rep.exact = expansion(g, g.basic_set({}));
  } else {
    for_each_subset(g.n(), r, [&](const std::vector<int>& a) {
      rep.exact = std::max(rep.exact, expansion(g, g.basic_set(a)));
    });
  }
  rep.ok = rep.exact <= rep.bound + 1e-12;
  return rep;
}

// Edge-set comparison of J|_a against J(n-|a|, l-|a|, t) under A -> A \ a relabelled.
inline bool restriction_isomorphic(const JohnsonGraph& g, const std::vector<int>& a) {
  const int r = static_cast<int>(a.size());
  auto S = g.basic_set(a);
  std::vector<int> rest;
  for (int x = 0; x < g.n(); ++x)
    if (!std::binary_search(a.begin(), a.end(), x)) rest.push_back(x);
  auto reduce = [&](int v) {
    std::vector<int> s;
    for (int x : g.set_of(v))
      if (!std::binary_search(a.begin(), a.end(), x))
        s.push_back(static_cast<int>(std::lower_bound(rest.begin(), rest.end(), x) - rest.begin()));
    return s;
  };
  if (g.l() - r < g.t()) return false;
  JohnsonGraph h(g.n() - r, g.l() - r, g.t());
  auto m = g.mask_of(S);
  std::set<std::pair<int, int>> e1, e2;
  for (int u : S)
    for (int v : g.neighbors(u))
      if (m[v] && u < v) {
        int x = h.index_of(reduce(u)), y = h.index_of(reduce(v));
        e1.emplace(std::min(x, y), std::max(x, y));
      }
  for (int u = 0; u < h.vertex_count(); ++u)
    for (int v : h.neighbors(u))
      if (u < v) e2.emplace(u, v);
  return e1 == e2 && static_cast<int>(S.size()) == h.vertex_count();
}

}  // namespace ughc
