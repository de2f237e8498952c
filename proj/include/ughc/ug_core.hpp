#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ughc/common.hpp"

namespace ughc {

struct Edge {
  int u = 0, v = 0;  // u < v
  int b = 0;         // constraint x(u) - x(v) = b (mod q)
  double w = 0.0;
};

struct GraphTag {
  std::string kind = "johnson";
  int n = 0, l = 0, t = 0;
};

struct PlantInfo {
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  double realized_value = 1.0;
  int corrupted = 0;
};

// Plain undirected graph; the only thing ug_core needs from a graph.
struct SimpleGraph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;
  std::optional<GraphTag> tag;
};

using Assignment = std::vector<int>;

struct PlantedSpec {
  double epsilon = 0.0;
  std::uint64_t seed = 0;
};

class UGInstance {
 public:
  UGInstance() = default;

  UGInstance(int n, int q, std::vector<Edge> edges, bool uniform)
      : n_(n), q_(q), edges_(std::move(edges)), uniform_(uniform) {
    if (q_ < 2) throw ParameterError("alphabet size must be >= 2");
    for (auto& e : edges_) {
      if (e.u == e.v) throw ParameterError("self-loop");
      if (e.u > e.v) { std::swap(e.u, e.v); e.b = mod(-e.b, q_); }
      if (e.u < 0 || e.v >= n_) throw ParameterError("edge endpoint out of range");
      e.b = mod(e.b, q_);
    }
    if (uniform_) {
      for (auto& e : edges_) e.w = 1.0 / static_cast<double>(edges_.size());
    } else {
      double s = 0;
      for (auto& e : edges_) {
        if (e.w < 0) throw ParameterError("negative weight");
        s += e.w;
      }
      if (s <= 0) throw ParameterError("zero total weight");
      for (auto& e : edges_) e.w /= s;
    }
    incident_.assign(n_, {});
    for (int i = 0; i < static_cast<int>(edges_.size()); ++i) {
      incident_[edges_[i].u].push_back(i);
      incident_[edges_[i].v].push_back(i);
    }
  }

  int vertex_count() const { return n_; }
  int q() const { return q_; }
  const std::vector<Edge>& edges() const { return edges_; }
  bool uniform() const { return uniform_; }
  const std::vector<int>& incident(int u) const { return incident_[u]; }

  std::optional<GraphTag> graph;
  std::optional<PlantInfo> planted;

  bool satisfied(int ei, const Assignment& x) const {
    const Edge& e = edges_[ei];
    return mod(x[e.u] - x[e.v], q_) == e.b;
  }

  // Label v must take, given u's label, for edge ei to hold.
  int forced(int ei, int from, int label) const {
    const Edge& e = edges_[ei];
    return from == e.u ? mod(label - e.b, q_) : mod(label + e.b, q_);
  }

  int other(int ei, int u) const { return edges_[ei].u == u ? edges_[ei].v : edges_[ei].u; }

  UGInstance with_shifts(const std::vector<int>& b) const {
    UGInstance r = *this;
    for (std::size_t i = 0; i < b.size(); ++i) r.edges_[i].b = mod(b[i], q_);
    return r;
  }

 private:
  int n_ = 0, q_ = 2;
  std::vector<Edge> edges_;
  bool uniform_ = true;
  std::vector<std::vector<int>> incident_;
};

// Procedure: check_assignment
inline void check_assignment(const UGInstance& inst, const Assignment& x) {
  if (static_cast<int>(x.size()) != inst.vertex_count()) throw ParameterError("assignment is not total");
  for (int a : x)
    if (a < 0 || a >= inst.q()) throw ParameterError("label out of range");
}

// Procedure: value
// Uniform instances are counted exactly and divided once.
inline double value(const UGInstance& inst, const Assignment& x) {
  check_assignment(inst, x);
  const auto& E = inst.edges();
  if (inst.uniform()) {
    long c = 0;
    for (int i = 0; i < static_cast<int>(E.size()); ++i) c += inst.satisfied(i, x);
    return static_cast<double>(c) / static_cast<double>(E.size());
  }
  double s = 0;
  for (int i = 0; i < static_cast<int>(E.size()); ++i)
    if (inst.satisfied(i, x)) s += E[i].w;
  return s;
}

// Procedure: vertex_value
// Optional mask restricts to edges with both endpoints inside it (induced subgraph).
inline double vertex_value(const UGInstance& inst, const Assignment& x, int u,
                           const std::vector<char>* mask = nullptr) {
  double num = 0, den = 0;
  for (int ei : inst.incident(u)) {
    int v = inst.other(ei, u);
    if (mask && !((*mask)[v] && (*mask)[u])) continue;
    const double w = inst.uniform() ? 1.0 : inst.edges()[ei].w;
    den += w;
    if (inst.satisfied(ei, x)) num += w;
  }
  return den > 0 ? num / den : 0.0;
}

inline double value_and(const UGInstance& inst, const Assignment& x, const Assignment& y) {
  check_assignment(inst, x);
  check_assignment(inst, y);
  const auto& E = inst.edges();
  double s = 0;
  long c = 0;
  for (int i = 0; i < static_cast<int>(E.size()); ++i)
    if (inst.satisfied(i, x) && inst.satisfied(i, y)) { ++c; s += E[i].w; }
  return inst.uniform() ? static_cast<double>(c) / static_cast<double>(E.size()) : s;
}

inline double vertex_value_and(const UGInstance& inst, const Assignment& x, const Assignment& y, int u,
                               const std::vector<char>* mask = nullptr) {
  double num = 0, den = 0;
  for (int ei : inst.incident(u)) {
    int v = inst.other(ei, u);
    if (mask && !((*mask)[v] && (*mask)[u])) continue;
    const double w = inst.uniform() ? 1.0 : inst.edges()[ei].w;
    den += w;
    if (inst.satisfied(ei, x) && inst.satisfied(ei, y)) num += w;
  }
  return den > 0 ? num / den : 0.0;
}

// Value restricted to edges induced by a vertex mask.
inline double induced_value(const UGInstance& inst, const Assignment& x, const std::vector<char>& mask) {
  double num = 0, den = 0;
  for (int i = 0; i < static_cast<int>(inst.edges().size()); ++i) {
    const auto& e = inst.edges()[i];
    if (!mask[e.u] || !mask[e.v]) continue;
    den += e.w;
    if (inst.satisfied(i, x)) num += e.w;
  }
  return den > 0 ? num / den : 0.0;
}

inline Assignment shift(const Assignment& x, int s, int q) {
  Assignment y(x);
  for (auto& a : y) a = mod(a + s, q);
  return y;
}

struct BruteForceResult {
  Assignment x;
  double value = 0;
  std::uint64_t evaluated = 0;
};

// Procedure: brute_force_opt
// Vertex 0 is pinned to label 0; any optimum can be shifted there.
inline BruteForceResult brute_force_opt(const UGInstance& inst, std::uint64_t budget = (1ull << 24)) {
  const int n = inst.vertex_count(), q = inst.q();
  if (n == 0) return {{}, 1.0, 0};
  double states = std::pow(static_cast<double>(q), n - 1);
  if (states > static_cast<double>(budget)) throw BudgetExceeded("brute force enumeration exceeds budget");
  const auto& E = inst.edges();
  Assignment x(n, 0);
  std::vector<double> w(E.size());
  for (std::size_t i = 0; i < E.size(); ++i) w[i] = inst.uniform() ? 1.0 : E[i].w;
  double cur = 0;
  for (int i = 0; i < static_cast<int>(E.size()); ++i)
    if (inst.satisfied(i, x)) cur += w[i];
  BruteForceResult best{x, cur, 1};
  auto touch = [&](int u, int label) {
    for (int ei : inst.incident(u)) if (inst.satisfied(ei, x)) cur -= w[ei];
    x[u] = label;
    for (int ei : inst.incident(u)) if (inst.satisfied(ei, x)) cur += w[ei];
  };
  while (true) {
    int i = n - 1;
    while (i >= 1 && x[i] == q - 1) { touch(i, 0); --i; }
    if (i < 1) break;
    touch(i, x[i] + 1);
    ++best.evaluated;
    if (cur > best.value + 1e-12) { best.value = cur; best.x = x; }
  }
  if (inst.uniform()) {
    long c = std::lround(best.value);
    best.value = static_cast<double>(c) / static_cast<double>(E.size());
  }
  return best;
}

// Procedure: plant
// Exactly round(eps*|E|) edges get a fresh uniform shift.
inline std::pair<UGInstance, Assignment> plant(const SimpleGraph& g, int q, const PlantedSpec& spec) {
  if (!(spec.epsilon >= 0.0 && spec.epsilon <= 1.0)) throw ParameterError("epsilon must lie in [0,1]");
  Rng rng(spec.seed);
  Assignment A(g.n);
  for (auto& a : A) a = static_cast<int>(uniform_below(rng, q));
  std::vector<Edge> E;
  E.reserve(g.edges.size());
  for (auto [u, v] : g.edges) {
    if (u > v) std::swap(u, v);
    E.push_back({u, v, mod(A[u] - A[v], q), 0.0});
  }
  std::vector<int> order(E.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle_det(order, rng);
  const int k = static_cast<int>(std::lround(spec.epsilon * static_cast<double>(E.size())));
  for (int i = 0; i < k; ++i) E[order[i]].b = static_cast<int>(uniform_below(rng, q));
  UGInstance inst(g.n, q, std::move(E), true);
  inst.graph = g.tag;
  inst.planted = PlantInfo{spec.epsilon, spec.seed, value(inst, A), k};
  return {std::move(inst), std::move(A)};
}

// Procedure: randomize_edges
inline UGInstance randomize_edges(const UGInstance& inst, const std::vector<int>& S, std::uint64_t seed) {
  std::vector<char> in(inst.vertex_count(), 0);
  for (int u : S) in[u] = 1;
  Rng rng(seed);
  std::vector<int> b(inst.edges().size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto& e = inst.edges()[i];
    b[i] = (in[e.u] || in[e.v]) ? static_cast<int>(uniform_below(rng, inst.q())) : e.b;
  }
  return inst.with_shifts(b);
}

// ---- serialization ----

inline nlohmann::json to_json(const UGInstance& inst) {
  nlohmann::json j;
  j["n_vertices"] = inst.vertex_count();
  j["q"] = inst.q();
  auto edges = nlohmann::json::array();
  for (const auto& e : inst.edges()) edges.push_back({e.u, e.v, e.b, e.w});
  j["edges"] = edges;
  nlohmann::json meta = nlohmann::json::object();
  if (inst.graph) meta["graph"] = {{"kind", inst.graph->kind}, {"n", inst.graph->n}, {"l", inst.graph->l}, {"t", inst.graph->t}};
  if (inst.planted)
    meta["planted"] = {{"epsilon", inst.planted->epsilon}, {"seed", inst.planted->seed},
                       {"realized_value", inst.planted->realized_value}, {"corrupted", inst.planted->corrupted}};
  j["metadata"] = meta;
  return j;
}

inline UGInstance instance_from_json(const nlohmann::json& j) {
  std::vector<Edge> E;
  bool uniform = true;
  double w0 = -1;
  for (const auto& r : j.at("edges")) {
    Edge e{r.at(0).get<int>(), r.at(1).get<int>(), r.at(2).get<int>(), r.size() > 3 ? r.at(3).get<double>() : 1.0};
    if (w0 < 0) w0 = e.w;
    if (std::abs(e.w - w0) > 1e-15) uniform = false;
    E.push_back(e);
  }
  UGInstance inst(j.at("n_vertices").get<int>(), j.at("q").get<int>(), std::move(E), uniform);
  if (j.contains("metadata")) {
    const auto& m = j["metadata"];
    if (m.contains("graph")) {
      const auto& g = m["graph"];
      inst.graph = GraphTag{g.value("kind", std::string("johnson")), g.at("n").get<int>(), g.at("l").get<int>(), g.at("t").get<int>()};
    }
    if (m.contains("planted")) {
      const auto& p = m["planted"];
      inst.planted = PlantInfo{p.value("epsilon", 0.0), p.value("seed", std::uint64_t{0}),
                               p.value("realized_value", 1.0), p.value("corrupted", 0)};
    }
  }
  return inst;
}

}  // namespace ughc
