#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ughc/common.hpp"
#include "ughc/johnson.hpp"
#include "ughc/pe.hpp"
#include "ughc/potentials.hpp"
#include "ughc/sos.hpp"
#include "ughc/ug_core.hpp"

namespace ughc {

struct NoDenseSubcube : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Restriction to a vertex subset.

// Procedure: induced_instance
// Edges with both endpoints in verts, relabelled to positions in verts.
inline UGInstance induced_instance(const UGInstance& inst, const std::vector<int>& verts) {
  std::vector<int> pos(inst.vertex_count(), -1);
  for (std::size_t i = 0; i < verts.size(); ++i) pos[verts[i]] = static_cast<int>(i);
  std::vector<Edge> E;
  for (const auto& e : inst.edges())
    if (pos[e.u] >= 0 && pos[e.v] >= 0) E.push_back({pos[e.u], pos[e.v], e.b, e.w});
  if (E.empty()) throw ParameterError("induced instance has no edges");
  return UGInstance(static_cast<int>(verts.size()), inst.q(), std::move(E), inst.uniform());
}

class RelabelBackend : public PEBackend {
 public:
  RelabelBackend(PseudoExpectation base, VarSpace sub, std::vector<int> verts)
      : base_(std::move(base)), sub_(sub), verts_(std::move(verts)) {}
  double moment(const Mono& m) const override {
    const auto& vs = base_.vars();
    Mono t;
    for (auto v : m) t.push(vs.id(sub_.copy(v), verts_[sub_.vertex(v)], sub_.label(v)));
    if (!canonical(t, vs)) return 0.0;
    return base_[t];
  }
  std::string kind() const override { return "restricted(" + base_.kind() + ")"; }

 private:
  PseudoExpectation base_;
  VarSpace sub_;
  std::vector<int> verts_;
};

// Procedure: restrict_pe
inline PseudoExpectation restrict_pe(const PseudoExpectation& pe, const std::vector<int>& verts) {
  VarSpace sub{static_cast<int>(verts.size()), pe.vars().q};
  if (const auto* d = pe.distribution()) {
    std::vector<WeightedPoint> pts;
    for (const auto& p : d->points()) {
      WeightedPoint r;
      r.w = p.w;
      for (int u : verts) r.x.push_back(p.x[u]);
      if (!p.xp.empty())
        for (int u : verts) r.xp.push_back(p.xp[u]);
      pts.push_back(std::move(r));
    }
    return from_distribution(sub, std::move(pts));
  }
  return PseudoExpectation(sub, pe.mode(), pe.degrees(), std::make_shared<RelabelBackend>(pe, sub, verts));
}

// ---------------------------------------------------------------------------
// Condition&Round.

struct RoundOptions {
  double floor = 1e-6;  // anchors with pE[X_u = 0] below this are skipped
};

struct RoundResult {
  Assignment x;
  double value = 0;
  int anchor = -1;
  double best_expected = 0;  // expected value of the randomized rounding at the best anchor
  double mean_expected = 0;  // averaged over evaluated anchors
  int anchors_used = 0, anchors_skipped = 0;
  bool derandomization_ok = true;  // every anchor's output >= its own expectation
};

// Procedure: condition_and_round
// For each anchor u: conditional marginals pE[X_v = b | X_u = 0] from degree-2
// moments, then labels fixed vertex by vertex by conditional expectations.
inline RoundResult condition_and_round(const UGInstance& inst, const PseudoExpectation& pe, RoundOptions opt = {}) {
  if (pe.mode() != PEMode::Single) throw ParameterError("condition_and_round needs a single-copy pseudoexpectation");
  const int n = inst.vertex_count(), q = inst.q();
  if (pe.vars().n != n || pe.vars().q != q) throw ParameterError("pseudoexpectation does not match the instance");
  RoundResult best;
  best.value = -1;
  double sum_expected = 0;
  std::vector<std::vector<double>> m(n, std::vector<double>(q));
  for (int u = 0; u < n; ++u) {
    const double pu = pe.x(u, 0);
    if (pu < opt.floor) { ++best.anchors_skipped; continue; }
    for (int v = 0; v < n; ++v) {
      double tot = 0;
      for (int b = 0; b < q; ++b) {
        m[v][b] = v == u ? (b == 0 ? 1.0 : 0.0) : std::max(0.0, pe.xx(u, 0, v, b)) / pu;
        tot += m[v][b];
      }
      for (int b = 0; b < q; ++b) m[v][b] = tot > 0 ? m[v][b] / tot : 1.0 / q;
    }
    double expected = 0;
    for (const auto& e : inst.edges())
      for (int a = 0; a < q; ++a) expected += e.w * m[e.u][a] * m[e.v][mod(a - e.b, q)];

    Assignment x(n, -1);
    x[u] = 0;
    for (int v = 0; v < n; ++v) {
      if (v == u) continue;
      int arg = 0;
      double top = -1;
      for (int b = 0; b < q; ++b) {
        double g = 0;
        for (int ei : inst.incident(v)) {
          const int w = inst.other(ei, v);
          const int need = inst.forced(ei, v, b);
          g += inst.edges()[ei].w * (x[w] >= 0 ? (x[w] == need ? 1.0 : 0.0) : m[w][need]);
        }
        if (g > top + 1e-15) { top = g; arg = b; }
      }
      x[v] = arg;
    }
    const double val = value(inst, x);
    if (val < expected - 1e-9) best.derandomization_ok = false;
    sum_expected += expected;
    ++best.anchors_used;
    if (val > best.value + 1e-12) {
      best.value = val;
      best.x = std::move(x);
      best.anchor = u;
      best.best_expected = expected;
    }
  }
  if (best.anchors_used == 0) throw NearZeroEvent("every anchor has pseudo-probability below the floor");
  best.mean_expected = sum_expected / best.anchors_used;
  return best;
}

// ---------------------------------------------------------------------------
// Global-correlation reduction.

struct RtOptions {
  double tau = 0.01;
  int t_max = 8;
  std::size_t mi_pairs = 0;  // 0: all pairs of S
  std::uint64_t seed = 0;
};

struct RtTuple {
  int u = 0, a = 0, b = 0;  // X_u = a in the first copy, X'_u = b in the second
  double mi_after = 0, event_after = 0;
};

struct RtResult {
  PseudoExpectation mu1, mu2;
  std::vector<RtTuple> tuples;
  double mi_initial = 0, mi_final = 0;
  double p_initial = 0, p_final = 0;
  bool item_event = true;   // pE[E] >= p/2 after conditioning
  bool item_mi = true;      // average MI <= tau
  bool item_budget = true;  // at most t_max tuples
  bool budget_exhausted = false;
  std::string stop;
};

namespace detail {

inline double avg_mi(const PseudoExpectation& a, const PseudoExpectation& b, const std::vector<int>& S,
                     const RtOptions& opt) {
  return 0.5 * (mi_stats(a, S, 0, opt.mi_pairs, opt.seed).average + mi_stats(b, S, 0, opt.mi_pairs, opt.seed).average);
}

inline EventPoly label_event(const VarSpace& vs, int u, int a) {
  return EventPoly::from(x_var(vs, 0, u, a), "X_" + std::to_string(u) + "=" + std::to_string(a));
}

}  // namespace detail

// Procedure: rt_reduce
// Greedy: candidates (u, a, b) in seeded order; the first one that lowers the
// average MI over S and keeps pE[E] >= p/2 is taken.
inline RtResult rt_reduce(const PseudoExpectation& mu1, const PseudoExpectation& mu2, const std::vector<int>& S,
                          const EventPoly& E, RtOptions opt = {}) {
  if (mu1.mode() != PEMode::Single || mu2.mode() != PEMode::Single) throw ParameterError("rt_reduce needs single copies");
  const auto& vs = mu1.vars();
  RtResult R{mu1, mu2, {}, 0, 0, 0, 0};
  R.p_initial = product(mu1, mu2).expect(E);
  if (R.p_initial < 1e-12) throw NearZeroEvent("event has zero pseudo-probability");
  R.mi_initial = detail::avg_mi(mu1, mu2, S, opt);
  double mi = R.mi_initial, p = R.p_initial;
  R.stop = "tau reached";
  while (mi > opt.tau) {
    if (static_cast<int>(R.tuples.size()) >= opt.t_max) {
      R.budget_exhausted = true;
      R.stop = "tuple budget exhausted";
      break;
    }
    std::vector<RtTuple> cand;
    for (int u : S)
      for (int a = 0; a < vs.q; ++a)
        for (int b = 0; b < vs.q; ++b) cand.push_back({u, a, b});
    Rng rng(opt.seed + 0x9e3779b97f4a7c15ull * (R.tuples.size() + 1));
    shuffle_det(cand, rng);
    bool accepted = false, exhausted = false;
    for (auto& c : cand) {
      try {
        auto c1 = condition(R.mu1, detail::label_event(vs, c.u, c.a));
        auto c2 = condition(R.mu2, detail::label_event(vs, c.u, c.b));
        const double p2 = product(c1, c2).expect(E);
        if (p2 < R.p_initial / 2) continue;
        const double mi2 = detail::avg_mi(c1, c2, S, opt);
        if (mi2 >= mi - 1e-12) continue;
        c.mi_after = mi2;
        c.event_after = p2;
        R.tuples.push_back(c);
        R.mu1 = std::move(c1);
        R.mu2 = std::move(c2);
        mi = mi2;
        p = p2;
        accepted = true;
        break;
      } catch (const NearZeroEvent&) {
        continue;
      } catch (const DegreeExhausted&) {
        exhausted = true;
        break;
      }
    }
    if (exhausted) { R.stop = "degree exhausted"; R.budget_exhausted = true; break; }
    if (!accepted) { R.stop = "no improving tuple"; R.budget_exhausted = true; break; }
  }
  R.mi_final = mi;
  R.p_final = p;
  R.item_event = R.p_final >= R.p_initial / 2 - 1e-12;
  R.item_mi = R.mi_final <= opt.tau;
  R.item_budget = static_cast<int>(R.tuples.size()) <= opt.t_max;
  return R;
}

// ---------------------------------------------------------------------------
// Parameters.

enum class Regime { CloseToOne, LowCompleteness };

struct RoundingConfig {
  Regime regime = Regime::CloseToOne;
  double epsilon = 0.0;     // close-to-1: the instance is (1 - epsilon)-satisfiable
  double c = 0.0;           // low completeness; <= 0 uses the relaxation value
  int degree = 4;
  int r = -1;               // < 0: computed from the regime
  int min_restriction = 0;  // smallest |a| searched
  double beta = -1, nu = -1, tau = -1;  // < 0: defaults
  double tv_delta = 0.1;
  double gamma = 2.0;       // stop once gamma/2 of the vertices are assigned
  int t_max = 8;
  std::size_t mi_pairs = 0;
  std::size_t tv_pairs = 0;
  double tv_constant = 16.0;
  double round_constant = 2.0;
  bool lift_always = true;  // lift even when the lift is not certified optimal
  int max_iterations = 0;   // 0: |V|
  std::uint64_t seed = 1;
  RelaxOptions relax;
  SdpOptions sdp;
};

struct ResolvedParams {
  Regime regime = Regime::CloseToOne;
  int n = 0, l = 0, q = 2;
  double alpha = 0.5;
  int r = 0;        // main-loop r
  int r_sub = 0;    // largest |a| searched
  int r_min = 0;
  double beta = 0.5, nu = 0.1, tau = 0.01, theta = 0.8;
  double epsilon = 0, c = 1;
  std::vector<double> eps;  // low-completeness density schedule
};

// Procedure: resolve_params
inline ResolvedParams resolve_params(const RoundingConfig& cfg, const JohnsonGraph& g, int q, double objective) {
  ResolvedParams P;
  P.regime = cfg.regime;
  P.n = g.n();
  P.l = g.l();
  P.q = q;
  P.alpha = g.alpha();
  P.epsilon = cfg.epsilon;
  const int cap = std::max(0, (g.l() + 3) / 4 - 1);  // r < l/4
  if (cfg.regime == Regime::CloseToOne) {
    if (cfg.epsilon < 0 || cfg.epsilon > 1) throw ParameterError("epsilon must lie in [0, 1]");
    P.r = std::min(static_cast<int>(std::floor(64 * std::sqrt(cfg.epsilon) / P.alpha)), cap);
    P.r_sub = std::min(static_cast<int>(std::floor(32 * std::sqrt(cfg.epsilon) / P.alpha)), cap);
    P.c = 1 - cfg.epsilon;
  } else {
    P.c = cfg.c > 0 ? cfg.c : objective;
    if (!(P.c > 0 && P.c <= 1 + 1e-9)) throw ParameterError("completeness must lie in (0, 1]");
    P.c = std::min(P.c, 1.0);
    const int rr = P.c >= 1 - 1e-9 ? 0 : static_cast<int>(std::ceil(std::log(P.c) / std::log(1 - P.alpha)));
    P.r = P.r_sub = std::clamp(rr, 0, g.l() - 1);
  }
  if (cfg.r >= 0) P.r = P.r_sub = cfg.r;
  P.r_min = cfg.min_restriction;
  P.r_sub = std::max(P.r_sub, P.r_min);
  if (P.r_sub > g.l() - 1) throw ParameterError("restriction size must be <= l-1");
  P.beta = cfg.beta > 0 ? cfg.beta : std::clamp(std::sqrt(cfg.epsilon), 0.5, 0.8);
  P.nu = cfg.nu > 0 ? cfg.nu : std::clamp(cfg.epsilon * std::exp(-P.r), 0.1, 0.15);
  if (!(P.nu < P.beta && P.beta + P.nu < 1)) throw ParameterError("need nu < beta and beta + nu < 1");
  P.theta = std::clamp(std::exp(-static_cast<double>(P.r_sub)), 2 * P.nu, 1 - 2 * P.nu);
  const double tau_block = cfg.epsilon / (q * q * std::pow(g.l(), 2 * P.r) * std::exp(P.r));
  P.tau = cfg.tau > 0 ? cfg.tau : std::max(0.01, tau_block);
  if (P.regime == Regime::LowCompleteness) P.eps = edge_cover_schedule(P.r_sub, P.c);
  return P;
}

// ---------------------------------------------------------------------------
// Event and subcube search.

struct EventChoice {
  std::vector<int> a;
  int s = 0;
  std::vector<int> vertices;
  double score = 0;
  double pe_event = 0;
  double floor = 0;
  bool surrogate = false;  // plain shift density in place of the weighted event
  bool above_floor = true;
  std::size_t candidates = 0, valid = 0;
  std::string description;
  EventPoly event;
};

namespace detail {

struct EventContext {
  Regime regime = Regime::CloseToOne;
  int s = 0, q = 2;
  std::vector<int> a, verts;
  std::vector<char> mask;
  std::shared_ptr<const UGInstance> inst;
  std::shared_ptr<const StepPoly> weight, step;
  double theta = 0;
  // low completeness: vertex sets of every subset b of a (bit mask over a), schedule, offset
  std::vector<std::vector<int>> sub_sets;
  std::vector<double> eps;
  double offset = 0;

  double shift_density(const Assignment& x, const Assignment& xp) const {
    double d = 0;
    for (int u : verts) {
      if (mod(x[u] - xp[u], q) != s) continue;
      d += (*weight)(vertex_value(*inst, x, u, &mask)) * (*weight)(vertex_value(*inst, xp, u, &mask));
    }
    return d / static_cast<double>(verts.size());
  }
  bool fires(const Assignment& x, const Assignment& xp) const {
    const int k = static_cast<int>(a.size());
    const int full = (1 << k) - 1;
    for (int b = 0; b <= full; ++b) {
      const auto& S = sub_sets[b];
      double d = 0;
      for (int u : S) d += mod(x[u] - xp[u], q) == s ? 1.0 : 0.0;
      d /= static_cast<double>(S.size());
      const double e = eps[__builtin_popcount(b)];
      if (b == full ? d < e : d >= e) return false;
    }
    return true;
  }
  double event(const Assignment& x, const Assignment& xp) const {
    if (regime == Regime::CloseToOne) return std::clamp((*step)(shift_density(x, xp)), 0.0, 1.0);
    return fires(x, xp) ? 1.0 : 0.0;
  }
  double score(const Assignment& x, const Assignment& xp) const {
    if (regime == Regime::CloseToOne) {
      const double d = shift_density(x, xp);
      return std::clamp((*step)(d), 0.0, 1.0) * (d - theta);
    }
    if (!fires(x, xp)) return 0.0;
    double t = 0;
    for (int u : verts)
      if (mod(x[u] - xp[u], q) == s) t += vertex_value_and(*inst, x, xp, u, &mask);
    return t / static_cast<double>(verts.size()) - offset;
  }
};

inline std::shared_ptr<EventContext> event_context(const UGInstance& inst, const JohnsonGraph& g,
                                                   const ResolvedParams& P, const std::vector<int>& a, int s) {
  auto c = std::make_shared<EventContext>();
  c->regime = P.regime;
  c->s = s;
  c->q = inst.q();
  c->a = a;
  c->verts = g.basic_set(a);
  c->mask = g.mask_of(c->verts);
  c->inst = std::make_shared<const UGInstance>(inst);
  if (P.regime == Regime::CloseToOne) {
    c->weight = step_poly(P.beta, P.nu);
    c->step = step_poly(P.theta, P.nu);
    c->theta = P.theta;
  } else {
    const int k = static_cast<int>(a.size());
    for (int b = 0; b < (1 << k); ++b) {
      std::vector<int> sub;
      for (int i = 0; i < k; ++i)
        if (b >> i & 1) sub.push_back(a[i]);
      c->sub_sets.push_back(g.basic_set(sub));
    }
    c->eps = P.eps;
    c->theta = P.eps[k];
    const double e = P.eps[k];
    c->offset = P.c * P.c * e * e / (20.0 * std::max(P.r_sub, 1));
  }
  return c;
}

inline double regime_floor(const ResolvedParams& P, int k) {
  if (P.regime == Regime::CloseToOne)
    return std::sqrt(P.epsilon) / (P.q * std::pow(P.l, k) * std::exp(P.r_sub));
  return P.c * P.c / (4.0 * std::max(P.r_sub, 1) * std::pow(P.l, k) * P.q);
}

inline Poly density_poly(const VarSpace& vs, const std::vector<int>& verts, int s) {
  Poly p;
  for (int u : verts) p += z_poly(vs, u, s);
  p *= 1.0 / static_cast<double>(verts.size());
  return p;
}

}  // namespace detail

// Procedure: find_event_subcube
// Scores every restriction min_restriction <= |a| <= r_sub and shift s; with a
// given restriction only s is searched and the floor is reported, not enforced.
inline EventChoice find_event_subcube(const UGInstance& inst, const JohnsonGraph& g, const PseudoExpectation& prod,
                                      const ResolvedParams& P, const std::vector<int>* fixed_a = nullptr) {
  if (prod.mode() != PEMode::Product) throw ParameterError("find_event_subcube needs a product pseudoexpectation");
  const int q = inst.q();
  const auto* dist = prod.distribution();
  std::vector<std::vector<int>> restrictions;
  if (fixed_a) {
    auto a = *fixed_a;
    std::sort(a.begin(), a.end());
    restrictions.push_back(a);
  } else {
    for (int k = P.r_min; k <= P.r_sub; ++k)
      for_each_subset(g.n(), k, [&](const std::vector<int>& a) { restrictions.push_back(a); });
  }
  EventChoice best;
  bool have = false;
  double best_score = -std::numeric_limits<double>::infinity();
  EventChoice fallback;
  double fallback_score = -std::numeric_limits<double>::infinity();
  for (const auto& a : restrictions) {
    const double floor = detail::regime_floor(P, static_cast<int>(a.size()));
    for (int s = 0; s < q; ++s) {
      EventChoice c;
      c.a = a;
      c.s = s;
      c.floor = floor;
      double pe_event = 0, score = 0;
      if (dist) {
        auto ctx = detail::event_context(inst, g, P, a, s);
        c.vertices = ctx->verts;
        for (const auto& pt : dist->points()) {
          pe_event += pt.w * ctx->event(pt.x, pt.xp);
          score += pt.w * ctx->score(pt.x, pt.xp);
        }
      } else {
        c.surrogate = true;
        c.vertices = g.basic_set(a);
        const double thr = P.regime == Regime::CloseToOne ? P.theta : P.eps[a.size()];
        const Poly d = detail::density_poly(prod.vars(), c.vertices, s);
        pe_event = prod(d);
        score = prod(mul(d, d, prod.vars())) - thr * pe_event;
      }
      c.pe_event = pe_event;
      c.score = score;
      ++best.candidates;
      const bool valid = pe_event >= std::max(1e-9, c.surrogate || P.regime == Regime::CloseToOne ? floor : 0.0) &&
                         (c.surrogate || P.regime == Regime::CloseToOne || score >= floor);
      if (valid) ++best.valid;
      if (valid && score > best_score + 1e-12) {
        const auto cnt = best.candidates, val = best.valid;
        best = c;
        best.candidates = cnt;
        best.valid = val;
        best_score = score;
        have = true;
      }
      if (score > fallback_score + 1e-12) { fallback = c; fallback_score = score; }
    }
  }
  if (!have) {
    if (!fixed_a) throw NoDenseSubcube("no restriction and shift clear the floor");
    const auto cnt = best.candidates;
    best = fallback;
    best.candidates = cnt;
    best.valid = 0;
    best.above_floor = false;
  }
  std::ostringstream desc;
  desc << (best.surrogate ? "shift-density" : P.regime == Regime::CloseToOne ? "step(weighted-shift-density)"
                                                                             : "first-dense-indicator")
       << " s=" << best.s << " a={";
  for (std::size_t i = 0; i < best.a.size(); ++i) desc << (i ? "," : "") << best.a[i];
  desc << "}";
  best.description = desc.str();
  if (dist) {
    auto ctx = detail::event_context(inst, g, P, best.a, best.s);
    best.event.has_poly = false;
    best.event.provenance = best.description;
    best.event.exact = [ctx](const Assignment& x, const Assignment* xp) { return ctx->event(x, *xp); };
  } else {
    best.event = EventPoly::from(detail::density_poly(prod.vars(), best.vertices, best.s), best.description);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Conditioning and correlation.

struct TvReport {
  bool evaluable = true;
  bool with_p = false;  // p coordinates included in Y
  std::size_t pairs = 0;
  double fraction = 0;  // fraction of pairs with TV >= delta
  double max_tv = 0;
  double tau_bar = 0, p_bar = 0, bound = 0, constant = 16;
  bool ok = true;
  std::string note;
  std::vector<std::pair<std::pair<int, int>, double>> per_pair;
};

struct TvOptions {
  double delta = 0.1;
  double constant = 16.0;
  std::size_t max_pairs = 0;
  std::uint64_t seed = 0;
  const StepPoly* p = nullptr;
};

namespace detail {

inline std::vector<LocalVar> pair_vars(int u, int v, bool with_p, bool both_copies) {
  std::vector<LocalVar> out;
  for (int c = 0; c < (both_copies ? 2 : 1); ++c) {
    out.push_back({c, u, false});
    out.push_back({c, v, false});
    if (with_p) {
      out.push_back({c, u, true});
      out.push_back({c, v, true});
    }
  }
  return out;
}

inline std::vector<std::pair<int, int>> sample_pairs(int n, std::size_t max_pairs, std::uint64_t seed) {
  std::vector<std::pair<int, int>> all;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) all.push_back({i, j});
  if (max_pairs && all.size() > max_pairs) {
    Rng rng(seed);
    shuffle_det(all, rng);
    all.resize(max_pairs);
    std::sort(all.begin(), all.end());
  }
  return all;
}

}  // namespace detail

// Procedure: tv_conditioning_check
// inst and prod live on the vertex set S (restrict first). Y_{u,v} = (X_u, X_v)
// plus the p coordinates when a step polynomial is given and prod is a distribution.
inline TvReport tv_conditioning_check(const UGInstance& inst, const PseudoExpectation& prod, const EventPoly& E,
                                      TvOptions opt = {}) {
  TvReport rep;
  rep.constant = opt.constant;
  const int n = inst.vertex_count();
  rep.with_p = opt.p && prod.is_distribution();
  const StepPoly* p = rep.with_p ? opt.p : nullptr;
  PseudoExpectation after;
  try {
    rep.p_bar = prod.expect(E);
    after = condition(prod, E);
  } catch (const std::exception& ex) {
    rep.evaluable = false;
    rep.note = ex.what();
    return rep;
  }
  const auto pairs = detail::sample_pairs(n, opt.max_pairs, opt.seed);
  double mi_sum = 0;
  for (auto [u, v] : pairs) {
    try {
      auto before_j = extract_local(inst, prod, p, {detail::pair_vars(u, v, rep.with_p, true)}).joints[0].joint;
      auto after_j = extract_local(inst, after, p, {detail::pair_vars(u, v, rep.with_p, true)}).joints[0].joint;
      const double t = tv(before_j.p, after_j.p);
      rep.per_pair.push_back({{u, v}, t});
      rep.max_tv = std::max(rep.max_tv, t);
      if (t >= opt.delta) rep.fraction += 1;
      // I(Y_u; Y_v) in each copy, Y_u = (X_u[, p_u])
      const int w = rep.with_p ? 4 : 2;
      for (int c = 0; c < 2; ++c) {
        std::vector<int> A{c * w}, B{c * w + 1};
        if (rep.with_p) { A.push_back(c * w + 2); B.push_back(c * w + 3); }
        mi_sum += 0.5 * std::max(0.0, mutual_information(before_j, A, B));
      }
    } catch (const std::exception& ex) {
      rep.evaluable = false;
      rep.note = ex.what();
      return rep;
    }
  }
  rep.pairs = pairs.size();
  if (rep.pairs) {
    rep.fraction /= static_cast<double>(rep.pairs);
    rep.tau_bar = mi_sum / static_cast<double>(rep.pairs);
  }
  rep.bound = opt.constant * (std::sqrt(rep.tau_bar) + 1.0 / n) / (rep.p_bar * opt.delta * opt.delta);
  rep.ok = rep.fraction <= rep.bound + 1e-12;
  return rep;
}

// ---------------------------------------------------------------------------
// SubRound.

struct SubroundResult {
  bool no_dense = false;
  EventChoice event;
  std::vector<int> vertices;  // V(J|_a) in the input graph
  Assignment x;               // labels for vertices, by position
  double value_sub = 0;       // value of x on the induced instance
  int rounded_copy = 0;
  RoundResult round1, round2;
  // reduction
  std::size_t tuples = 0;
  double mi_initial = 0, mi_final = 0, p_initial = 0, p_final = 0;
  bool rt_items = true;
  std::string rt_stop;
  // conditioning on the event
  bool conditioned = false;
  std::string condition_note;
  TvReport tv;
  // potentials and lemma checks
  bool lemmas_evaluable = false;
  std::string lemma_note;
  double phi_before = std::nan(""), phi_after = std::nan("");
  double psi1 = std::nan(""), psi2 = std::nan("");
  double relating_rhs = std::nan(""), relating_slack = std::nan("");
  double round_bound = std::nan(""), round_slack = std::nan("");
  bool relating_ok = false, round_ok = false;
};

// Procedure: subround
inline SubroundResult subround(const UGInstance& inst, const JohnsonGraph& g, const PseudoExpectation& pe,
                               const ResolvedParams& P, const RoundingConfig& cfg,
                               const std::vector<int>* a = nullptr) {
  SubroundResult R;
  const auto prod = product(pe, pe);
  try {
    R.event = find_event_subcube(inst, g, prod, P, a);
  } catch (const NoDenseSubcube&) {
    R.no_dense = true;
    R.vertices.resize(inst.vertex_count());
    std::iota(R.vertices.begin(), R.vertices.end(), 0);
    R.x.assign(inst.vertex_count(), 0);
    R.value_sub = value(inst, R.x);
    return R;
  }
  R.vertices = R.event.vertices;
  const auto sub = induced_instance(inst, R.vertices);

  RtOptions ro;
  ro.tau = P.tau;
  ro.t_max = cfg.t_max;
  ro.mi_pairs = cfg.mi_pairs;
  ro.seed = cfg.seed;
  auto rt = rt_reduce(pe, pe, R.vertices, R.event.event, ro);
  R.tuples = rt.tuples.size();
  R.mi_initial = rt.mi_initial;
  R.mi_final = rt.mi_final;
  R.p_initial = rt.p_initial;
  R.p_final = rt.p_final;
  R.rt_items = rt.item_event && rt.item_budget;
  R.rt_stop = rt.stop;

  const auto prod2 = product(rt.mu1, rt.mu2);
  PseudoExpectation cond = prod2;
  try {
    cond = condition(prod2, R.event.event);
    R.conditioned = true;
  } catch (const std::exception& ex) {
    R.condition_note = ex.what();
  }

  const auto prod2_sub = restrict_pe(prod2, R.vertices);
  const auto cond_sub = restrict_pe(cond, R.vertices);
  const auto wstep = step_poly(P.beta, P.nu);
  {
    // the event in sub-instance coordinates, only needed for the TV check
    EventPoly Es;
    if (prod2.is_distribution()) {
      const auto ctx = detail::event_context(inst, g, P, R.event.a, R.event.s);
      const auto verts = R.vertices;
      const int n = inst.vertex_count();
      Es.has_poly = false;
      Es.exact = [ctx, verts, n](const Assignment& x, const Assignment* xp) {
        Assignment X(n, 0), Xp(n, 0);
        for (std::size_t i = 0; i < verts.size(); ++i) { X[verts[i]] = x[i]; Xp[verts[i]] = (*xp)[i]; }
        // coordinates outside V(J|_a) only enter the low-completeness indicator
        return ctx->event(X, Xp);
      };
      if (P.regime == Regime::LowCompleteness && !R.event.a.empty()) {
        R.tv.evaluable = false;
        R.tv.note = "event depends on vertices outside the restriction";
      }
    } else {
      Es = EventPoly::from(detail::density_poly(prod2_sub.vars(), [&] {
        std::vector<int> all(R.vertices.size());
        std::iota(all.begin(), all.end(), 0);
        return all;
      }(), R.event.s), R.event.description);
    }
    if (!(P.regime == Regime::LowCompleteness && !R.event.a.empty() && prod2.is_distribution())) {
      TvOptions to;
      to.delta = cfg.tv_delta;
      to.constant = cfg.tv_constant;
      to.max_pairs = cfg.tv_pairs;
      to.seed = cfg.seed;
      to.p = wstep.get();
      R.tv = tv_conditioning_check(sub, prod2_sub, Es, to);
    }
  }
  if (!R.tv.evaluable && P.regime == Regime::LowCompleteness && prod2.is_distribution() && R.conditioned) {
    // Measure directly: before = prod2, after = cond, both restricted.
    R.tv = TvReport{};
    R.tv.with_p = true;
    R.tv.constant = cfg.tv_constant;
    R.tv.p_bar = prod2.expect(R.event.event);
    const auto pairs = detail::sample_pairs(sub.vertex_count(), cfg.tv_pairs, cfg.seed);
    double mi_sum = 0;
    for (auto [u, v] : pairs) {
      auto bj = extract_local(sub, prod2_sub, wstep.get(), {detail::pair_vars(u, v, true, true)}).joints[0].joint;
      auto aj = extract_local(sub, cond_sub, wstep.get(), {detail::pair_vars(u, v, true, true)}).joints[0].joint;
      const double t = tv(bj.p, aj.p);
      R.tv.per_pair.push_back({{u, v}, t});
      R.tv.max_tv = std::max(R.tv.max_tv, t);
      if (t >= cfg.tv_delta) R.tv.fraction += 1;
      for (int c = 0; c < 2; ++c) mi_sum += 0.5 * std::max(0.0, mutual_information(bj, {4 * c, 4 * c + 2}, {4 * c + 1, 4 * c + 3}));
    }
    R.tv.pairs = pairs.size();
    if (R.tv.pairs) {
      R.tv.fraction /= static_cast<double>(R.tv.pairs);
      R.tv.tau_bar = mi_sum / static_cast<double>(R.tv.pairs);
    }
    R.tv.bound = cfg.tv_constant * (std::sqrt(R.tv.tau_bar) + 1.0 / sub.vertex_count()) /
                 (R.tv.p_bar * cfg.tv_delta * cfg.tv_delta);
    R.tv.ok = R.tv.fraction <= R.tv.bound + 1e-12;
  }

  // round each conditioned copy on the restriction
  const auto m1 = restrict_pe(cond.mode() == PEMode::Product ? marginal(cond, 0) : rt.mu1, R.vertices);
  const auto m2 = restrict_pe(cond.mode() == PEMode::Product ? marginal(cond, 1) : rt.mu2, R.vertices);
  R.round1 = condition_and_round(sub, shift_symmetrize(m1));
  R.round2 = condition_and_round(sub, shift_symmetrize(m2));
  R.rounded_copy = R.round2.value > R.round1.value + 1e-12 ? 1 : 0;
  const auto& win = R.rounded_copy ? R.round2 : R.round1;
  R.x = win.x;
  R.value_sub = win.value;

  // lemma checks with measured quantities
  try {
    ShiftSpec spec{P.beta, P.nu, ShiftMode::Weighted, {}, false};
    R.phi_before = phi_potential(sub, spec, prod2_sub);
    R.phi_after = phi_potential(sub, spec, cond_sub);
    R.psi1 = psi_potential(sub, restrict_pe(rt.mu1, R.vertices));
    R.psi2 = psi_potential(sub, restrict_pe(rt.mu2, R.vertices));
    if (!R.tv.evaluable) throw DegreeExhausted("TV check not evaluable: " + R.tv.note);
    const double bn = P.beta - P.nu, d = cfg.tv_delta, z = R.tv.fraction;
    const double inv = 1.0 / sub.vertex_count();
    R.relating_rhs = (R.psi1 + R.psi2) / (2 * bn * bn) + 3 * P.nu / bn + 2 * d + 2 * z + inv;
    R.relating_slack = R.relating_rhs - R.phi_after;
    R.relating_ok = R.relating_slack >= -1e-6;
    R.round_bound = bn * bn * (R.phi_after - cfg.round_constant * (d + z) - inv) - 3 * P.nu * bn;
    R.round_slack = R.value_sub - R.round_bound;
    R.round_ok = R.round_slack >= -1e-6;
    R.lemmas_evaluable = true;
  } catch (const std::exception& ex) {
    R.lemmas_evaluable = false;
    R.lemma_note = ex.what();
  }
  return R;
}

// ---------------------------------------------------------------------------
// Relaxation with the lift fallback.

struct RelaxationRecord {
  int requested = 0, solved = 0;
  double objective = 0;       // optimum of the program actually solved
  bool lifted = false;        // pseudoexpectation replaced by the symmetrized rounded solution
  bool certified = false;     // lifted solution reaches the solved optimum, hence optimal at every degree
  double lifted_value = std::nan("");
  std::string backend;
};

// Procedure: solve_with_lift
// Solve at the requested degree; if that exceeds the budget, solve at degree 2,
// round, and lift the rounded assignment to a shift-symmetric distribution.
inline std::pair<PseudoExpectation, RelaxationRecord> solve_with_lift(const UGInstance& inst,
                                                                      const RoundingConfig& cfg) {
  RelaxationRecord rec;
  rec.requested = cfg.degree;
  if (cfg.degree != 2) {
    try {
      auto R = relax(inst, cfg.degree, cfg.relax);
      auto [pe, info] = solve(R, cfg.sdp);
      rec.solved = cfg.degree;
      rec.objective = info.objective;
      rec.backend = pe.kind();
      return {pe, rec};
    } catch (const BudgetExceeded&) {
    }
  }
  auto R2 = relax(inst, 2, cfg.relax);
  auto [pe2, info2] = solve(R2, cfg.sdp);
  rec.solved = 2;
  rec.objective = info2.objective;
  if (cfg.degree == 2) {
    rec.backend = pe2.kind();
    return {pe2, rec};
  }
  const auto rounded = condition_and_round(inst, shift_symmetrize(pe2));
  rec.lifted_value = rounded.value;
  rec.certified = rounded.value >= info2.objective - 1e-6;
  if (!rec.certified && !cfg.lift_always) {
    rec.backend = pe2.kind();
    return {pe2, rec};
  }
  rec.lifted = true;
  auto pe = shift_symmetrize(from_assignment(rounded.x, inst.q()));
  rec.backend = pe.kind();
  return {pe, rec};
}

// ---------------------------------------------------------------------------
// Main loop.

struct IterationRecord {
  int iteration = 0;
  RelaxationRecord relaxation;
  std::vector<int> a;
  int s = 0;
  bool no_dense = false;
  std::string event;
  double pe_event = 0, event_floor = 0, event_score = 0;
  bool event_above_floor = true, event_surrogate = false;
  std::size_t tuples = 0;
  double mi_initial = 0, mi_final = 0, p_initial = 0, p_final = 0;
  bool rt_items = true;
  std::string rt_stop;
  bool conditioned = false;
  double phi_before = std::nan(""), phi_after = std::nan(""), psi1 = std::nan(""), psi2 = std::nan("");
  bool tv_evaluable = false;
  double tv_fraction = std::nan(""), tv_bound = std::nan(""), tv_max = std::nan("");
  bool lemmas_evaluable = false, relating_ok = false, round_ok = false;
  double relating_slack = std::nan(""), round_slack = std::nan("");
  std::string lemma_note;
  double rounded_value = 0;  // on the restriction, current instance
  std::vector<int> assigned;  // S_j
  int subcube_size = 0;
  double cumulative = 0;      // fraction of edges of the input satisfied with both ends assigned
  // claims
  double chernoff_max = 0, chernoff_ceiling = 0;
  bool chernoff_ok = true;
  std::size_t randomized_edges = 0;
  double it_val_lhs = 0, it_val_rhs = 0;
  bool it_val_ok = true;
  double it_drop_lhs = std::nan(""), it_drop_rhs = std::nan("");
  bool it_drop_ok = true;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["iteration"] = iteration;
    j["relaxation"] = {{"requested_degree", relaxation.requested}, {"solved_degree", relaxation.solved},
                       {"objective", relaxation.objective}, {"lifted", relaxation.lifted},
                       {"certified", relaxation.certified}, {"lifted_value", relaxation.lifted_value},
                       {"backend", relaxation.backend}};
    j["subcube"] = {{"a", a}, {"s", s}, {"size", subcube_size}, {"no_dense", no_dense}};
    j["event"] = {{"description", event}, {"pe", pe_event}, {"floor", event_floor}, {"score", event_score},
                  {"above_floor", event_above_floor}, {"surrogate", event_surrogate}};
    j["reduction"] = {{"tuples", tuples}, {"mi_initial", mi_initial}, {"mi_final", mi_final},
                      {"event_initial", p_initial}, {"event_final", p_final}, {"items_ok", rt_items}, {"stop", rt_stop}};
    j["phi"] = {{"before", phi_before}, {"after", phi_after}, {"conditioned", conditioned}};
    j["psi"] = {psi1, psi2};
    j["tv"] = {{"evaluable", tv_evaluable}, {"fraction", tv_fraction}, {"bound", tv_bound}, {"max", tv_max}};
    j["lemmas"] = {{"evaluable", lemmas_evaluable}, {"relating_ok", relating_ok}, {"relating_slack", relating_slack},
                   {"round_ok", round_ok}, {"round_slack", round_slack}, {"note", lemma_note}};
    j["rounded_value"] = rounded_value;
    j["assigned"] = assigned;
    j["cumulative"] = cumulative;
    j["claims"] = {{"chernoff_max", chernoff_max}, {"chernoff_ceiling", chernoff_ceiling}, {"chernoff_ok", chernoff_ok},
                   {"randomized_edges", randomized_edges}, {"it_val_lhs", it_val_lhs}, {"it_val_rhs", it_val_rhs},
                   {"it_val_ok", it_val_ok}, {"it_drop_lhs", it_drop_lhs}, {"it_drop_rhs", it_drop_rhs},
                   {"it_drop_ok", it_drop_ok}};
    return j;
  }
};

struct RoundingTrace {
  std::vector<IterationRecord> iterations;
  std::vector<std::string> warnings;
  double final_value = 0;
  int unassigned_filled = 0;
  bool disjoint = true, consistent = true, cumulative_monotone = true;
  bool it_drop_all = true, chernoff_all = true, it_val_all = true;

  std::string to_jsonl() const {
    std::string out;
    for (const auto& it : iterations) out += it.to_json().dump() + "\n";
    return out;
  }
  nlohmann::json summary() const {
    return {{"iterations", iterations.size()}, {"final_value", final_value}, {"unassigned_filled", unassigned_filled},
            {"disjoint", disjoint}, {"consistent", consistent}, {"cumulative_monotone", cumulative_monotone},
            {"it_drop", it_drop_all}, {"chernoff", chernoff_all}, {"it_val", it_val_all}, {"warnings", warnings}};
  }
};

namespace detail {

inline JohnsonGraph graph_of(const UGInstance& inst) {
  if (!inst.graph || inst.graph->kind != "johnson") throw ParameterError("main_algorithm needs a Johnson graph instance");
  JohnsonGraph g(inst.graph->n, inst.graph->l, inst.graph->t);
  if (g.vertex_count() != inst.vertex_count()) throw ParameterError("graph tag does not match the instance");
  return g;
}

inline double satisfied_fraction_on(const UGInstance& inst, const Assignment& x, const std::vector<int>& edges) {
  double s = 0, t = 0;
  for (int ei : edges) {
    t += inst.edges()[ei].w;
    if (inst.satisfied(ei, x)) s += inst.edges()[ei].w;
  }
  return t > 0 ? s / t : 0.0;
}

}  // namespace detail

// Procedure: main_algorithm
// The it-drop check uses the final output as the fixed witness unless one is given.
inline std::pair<Assignment, RoundingTrace> main_algorithm(const UGInstance& inst, const RoundingConfig& cfg,
                                                           const Assignment* witness = nullptr) {
  const auto g = detail::graph_of(inst);
  const int n = inst.vertex_count(), q = inst.q();
  const int cap = cfg.max_iterations > 0 ? cfg.max_iterations : n;
  RoundingTrace T;
  Assignment f(n, -1);
  std::vector<char> assigned(n, 0);
  int assigned_count = 0;
  UGInstance cur = inst;
  std::vector<UGInstance> history;  // I_j after each randomization
  std::vector<int> R_list;          // vertices assigned so far
  double last_cum = 0;
  for (int j = 1; j <= cap && assigned_count < cfg.gamma / 2 * n; ++j) {
    IterationRecord rec;
    rec.iteration = j;
    auto [pe, relax_rec] = solve_with_lift(cur, cfg);
    rec.relaxation = relax_rec;
    const auto P = resolve_params(cfg, g, q, relax_rec.lifted ? relax_rec.lifted_value : relax_rec.objective);
    RoundingConfig sub_cfg = cfg;
    sub_cfg.seed = cfg.seed + 7919ull * j;
    auto sr = subround(cur, g, pe, P, sub_cfg);
    rec.no_dense = sr.no_dense;
    rec.a = sr.event.a;
    rec.s = sr.event.s;
    rec.event = sr.no_dense ? "none" : sr.event.description;
    rec.pe_event = sr.event.pe_event;
    rec.event_floor = sr.event.floor;
    rec.event_score = sr.event.score;
    rec.event_above_floor = sr.event.above_floor;
    rec.event_surrogate = sr.event.surrogate;
    rec.tuples = sr.tuples;
    rec.mi_initial = sr.mi_initial;
    rec.mi_final = sr.mi_final;
    rec.p_initial = sr.p_initial;
    rec.p_final = sr.p_final;
    rec.rt_items = sr.rt_items;
    rec.rt_stop = sr.rt_stop;
    rec.conditioned = sr.conditioned;
    rec.phi_before = sr.phi_before;
    rec.phi_after = sr.phi_after;
    rec.psi1 = sr.psi1;
    rec.psi2 = sr.psi2;
    rec.tv_evaluable = sr.tv.evaluable && !sr.no_dense;
    if (rec.tv_evaluable) {
      rec.tv_fraction = sr.tv.fraction;
      rec.tv_bound = sr.tv.bound;
      rec.tv_max = sr.tv.max_tv;
    }
    rec.lemmas_evaluable = sr.lemmas_evaluable;
    rec.relating_ok = sr.relating_ok;
    rec.round_ok = sr.round_ok;
    rec.relating_slack = sr.relating_slack;
    rec.round_slack = sr.round_slack;
    rec.lemma_note = sr.no_dense ? "no dense subcube" : sr.lemma_note;
    rec.rounded_value = sr.value_sub;
    rec.subcube_size = static_cast<int>(sr.vertices.size());

    // S_j: newly assigned vertices
    for (std::size_t i = 0; i < sr.vertices.size(); ++i) {
      const int v = sr.vertices[i];
      if (assigned[v]) continue;
      assigned[v] = 1;
      ++assigned_count;
      f[v] = sr.x[i];
      rec.assigned.push_back(v);
      R_list.push_back(v);
    }

    // it-val: edges inside S_j satisfied by f_j, against the guarantee on J|_a
    {
      std::vector<char> in(n, 0);
      for (int v : rec.assigned) in[v] = 1;
      double sat = 0;
      for (int ei = 0; ei < static_cast<int>(inst.edges().size()); ++ei) {
        const auto& e = inst.edges()[ei];
        if (in[e.u] && in[e.v] && inst.satisfied(ei, f)) sat += e.w;
      }
      rec.it_val_lhs = sat;
      rec.it_val_rhs = sr.value_sub * std::pow(1 - g.alpha(), P.r) * static_cast<double>(sr.vertices.size()) / (2.0 * n);
      rec.it_val_ok = rec.it_val_lhs >= rec.it_val_rhs - 1e-12;
    }

    // randomize edges touching R_j and spot-check the ceiling
    cur = randomize_edges(cur, R_list, cfg.seed * 1000003ull + j);
    history.push_back(cur);
    {
      std::vector<int> redges;
      std::vector<char> in(n, 0);
      for (int v : R_list) in[v] = 1;
      for (int ei = 0; ei < static_cast<int>(cur.edges().size()); ++ei)
        if (in[cur.edges()[ei].u] || in[cur.edges()[ei].v]) redges.push_back(ei);
      rec.randomized_edges = redges.size();
      rec.chernoff_ceiling = 2.0 / q + 0.1;
      Rng rng(cfg.seed * 31ull + 17ull * j);
      for (int t = 0; t < 100 && !redges.empty(); ++t) {
        Assignment y(n);
        for (auto& v : y) v = static_cast<int>(uniform_below(rng, q));
        rec.chernoff_max = std::max(rec.chernoff_max, detail::satisfied_fraction_on(cur, y, redges));
      }
      rec.chernoff_ok = rec.chernoff_max <= rec.chernoff_ceiling;
    }

    // cumulative fraction on the input instance
    {
      double sat = 0;
      for (int ei = 0; ei < static_cast<int>(inst.edges().size()); ++ei) {
        const auto& e = inst.edges()[ei];
        if (f[e.u] >= 0 && f[e.v] >= 0 && inst.satisfied(ei, f)) sat += e.w;
      }
      rec.cumulative = sat;
      if (sat < last_cum - 1e-12) T.cumulative_monotone = false;
      last_cum = sat;
    }
    T.chernoff_all = T.chernoff_all && rec.chernoff_ok;
    T.it_val_all = T.it_val_all && rec.it_val_ok;
    const bool stop = sr.no_dense || rec.assigned.empty();
    if (sr.no_dense) T.warnings.push_back("iteration " + std::to_string(j) + ": no dense subcube, all-zeros fallback");
    else if (rec.assigned.empty()) T.warnings.push_back("iteration " + std::to_string(j) + ": subcube already assigned");
    T.iterations.push_back(std::move(rec));
    if (stop) break;
  }
  if (assigned_count < cfg.gamma / 2 * n && static_cast<int>(T.iterations.size()) >= cap)
    T.warnings.push_back("iteration cap reached");

  // completion and bookkeeping
  for (auto& v : f)
    if (v < 0) { v = 0; ++T.unassigned_filled; }
  {
    std::vector<int> seen(n, 0);
    for (const auto& it : T.iterations)
      for (int v : it.assigned)
        if (seen[v]++) T.disjoint = false;
  }
  // it-drop against a fixed witness
  const Assignment W = witness ? *witness : f;
  const double base = value(inst, W);
  {
    std::vector<char> in(n, 0);
    int rsize = 0;
    for (std::size_t j = 0; j < T.iterations.size(); ++j) {
      for (int v : T.iterations[j].assigned) if (!in[v]) { in[v] = 1; ++rsize; }
      auto& it = T.iterations[j];
      it.it_drop_lhs = value(history[j], W);
      it.it_drop_rhs = base - 2.0 * rsize / n;
      it.it_drop_ok = it.it_drop_lhs >= it.it_drop_rhs - 1e-12;
      T.it_drop_all = T.it_drop_all && it.it_drop_ok;
    }
  }
  T.final_value = value(inst, f);
  return {f, T};
}

}  // namespace ughc
