#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <vector>

#include "ughc/johnson.hpp"
#include "ughc/pe.hpp"
#include "ughc/steppoly.hpp"
#include "ughc/ug_core.hpp"

namespace ughc {

// Step polynomials are shared; each one costs a least-squares fit.
inline std::shared_ptr<const StepPoly> step_poly(double beta, double nu) {
  static std::mutex mu;
  static std::map<std::pair<double, double>, std::shared_ptr<const StepPoly>> cache;
  std::lock_guard<std::mutex> lk(mu);
  auto& slot = cache[{beta, nu}];
  if (!slot) slot = std::make_shared<const StepPoly>(build_step_poly(beta, nu));
  return slot;
}

enum class ShiftMode { Weighted, Plain };

struct ShiftSpec {
  double beta = 0.5, nu = 0.1;
  ShiftMode mode = ShiftMode::Weighted;
  std::vector<int> region;  // vertices averaged over; empty means all
  bool induced = false;     // val_u counts only edges inside the region
};

namespace detail {

struct ShiftContext {
  std::vector<int> region;
  std::vector<char> mask;
  std::shared_ptr<const StepPoly> p;
  bool use_mask = false;

  ShiftContext(const UGInstance& inst, const ShiftSpec& spec) {
    region = spec.region;
    if (region.empty()) {
      region.resize(inst.vertex_count());
      std::iota(region.begin(), region.end(), 0);
    }
    mask.assign(inst.vertex_count(), 0);
    for (int u : region) mask[u] = 1;
    use_mask = spec.induced;
    if (spec.mode == ShiftMode::Weighted) p = step_poly(spec.beta, spec.nu);
  }
  const std::vector<char>* m() const { return use_mask ? &mask : nullptr; }
};

// Per-vertex step weights p(val_u(x)), or all ones in plain mode.
inline std::vector<double> step_weights(const UGInstance& inst, const ShiftContext& c, const Assignment& x) {
  std::vector<double> w(inst.vertex_count(), 1.0);
  if (!c.p) return w;
  for (int u : c.region) w[u] = (*c.p)(vertex_value(inst, x, u, c.m()));
  return w;
}

}  // namespace detail

// Procedure: shift_fn
// F_s(u) = 1[x_u - x'_u = s] p(val_u(x)) p(val_u(x')); G_s(u) drops the p factors.
inline double shift_fn(const UGInstance& inst, const ShiftSpec& spec, const Assignment& x, const Assignment& xp,
                       int u, int s) {
  detail::ShiftContext c(inst, spec);
  if (mod(x[u] - xp[u], inst.q()) != mod(s, inst.q())) return 0.0;
  if (!c.p) return 1.0;
  return (*c.p)(vertex_value(inst, x, u, c.m())) * (*c.p)(vertex_value(inst, xp, u, c.m()));
}

// E_{u in region} F_s(u) for every s.
inline std::vector<double> shift_masses(const UGInstance& inst, const ShiftSpec& spec, const Assignment& x,
                                        const Assignment& xp) {
  detail::ShiftContext c(inst, spec);
  auto w = detail::step_weights(inst, c, x), wp = detail::step_weights(inst, c, xp);
  std::vector<double> mass(inst.q(), 0.0);
  for (int u : c.region) mass[mod(x[u] - xp[u], inst.q())] += w[u] * wp[u];
  for (auto& m : mass) m /= static_cast<double>(c.region.size());
  return mass;
}

inline double phi_integral(const UGInstance& inst, const ShiftSpec& spec, const Assignment& x, const Assignment& xp) {
  double s = 0;
  for (double m : shift_masses(inst, spec, x, xp)) s += m * m;
  return s;
}

namespace detail {

inline const DistributionBackend& paired_points(const PseudoExpectation& pe) {
  const auto* d = pe.distribution();
  if (!d || pe.mode() != PEMode::Product) throw ParameterError("expected a product pseudoexpectation");
  return *d;
}

inline Poly copy_poly(const Poly& p, const VarSpace& vs, int copy) {
  Poly out;
  for (const auto& [m, c] : p.terms) out.terms.push_back({to_copy(m, vs, copy), c});
  out.normalize();
  return out;
}

// F_s(u) as a polynomial when the exact local expansion fits the degree budget.
inline Poly shift_poly(const UGInstance& inst, const ShiftContext& c, const PseudoExpectation& pe, int u, int s,
                       int reserve) {
  const auto& vs = pe.vars();
  Poly z = z_poly(vs, u, s);
  if (!c.p) return z;
  std::array<int, 2> budget{pe.degree(0) - reserve, 0};
  const ValMode mode = c.use_mask ? ValMode::Restricted : ValMode::Single;
  auto ev = compose_val(*c.p, inst, vs, u, mode, budget, c.m());
  if (ev.truncated || ev.poly.degree(vs)[0] > pe.degree(1) - reserve)
    throw DegreeExhausted("step weights of vertex " + std::to_string(u) + " do not fit the degree");
  return mul(mul(z, ev.poly, vs), copy_poly(ev.poly, vs, 1), vs);
}

}  // namespace detail

// Procedure: shift_fn_eval
inline double shift_fn_eval(const UGInstance& inst, const ShiftSpec& spec, const PseudoExpectation& pe, int u, int s) {
  if (pe.mode() != PEMode::Product) throw ParameterError("shift functions need a product pseudoexpectation");
  if (const auto* d = pe.distribution()) {
    double acc = 0;
    for (const auto& pt : d->points()) acc += pt.w * shift_fn(inst, spec, pt.x, pt.xp, u, s);
    return acc;
  }
  detail::ShiftContext c(inst, spec);
  if (!c.p) return z_moment(pe, {{u, s}});
  return pe(detail::shift_poly(inst, c, pe, u, s, 1));
}

// Procedure: phi_potential
// pE[sum_s (E_u F_s(u))^2] over the spec's region.
inline double phi_potential(const UGInstance& inst, const ShiftSpec& spec, const PseudoExpectation& pe) {
  if (pe.mode() != PEMode::Product) throw ParameterError("the potential needs a product pseudoexpectation");
  if (const auto* d = pe.distribution()) {
    double acc = 0;
    for (const auto& pt : d->points()) acc += pt.w * phi_integral(inst, spec, pt.x, pt.xp);
    return acc;
  }
  detail::ShiftContext c(inst, spec);
  const double n = static_cast<double>(c.region.size());
  double acc = 0;
  if (!c.p) {
    for (int s = 0; s < inst.q(); ++s)
      for (int u : c.region)
        for (int v : c.region) acc += z_moment(pe, {{u, s}, {v, s}});
    return acc / (n * n);
  }
  const auto& vs = pe.vars();
  for (int s = 0; s < inst.q(); ++s) {
    std::vector<Poly> F;
    for (int u : c.region) F.push_back(detail::shift_poly(inst, c, pe, u, s, 0));
    for (const auto& a : F)
      for (const auto& b : F) acc += pe(mul(a, b, vs));
  }
  return acc / (n * n);
}

// Procedure: phi_global_restricted
// Same average restricted to H, with vertex values from the whole graph.
inline double phi_global_restricted(const UGInstance& inst, ShiftSpec spec, const PseudoExpectation& pe,
                                    const std::vector<int>& H) {
  spec.region = H;
  spec.induced = false;
  return phi_potential(inst, spec, pe);
}

// Procedure: psi_potential
// E_{u,v} sum_s pPr[X_v - X_u = s] pE[val_v(X) 1(X_v - X_u = s)]; this equals the
// squared-probability-times-conditional form, and events below the floor contribute 0.
inline double psi_potential(const UGInstance& inst, const PseudoExpectation& pe, double floor = 1e-9) {
  const int n = inst.vertex_count(), q = inst.q();
  double acc = 0;
  if (const auto* d = pe.distribution()) {
    const auto& pts = d->points();
    std::vector<std::vector<double>> val(pts.size(), std::vector<double>(n));
    for (std::size_t k = 0; k < pts.size(); ++k)
      for (int v = 0; v < n; ++v) val[k][v] = vertex_value(inst, pts[k].x, v);
    std::vector<double> P(q), V(q);
    for (int u = 0; u < n; ++u)
      for (int v = 0; v < n; ++v) {
        std::fill(P.begin(), P.end(), 0.0);
        std::fill(V.begin(), V.end(), 0.0);
        for (std::size_t k = 0; k < pts.size(); ++k) {
          const int s = mod(pts[k].x[v] - pts[k].x[u], q);
          P[s] += pts[k].w;
          V[s] += pts[k].w * val[k][v];
        }
        for (int s = 0; s < q; ++s)
          if (P[s] >= floor) acc += P[s] * V[s];
      }
    return acc / (static_cast<double>(n) * n);
  }
  if (pe.degree() < 4) throw DegreeExhausted("the alternate potential needs degree 4");
  const auto& vs = pe.vars();
  std::vector<Poly> val(n);
  for (int v = 0; v < n; ++v) val[v] = vertex_val_poly(inst, vs, v, 0);
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      for (int s = 0; s < q; ++s) {
        Poly D;
        for (int a = 0; a < q; ++a) D = D + mul(x_var(vs, 0, u, a), x_var(vs, 0, v, mod(a + s, q)), vs);
        const double P = pe(D);
        if (P >= floor) acc += P * pe(mul(val[v], D, vs));
      }
  return acc / (static_cast<double>(n) * n);
}

// ---------------------------------------------------------------------------
// Finite joint distributions and information measures.

struct Joint {
  std::vector<int> dims;
  std::vector<double> p;  // row-major, last coordinate fastest

  Joint() = default;
  explicit Joint(std::vector<int> d) : dims(std::move(d)) {
    std::size_t s = 1;
    for (int k : dims) s *= static_cast<std::size_t>(k);
    p.assign(s, 0.0);
  }
  std::size_t index(const std::vector<int>& v) const {
    std::size_t i = 0;
    for (std::size_t k = 0; k < dims.size(); ++k) i = i * dims[k] + v[k];
    return i;
  }
  std::vector<int> coords(std::size_t i) const {
    std::vector<int> v(dims.size());
    for (int k = static_cast<int>(dims.size()) - 1; k >= 0; --k) {
      v[k] = static_cast<int>(i % dims[k]);
      i /= dims[k];
    }
    return v;
  }
  double total() const { return std::accumulate(p.begin(), p.end(), 0.0); }
};

inline Joint marginal(const Joint& J, const std::vector<int>& keep) {
  std::vector<int> d;
  for (int k : keep) d.push_back(J.dims[k]);
  Joint M(d);
  std::vector<int> sub(keep.size());
  for (std::size_t i = 0; i < J.p.size(); ++i) {
    auto c = J.coords(i);
    for (std::size_t k = 0; k < keep.size(); ++k) sub[k] = c[keep[k]];
    M.p[M.index(sub)] += J.p[i];
  }
  return M;
}

inline double entropy_bits(const std::vector<double>& p) {
  double h = 0;
  for (double x : p)
    if (x > 0) h -= x * std::log2(x);
  return h;
}

// Procedure: mutual_information
// I(A; B) in bits, 0 log 0 = 0.
inline double mutual_information(const Joint& J, const std::vector<int>& A, const std::vector<int>& B) {
  std::vector<int> AB(A);
  AB.insert(AB.end(), B.begin(), B.end());
  return entropy_bits(marginal(J, A).p) + entropy_bits(marginal(J, B).p) - entropy_bits(marginal(J, AB).p);
}

inline double tv(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ParameterError("distributions differ in size");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

// Joint of (A, B) next to the product of its two marginals, both ordered A then B.
inline std::pair<Joint, Joint> joint_and_product(const Joint& J, const std::vector<int>& A, const std::vector<int>& B) {
  std::vector<int> AB(A);
  AB.insert(AB.end(), B.begin(), B.end());
  Joint jab = marginal(J, AB), ma = marginal(J, A), mb = marginal(J, B);
  Joint prod(jab.dims);
  for (std::size_t i = 0; i < ma.p.size(); ++i)
    for (std::size_t j = 0; j < mb.p.size(); ++j) prod.p[i * mb.p.size() + j] = ma.p[i] * mb.p[j];
  return {jab, prod};
}

// Procedure: pinsker_residual
// sqrt(MI_nats / 2) + 1e-9 - TV(joint, product of marginals); nonnegative when Pinsker holds.
inline double pinsker_residual(const Joint& J, const std::vector<int>& A, const std::vector<int>& B) {
  auto [jab, prod] = joint_and_product(J, A, B);
  const double mi_nats = std::max(0.0, mutual_information(J, A, B)) * std::log(2.0);
  return std::sqrt(mi_nats / 2) + 1e-9 - tv(jab.p, prod.p);
}

// Push coordinate k through a deterministic map into {0..new_dim-1}.
inline Joint map_coordinate(const Joint& J, int k, const std::vector<int>& f, int new_dim) {
  auto d = J.dims;
  d[k] = new_dim;
  Joint M(d);
  for (std::size_t i = 0; i < J.p.size(); ++i) {
    auto c = J.coords(i);
    c[k] = f.at(c[k]);
    M.p[M.index(c)] += J.p[i];
  }
  return M;
}

// ---------------------------------------------------------------------------
// Local distributions over (X_u, p_u) and the primed copy.

struct LocalVar {
  int copy = 0;
  int u = 0;
  bool is_p = false;  // Bernoulli p_u with Pr[p_u = 1] = pE[p(val_u)]
  int dim(int q) const { return is_p ? 2 : q; }
  bool operator==(const LocalVar& o) const { return copy == o.copy && u == o.u && is_p == o.is_p; }
};

struct LocalJoint {
  std::vector<LocalVar> vars;
  Joint joint;
  double clamped = 0;  // largest negative entry removed
};

struct LocalDistributionCollection {
  std::vector<LocalJoint> joints;
  double max_clamp = 0;
  double max_sum_error = 0;
  double max_inconsistency = 0;
};

struct LocalOptions {
  double clamp_tol = 1e-6;  // larger negative entries make the extraction fail
};

namespace detail {

inline Poly local_factor(const UGInstance& inst, const PseudoExpectation& pe, const StepPoly* p, const LocalVar& v,
                         int value) {
  const auto& vs = pe.vars();
  if (!v.is_p) return x_var(vs, v.copy, v.u, value);
  if (!p) throw ParameterError("p coordinates need a step polynomial");
  auto ev = compose_val(*p, inst, vs, v.u, ValMode::Single, {pe.degree(v.copy), 0});
  if (ev.truncated) throw DegreeExhausted("step weight of vertex " + std::to_string(v.u) + " does not fit the degree");
  Poly f = v.copy ? copy_poly(ev.poly, vs, 1) : ev.poly;
  return value ? f : Poly::constant(1.0) - f;
}

}  // namespace detail

// Procedure: extract_local
inline LocalDistributionCollection extract_local(const UGInstance& inst, const PseudoExpectation& pe,
                                                 const StepPoly* p, const std::vector<std::vector<LocalVar>>& tuples,
                                                 LocalOptions opt = {}) {
  const int q = inst.q();
  LocalDistributionCollection out;
  for (const auto& tup : tuples) {
    for (const auto& v : tup)
      if (v.copy == 1 && pe.mode() != PEMode::Product) throw ParameterError("primed variable on a single copy");
    LocalJoint lj;
    lj.vars = tup;
    std::vector<int> dims;
    for (const auto& v : tup) dims.push_back(v.dim(q));
    lj.joint = Joint(dims);
    if (const auto* d = pe.distribution()) {
      for (const auto& pt : d->points()) {
        std::vector<double> pu(tup.size(), 0.0);
        for (std::size_t k = 0; k < tup.size(); ++k)
          if (tup[k].is_p) {
            if (!p) throw ParameterError("p coordinates need a step polynomial");
            pu[k] = (*p)(vertex_value(inst, tup[k].copy ? pt.xp : pt.x, tup[k].u));
          }
        for (std::size_t i = 0; i < lj.joint.p.size(); ++i) {
          auto c = lj.joint.coords(i);
          double w = pt.w;
          for (std::size_t k = 0; k < tup.size() && w != 0; ++k) {
            const auto& v = tup[k];
            if (v.is_p) w *= c[k] ? pu[k] : 1 - pu[k];
            else w *= (v.copy ? pt.xp : pt.x)[v.u] == c[k] ? 1.0 : 0.0;
          }
          lj.joint.p[i] += w;
        }
      }
    } else {
      const auto& vs = pe.vars();
      for (std::size_t i = 0; i < lj.joint.p.size(); ++i) {
        auto c = lj.joint.coords(i);
        Poly f = Poly::constant(1.0);
        for (std::size_t k = 0; k < tup.size(); ++k) f = mul(f, detail::local_factor(inst, pe, p, tup[k], c[k]), vs);
        lj.joint.p[i] = pe(f);
      }
    }
    for (auto& x : lj.joint.p)
      if (x < 0) {
        lj.clamped = std::max(lj.clamped, -x);
        x = 0;
      }
    if (lj.clamped > opt.clamp_tol)
      throw ValidityError("local distribution needs clamping of " + std::to_string(lj.clamped));
    out.max_clamp = std::max(out.max_clamp, lj.clamped);
    out.max_sum_error = std::max(out.max_sum_error, std::abs(lj.joint.total() - 1.0));
    out.joints.push_back(std::move(lj));
  }
  // marginal consistency over shared coordinates
  for (std::size_t i = 0; i < out.joints.size(); ++i)
    for (std::size_t j = i + 1; j < out.joints.size(); ++j) {
      std::vector<int> ki, kj;
      const auto& a = out.joints[i].vars;
      const auto& b = out.joints[j].vars;
      for (std::size_t x = 0; x < a.size(); ++x)
        for (std::size_t y = 0; y < b.size(); ++y)
          if (a[x] == b[y]) { ki.push_back(static_cast<int>(x)); kj.push_back(static_cast<int>(y)); }
      if (ki.empty()) continue;
      auto mi = marginal(out.joints[i].joint, ki), mj = marginal(out.joints[j].joint, kj);
      for (std::size_t t = 0; t < mi.p.size(); ++t)
        out.max_inconsistency = std::max(out.max_inconsistency, std::abs(mi.p[t] - mj.p[t]));
    }
  return out;
}

struct MIStats {
  std::vector<std::pair<std::pair<int, int>, double>> pairs;
  double average = 0;
  double max = 0;
};

// Pairwise I(X_u; X_v) over vertex pairs of S from degree-2 marginals of one copy.
// With max_pairs > 0 a seeded sample of pairs is used.
inline MIStats mi_stats(const PseudoExpectation& pe, const std::vector<int>& S, int copy = 0,
                        std::size_t max_pairs = 0, std::uint64_t seed = 0) {
  const int q = pe.vars().q;
  std::vector<std::pair<int, int>> all;
  for (std::size_t i = 0; i < S.size(); ++i)
    for (std::size_t j = i + 1; j < S.size(); ++j) all.push_back({S[i], S[j]});
  if (max_pairs && all.size() > max_pairs) {
    Rng rng(seed);
    shuffle_det(all, rng);
    all.resize(max_pairs);
    std::sort(all.begin(), all.end());
  }
  MIStats st;
  for (auto [u, v] : all) {
    Joint J({q, q});
    for (int a = 0; a < q; ++a)
      for (int b = 0; b < q; ++b) J.p[a * q + b] = std::max(0.0, pe.xx(u, a, v, b, copy, copy));
    const double m = std::max(0.0, mutual_information(J, {0}, {1}));
    st.pairs.push_back({{u, v}, m});
    st.average += m;
    st.max = std::max(st.max, m);
  }
  if (!st.pairs.empty()) st.average /= static_cast<double>(st.pairs.size());
  return st;
}

// ---------------------------------------------------------------------------
// Dense subcubes and edge covering for integral pairs.

// Procedure: edge_cover_schedule
// eps_r = min(e^-r, c^2 e^-r), eps_{i-1} = eps_i^5 / 2^{6r}.
inline std::vector<double> edge_cover_schedule(int r, double c = 1.0) {
  std::vector<double> eps(r + 1);
  eps[r] = std::min(std::exp(-r), c * c * std::exp(-r));
  for (int i = r; i >= 1; --i) eps[i - 1] = std::pow(eps[i], 5) / std::pow(2.0, 6 * r);
  return eps;
}

// Densities delta(G|_a) for every |a| <= r, indexed by colex rank per size.
inline std::vector<std::vector<double>> restricted_densities(const JohnsonGraph& g, const std::vector<double>& G, int r) {
  std::vector<std::vector<double>> d(r + 1);
  for (int i = 0; i <= r; ++i) {
    d[i].assign(binom(g.n(), i), 0.0);
    for_each_subset(g.n(), i, [&](const std::vector<int>& a) { d[i][colex_rank(a)] = density(g, G, a); });
  }
  return d;
}

namespace detail {

// T_{s,a}: dense at a, below eps_{|b|} on every proper b.
inline bool fires(const std::vector<std::vector<double>>& dens, const std::vector<double>& eps,
                  const std::vector<int>& a) {
  const int i = static_cast<int>(a.size());
  if (dens[i][colex_rank(a)] < eps[i]) return false;
  for (int mask = 0; mask < (1 << i) - 1; ++mask) {
    std::vector<int> b;
    for (int k = 0; k < i; ++k)
      if (mask >> k & 1) b.push_back(a[k]);
    if (dens[b.size()][colex_rank(b)] >= eps[b.size()]) return false;
  }
  return true;
}

}  // namespace detail

struct DenseSubcubeReport {
  std::vector<double> count;   // E_a[T_{s,a}] per level i
  std::vector<double> bound;   // 4 delta(G_s) / (eps_i^2 l^i)
  std::vector<double> bridge;  // 4 / eps_i^2 * max(0, E_a f_i(a)^2 - delta(G_s) / l^i)
  std::vector<std::vector<std::vector<int>>> fired;
  bool ok = true;
};

// Procedure: dense_subcube_indicators
inline DenseSubcubeReport dense_subcube_indicators(const JohnsonGraph& g, const std::vector<double>& G,
                                                   const std::vector<double>& eps) {
  const int r = static_cast<int>(eps.size()) - 1;
  if (r < 0 || r > g.l() - 1) throw ParameterError("need 0 <= r <= l-1");
  for (int i = 1; i <= r; ++i)
    if (eps[i - 1] > eps[i] / (std::pow(2.0, i + 1) * i) * (1 + 1e-12))
      throw ParameterError("density schedule violates eps_{i-1} <= eps_i / (2^{i+1} i)");
  auto dens = restricted_densities(g, G, r);
  const double delta = dens[0][0];
  DenseSubcubeReport rep;
  rep.count.assign(r + 1, 0);
  rep.bound.assign(r + 1, 0);
  rep.bridge.assign(r + 1, 0);
  rep.fired.resize(r + 1);
  for (int i = 0; i <= r; ++i) {
    double f2 = 0;
    long cnt = 0;
    for_each_subset(g.n(), i, [&](const std::vector<int>& a) {
      ++cnt;
      if (detail::fires(dens, eps, a)) {
        rep.count[i] += 1;
        rep.fired[i].push_back(a);
      }
      double f = 0;
      for (int mask = 0; mask < (1 << i); ++mask) {
        std::vector<int> b;
        for (int k = 0; k < i; ++k)
          if (mask >> k & 1) b.push_back(a[k]);
        f += ((i - static_cast<int>(b.size())) % 2 ? -1.0 : 1.0) * dens[b.size()][colex_rank(b)];
      }
      f2 += f * f;
    });
    rep.count[i] /= static_cast<double>(cnt);
    f2 /= static_cast<double>(cnt);
    const double li = std::pow(static_cast<double>(g.l()), i);
    rep.bound[i] = 4 * delta / (eps[i] * eps[i] * li);
    rep.bridge[i] = 4 / (eps[i] * eps[i]) * std::max(0.0, f2 - delta / li);
    if (rep.count[i] > rep.bound[i] + rep.bridge[i] + 1e-12) rep.ok = false;
  }
  return rep;
}

inline std::vector<std::vector<double>> shift_parts(const Assignment& x, const Assignment& xp, int q) {
  std::vector<std::vector<double>> G(q, std::vector<double>(x.size(), 0.0));
  for (std::size_t u = 0; u < x.size(); ++u) G[mod(x[u] - xp[u], q)][u] = 1.0;
  return G;
}

// Edges satisfied by both assignments whose endpoints lie in different shift parts (always 0).
inline int crossing_satisfied_edges(const UGInstance& inst, const Assignment& x, const Assignment& xp) {
  int bad = 0;
  for (int i = 0; i < static_cast<int>(inst.edges().size()); ++i) {
    const auto& e = inst.edges()[i];
    if (inst.satisfied(i, x) && inst.satisfied(i, xp) &&
        mod(x[e.u] - xp[e.u], inst.q()) != mod(x[e.v] - xp[e.v], inst.q()))
      ++bad;
  }
  return bad;
}

struct EdgeCoverReport {
  double val_and = 0;
  std::vector<double> terms;  // T_0..T_r
  double err = 0;
  double slack = 0;           // sum T_i + err - val_and
  double slack_without_err = 0;
  std::vector<double> cover_ratio;  // C(n,i) |E(J|_a)| / |E(J)|, bounded by l^i in the argument
  bool ok = false;
};

// Procedure: edge_cover_decompose
inline EdgeCoverReport edge_cover_decompose(const JohnsonGraph& g, const UGInstance& inst, const Assignment& x,
                                            const Assignment& xp, const std::vector<double>& eps) {
  const int r = static_cast<int>(eps.size()) - 1;
  if (r < 0 || r > g.l() - 1) throw ParameterError("need 0 <= r <= l-1");
  if (eps[r] > std::exp(-r) * (1 + 1e-12)) throw ParameterError("schedule needs eps_r <= e^-r");
  for (int i = 1; i <= r; ++i)
    if (eps[i - 1] > std::pow(eps[i], 5) / std::pow(2.0, 6 * r) * (1 + 1e-12))
      throw ParameterError("schedule needs eps_{i-1} <= eps_i^5 / 2^{6r}");
  const int q = inst.q(), n = inst.vertex_count();
  EdgeCoverReport rep;
  rep.val_and = value_and(inst, x, xp);
  rep.terms.assign(r + 1, 0);
  rep.cover_ratio.assign(r + 1, 0);
  auto G = shift_parts(x, xp, q);
  std::vector<std::vector<std::vector<double>>> dens(q);
  for (int s = 0; s < q; ++s) dens[s] = restricted_densities(g, G[s], r);

  for (int s = 0; s < q; ++s) {
    if (dens[s][0][0] < eps[0]) continue;
    double acc = 0;
    for (int u = 0; u < n; ++u)
      if (G[s][u] > 0) acc += vertex_value_and(inst, x, xp, u);
    rep.terms[0] += acc / n;
  }
  const double E = static_cast<double>(g.edge_count());
  for (int i = 1; i <= r; ++i) {
    long cnt = 0;
    double acc = 0;
    for_each_subset(g.n(), i, [&](const std::vector<int>& a) {
      ++cnt;
      std::vector<int> S;
      std::vector<char> mask;
      for (int s = 0; s < q; ++s) {
        if (!detail::fires(dens[s], eps, a)) continue;
        if (S.empty()) {
          S = g.basic_set(a);
          mask = g.mask_of(S);
        }
        double inner = 0;
        for (int u : S)
          if (G[s][u] > 0) inner += vertex_value_and(inst, x, xp, u, &mask);
        acc += inner / static_cast<double>(S.size());
      }
      if (cnt == 1) {
        auto B = g.basic_set(a);
        auto m = g.mask_of(B);
        long inside = 0;
        for (int u : B)
          for (int v : g.neighbors(u)) inside += m[v];
        rep.cover_ratio[i] = binomd(g.n(), i) * (inside / 2.0) / E;
      }
    });
    rep.terms[i] = std::pow(static_cast<double>(g.l()), i) * acc / static_cast<double>(cnt);
  }
  rep.cover_ratio[0] = 1.0;
  double worst = 0;
  for (int i = 1; i <= r; ++i) worst = std::max(worst, eps[i - 1] / std::pow(eps[i], 4));
  rep.err = 4 * std::pow(1 - g.alpha(), r + 1) + std::pow(2.0, 6 * r) * worst;
  const double tot = std::accumulate(rep.terms.begin(), rep.terms.end(), 0.0);
  rep.slack = tot + rep.err - rep.val_and;
  rep.slack_without_err = tot - rep.val_and;
  rep.ok = rep.slack >= -1e-12;
  return rep;
}

// ---------------------------------------------------------------------------
// Potential on a subcube against the global potential restricted to it.

struct PotentialsClaimReport {
  std::vector<int> a;
  double outflow = 0;   // largest fraction of a vertex's edges leaving J|_a
  double beta_sub = 0;  // beta - outflow
  double lhs = 0;       // Phi^C_{beta - outflow, nu}
  double rhs = 0;       // Phi_{beta, nu}|_C - 4 nu
  double slack = 0;
};

// Procedure: claim_potentials_check
// Every subcube |a| <= r on an integral pair. The outflow of J|_a replaces the
// asymptotic 200 sqrt(eps) bound of the argument.
inline std::vector<PotentialsClaimReport> claim_potentials_check(const JohnsonGraph& g, const UGInstance& inst,
                                                                 const Assignment& x, const Assignment& xp,
                                                                 double beta, double nu, int r) {
  std::vector<PotentialsClaimReport> out;
  for (int i = 0; i <= r; ++i)
    for_each_subset(g.n(), i, [&](const std::vector<int>& a) {
      PotentialsClaimReport rep;
      rep.a = a;
      auto C = g.basic_set(a);
      for (int v : C) rep.outflow = std::max(rep.outflow, vertex_outflow(g, v, a));
      rep.beta_sub = beta - rep.outflow;
      ShiftSpec sub{rep.beta_sub, nu, ShiftMode::Weighted, C, true};
      ShiftSpec glob{beta, nu, ShiftMode::Weighted, C, false};
      rep.lhs = phi_integral(inst, sub, x, xp);
      rep.rhs = phi_integral(inst, glob, x, xp) - 4 * nu;
      rep.slack = rep.lhs - rep.rhs;
      out.push_back(rep);
    });
  return out;
}

}  // namespace ughc
