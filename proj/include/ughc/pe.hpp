#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "ughc/common.hpp"
#include "ughc/poly.hpp"
#include "ughc/ug_core.hpp"

namespace ughc {

inline constexpr int kExactDegree = 1000;  // distributions have moments of every degree

enum class PEMode { Single, Product };

class PEBackend {
 public:
  virtual ~PEBackend() = default;
  // m is canonical and non-vanishing.
  virtual double moment(const Mono& m) const = 0;
  virtual std::string kind() const = 0;
};

// A memo wrapper for backends whose moments are expensive.
class CachedBackend : public PEBackend {
 public:
  double moment(const Mono& m) const final {
    {
      std::lock_guard<std::mutex> lk(mu_);
      auto it = cache_.find(m);
      if (it != cache_.end()) return it->second;
    }
    const double v = compute(m);
    std::lock_guard<std::mutex> lk(mu_);
    cache_.emplace(m, v);
    return v;
  }

 protected:
  virtual double compute(const Mono& m) const = 0;

 private:
  mutable std::mutex mu_;
  mutable std::unordered_map<Mono, double, MonoHash> cache_;
};

struct WeightedPoint {
  Assignment x, xp;  // xp empty in single mode
  double w = 0;
};

class DistributionBackend : public PEBackend {
 public:
  DistributionBackend(VarSpace vs, std::vector<WeightedPoint> pts) : vs_(vs), pts_(std::move(pts)) {}
  double moment(const Mono& m) const override {
    double s = 0;
    for (const auto& p : pts_) {
      bool on = true;
      for (auto v : m) {
        const Assignment& a = vs_.copy(v) ? p.xp : p.x;
        if (a[vs_.vertex(v)] != vs_.label(v)) { on = false; break; }
      }
      if (on) s += p.w;
    }
    return s;
  }
  std::string kind() const override { return "distribution"; }
  const std::vector<WeightedPoint>& points() const { return pts_; }

 private:
  VarSpace vs_;
  std::vector<WeightedPoint> pts_;
};

// Independent labels with per-vertex marginals (single mode).
class IndependentBackend : public PEBackend {
 public:
  IndependentBackend(VarSpace vs, std::vector<std::vector<double>> marg) : vs_(vs), marg_(std::move(marg)) {}
  double moment(const Mono& m) const override {
    double s = 1;
    for (auto v : m) s *= marg_[vs_.vertex(v)][vs_.label(v)];
    return s;
  }
  std::string kind() const override { return "independent"; }

 private:
  VarSpace vs_;
  std::vector<std::vector<double>> marg_;
};

// Expands a single-copy monomial that may use label q-1 into the reduced
// basis (labels 0..q-2) via X_{u,q-1} = 1 - sum_{a<q-1} X_{u,a}.
inline void reduce_to_basis(const Mono& m, const VarSpace& vs, const std::function<void(const Mono&, double)>& emit) {
  Mono fixed;
  std::vector<int> last;
  for (auto v : m) {
    if (vs.label(v) == vs.q - 1) last.push_back(vs.vertex(v));
    else fixed.push(v);
  }
  if (last.empty()) { emit(fixed, 1.0); return; }
  const int copy = m.size() ? vs.copy(m[0]) : 0;
  const int k = static_cast<int>(last.size());
  std::vector<int> choice(k, -1);  // -1 picks the constant 1
  while (true) {
    Mono t = fixed;
    double sign = 1;
    for (int i = 0; i < k; ++i)
      if (choice[i] >= 0) { t.push(vs.id(copy, last[i], choice[i])); sign = -sign; }
    canonical(t, vs);
    emit(t, sign);
    int i = 0;
    while (i < k && ++choice[i] == vs.q - 1) choice[i++] = -1;
    if (i == k) break;
  }
}

// Moments stored for the reduced basis only (labels 0..q-2, single copy).
class ReducedTableBackend : public CachedBackend {
 public:
  ReducedTableBackend(VarSpace vs, std::unordered_map<Mono, double, MonoHash> y) : vs_(vs), y_(std::move(y)) {}
  std::string kind() const override { return "reduced-table"; }
  const std::unordered_map<Mono, double, MonoHash>& table() const { return y_; }

 protected:
  double compute(const Mono& m) const override {
    double s = 0;
    reduce_to_basis(m, vs_, [&](const Mono& t, double c) {
      if (t.size() == 0) { s += c; return; }
      auto it = y_.find(t);
      if (it == y_.end()) throw DegreeExhausted("moment outside the stored table");
      s += c * it->second;
    });
    return s;
  }

 private:
  VarSpace vs_;
  std::unordered_map<Mono, double, MonoHash> y_;
};

// Moments stored for every canonical monomial (as loaded from a file).
class FullTableBackend : public PEBackend {
 public:
  explicit FullTableBackend(std::unordered_map<Mono, double, MonoHash> t) : t_(std::move(t)) {}
  double moment(const Mono& m) const override {
    if (m.size() == 0) {
      auto it = t_.find(m);
      return it == t_.end() ? 1.0 : it->second;
    }
    auto it = t_.find(m);
    if (it == t_.end()) throw DegreeExhausted("moment missing from table");
    return it->second;
  }
  std::string kind() const override { return "full-table"; }
  const std::unordered_map<Mono, double, MonoHash>& table() const { return t_; }

 private:
  std::unordered_map<Mono, double, MonoHash> t_;
};

class PseudoExpectation {
 public:
  PseudoExpectation() = default;
  PseudoExpectation(VarSpace vs, PEMode mode, std::array<int, 2> deg, std::shared_ptr<const PEBackend> be)
      : vs_(vs), mode_(mode), deg_(deg), be_(std::move(be)) {}

  const VarSpace& vars() const { return vs_; }
  PEMode mode() const { return mode_; }
  int degree(int copy = 0) const { return deg_[copy]; }
  std::array<int, 2> degrees() const { return deg_; }
  bool is_distribution() const { return dynamic_cast<const DistributionBackend*>(be_.get()) != nullptr; }
  const DistributionBackend* distribution() const { return dynamic_cast<const DistributionBackend*>(be_.get()); }
  const PEBackend& backend() const { return *be_; }
  std::shared_ptr<const PEBackend> backend_ptr() const { return be_; }
  std::string kind() const { return be_->kind(); }

  double operator[](const Mono& m) const {
    auto d = copy_degree(m, vs_);
    if (d[0] > deg_[0] || d[1] > deg_[1]) throw DegreeExhausted("monomial degree exceeds the pseudoexpectation");
    if (d[1] > 0 && mode_ == PEMode::Single) throw ParameterError("primed variable in single mode");
    return be_->moment(m);
  }
  double operator()(const Poly& p) const {
    if (const auto* dist = distribution()) {
      double s = 0;
      for (const auto& pt : dist->points())
        s += pt.w * evaluate(p, vs_, pt.x, mode_ == PEMode::Product ? &pt.xp : nullptr);
      return s;
    }
    double s = 0;
    for (const auto& [m, c] : p.terms) s += c * (*this)[m];
    return s;
  }
  // E[event]: pointwise for distributions, via the polynomial otherwise.
  double expect(const EventPoly& e) const {
    if (const auto* dist = distribution()) {
      double s = 0;
      for (const auto& pt : dist->points()) s += pt.w * e.eval(vs_, pt.x, mode_ == PEMode::Product ? &pt.xp : nullptr);
      return s;
    }
    if (!e.has_poly) throw DegreeExhausted("event has no polynomial form");
    return (*this)(e.poly);
  }

  double x(int u, int a, int copy = 0) const {
    Mono m;
    m.push(vs_.id(copy, u, mod(a, vs_.q)));
    return (*this)[m];
  }
  double xx(int u, int a, int v, int b, int cu = 0, int cv = 0) const {
    Mono m;
    m.push(vs_.id(cu, u, mod(a, vs_.q)));
    m.push(vs_.id(cv, v, mod(b, vs_.q)));
    if (!canonical(m, vs_)) return 0.0;
    return (*this)[m];
  }

 private:
  VarSpace vs_;
  PEMode mode_ = PEMode::Single;
  std::array<int, 2> deg_{0, 0};
  std::shared_ptr<const PEBackend> be_;
};

// ---- composite backends ----

inline Mono to_copy(const Mono& m, const VarSpace& vs, int copy) {
  Mono r;
  for (auto v : m) r.push(vs.id(copy, vs.vertex(v), vs.label(v)));
  return r;
}

class ProductBackend : public PEBackend {
 public:
  ProductBackend(VarSpace vs, PseudoExpectation a, PseudoExpectation b) : vs_(vs), a_(std::move(a)), b_(std::move(b)) {}
  double moment(const Mono& m) const override {
    Mono ma, mb;
    for (auto v : m) {
      if (vs_.copy(v) == 0) ma.push(v);
      else mb.push(vs_.id(0, vs_.vertex(v), vs_.label(v)));
    }
    return a_[ma] * b_[mb];
  }
  std::string kind() const override { return "product"; }

 private:
  VarSpace vs_;
  PseudoExpectation a_, b_;
};

class MixtureBackend : public CachedBackend {
 public:
  explicit MixtureBackend(std::vector<std::pair<PseudoExpectation, double>> parts) : parts_(std::move(parts)) {}
  std::string kind() const override { return "mixture"; }

 protected:
  double compute(const Mono& m) const override {
    double s = 0;
    for (const auto& [pe, w] : parts_) s += w * pe[m];
    return s;
  }

 private:
  std::vector<std::pair<PseudoExpectation, double>> parts_;
};

class ConditionedBackend : public CachedBackend {
 public:
  ConditionedBackend(PseudoExpectation base, Poly s, double z) : base_(std::move(base)), s_(std::move(s)), z_(z) {}
  std::string kind() const override { return "conditioned(" + base_.kind() + ")"; }

 protected:
  double compute(const Mono& m) const override {
    double acc = 0;
    Mono t;
    for (const auto& [ms, c] : s_.terms)
      if (multiply(m, ms, base_.vars(), t)) acc += c * base_[t];
    return acc / z_;
  }

 private:
  PseudoExpectation base_;
  Poly s_;
  double z_;
};

class ShiftBackend : public CachedBackend {
 public:
  explicit ShiftBackend(PseudoExpectation base) : base_(std::move(base)) {}
  std::string kind() const override { return "shift-symmetrized(" + base_.kind() + ")"; }

 protected:
  double compute(const Mono& m) const override {
    const auto& vs = base_.vars();
    double s = 0;
    for (int sh = 0; sh < vs.q; ++sh) {
      Mono t;
      for (auto v : m) t.push(vs.id(vs.copy(v), vs.vertex(v), mod(vs.label(v) + sh, vs.q)));
      canonical(t, vs);
      s += base_[t];
    }
    return s / vs.q;
  }

 private:
  PseudoExpectation base_;
};

class CopyMarginalBackend : public PEBackend {
 public:
  CopyMarginalBackend(PseudoExpectation base, int copy) : base_(std::move(base)), copy_(copy) {}
  double moment(const Mono& m) const override { return base_[to_copy(m, base_.vars(), copy_)]; }
  std::string kind() const override { return "marginal(" + base_.kind() + ")"; }

 private:
  PseudoExpectation base_;
  int copy_;
};

// ---- constructors and operations ----

inline PseudoExpectation from_distribution(VarSpace vs, std::vector<WeightedPoint> pts) {
  const PEMode mode = !pts.empty() && !pts[0].xp.empty() ? PEMode::Product : PEMode::Single;
  double tot = 0;
  for (const auto& p : pts) {
    if (p.w < 0) throw ParameterError("negative weight");
    tot += p.w;
  }
  if (std::abs(tot - 1) > 1e-9) throw ParameterError("weights must sum to 1");
  return PseudoExpectation(vs, mode, {kExactDegree, mode == PEMode::Product ? kExactDegree : 0},
                           std::make_shared<DistributionBackend>(vs, std::move(pts)));
}

inline PseudoExpectation from_assignment(const Assignment& x, int q) {
  VarSpace vs{static_cast<int>(x.size()), q};
  return from_distribution(vs, {{x, {}, 1.0}});
}

inline PseudoExpectation independent_pe(VarSpace vs, std::vector<std::vector<double>> marg) {
  return PseudoExpectation(vs, PEMode::Single, {kExactDegree, 0}, std::make_shared<IndependentBackend>(vs, std::move(marg)));
}

inline PseudoExpectation uniform_pe(VarSpace vs) {
  return independent_pe(vs, std::vector<std::vector<double>>(vs.n, std::vector<double>(vs.q, 1.0 / vs.q)));
}

// Procedure: mixture
inline PseudoExpectation mixture(const std::vector<std::pair<PseudoExpectation, double>>& parts) {
  if (parts.empty()) throw ParameterError("empty mixture");
  double tot = 0;
  bool all_dist = true;
  std::array<int, 2> deg{kExactDegree, kExactDegree};
  for (const auto& [pe, w] : parts) {
    if (w < 0) throw ParameterError("negative mixture weight");
    if (!(pe.vars() == parts[0].first.vars()) || pe.mode() != parts[0].first.mode())
      throw ParameterError("mixture parts disagree on variables");
    tot += w;
    all_dist = all_dist && pe.is_distribution();
    deg[0] = std::min(deg[0], pe.degree(0));
    deg[1] = std::min(deg[1], pe.degree(1));
  }
  if (std::abs(tot - 1) > 1e-9) throw ParameterError("mixture weights must sum to 1");
  const auto& vs = parts[0].first.vars();
  if (all_dist) {
    std::vector<WeightedPoint> pts;
    for (const auto& [pe, w] : parts)
      for (auto p : pe.distribution()->points()) {
        p.w *= w;
        if (p.w > 0) pts.push_back(std::move(p));
      }
    return from_distribution(vs, std::move(pts));
  }
  return PseudoExpectation(vs, parts[0].first.mode(), deg, std::make_shared<MixtureBackend>(parts));
}

// Procedure: product
inline PseudoExpectation product(const PseudoExpectation& a, const PseudoExpectation& b) {
  if (a.mode() != PEMode::Single || b.mode() != PEMode::Single || !(a.vars() == b.vars()))
    throw ParameterError("product needs two single-copy pseudoexpectations on one variable set");
  const auto& vs = a.vars();
  if (a.is_distribution() && b.is_distribution()) {
    std::vector<WeightedPoint> pts;
    for (const auto& p : a.distribution()->points())
      for (const auto& r : b.distribution()->points()) pts.push_back({p.x, r.x, p.w * r.w});
    return from_distribution(vs, std::move(pts));
  }
  return PseudoExpectation(vs, PEMode::Product, {a.degree(), b.degree()}, std::make_shared<ProductBackend>(vs, a, b));
}
inline PseudoExpectation product(const PseudoExpectation& a) { return product(a, a); }

// Procedure: marginal
inline PseudoExpectation marginal(const PseudoExpectation& pe, int copy) {
  if (pe.mode() != PEMode::Product) throw ParameterError("marginal of a single-copy pseudoexpectation");
  const auto& vs = pe.vars();
  if (const auto* d = pe.distribution()) {
    std::vector<WeightedPoint> pts;
    for (const auto& p : d->points()) pts.push_back({copy ? p.xp : p.x, {}, p.w});
    return from_distribution(vs, std::move(pts));
  }
  return PseudoExpectation(vs, PEMode::Single, {pe.degree(copy), 0}, std::make_shared<CopyMarginalBackend>(pe, copy));
}

struct ConditionOptions {
  double scale = 1.0;  // expected event scale; the floor is 1e-6 * scale
};

// Procedure: condition
inline PseudoExpectation condition(const PseudoExpectation& pe, const EventPoly& s, ConditionOptions opt = {}) {
  const double floor_cond = 1e-6 * opt.scale;
  const auto& vs = pe.vars();
  if (const auto* d = pe.distribution()) {
    std::vector<WeightedPoint> pts;
    double z = 0;
    for (const auto& p : d->points()) {
      const double w = p.w * s.eval(vs, p.x, pe.mode() == PEMode::Product ? &p.xp : nullptr);
      if (w < -1e-12) throw ParameterError("event evaluates negative");
      if (w > 0) { pts.push_back({p.x, p.xp, w}); z += w; }
    }
    if (z < floor_cond) throw NearZeroEvent("conditioning event has pseudo-probability below the floor");
    for (auto& p : pts) p.w /= z;
    return from_distribution(vs, std::move(pts));
  }
  if (!s.has_poly || s.truncated) throw DegreeExhausted("event is not a certified polynomial");
  auto sd = s.poly.degree(vs);
  std::array<int, 2> nd = pe.degrees();
  for (int c = 0; c < 2; ++c) {
    if (sd[c] == 0) continue;
    if (sd[c] > pe.degree(c) - 2) throw DegreeExhausted("conditioning event exceeds degree headroom");
    nd[c] = pe.degree(c) - sd[c];
    if (nd[c] % 2) --nd[c];
  }
  const double z = pe(s.poly);
  if (z < floor_cond) throw NearZeroEvent("conditioning event has pseudo-probability below the floor");
  return PseudoExpectation(vs, pe.mode(), nd, std::make_shared<ConditionedBackend>(pe, s.poly, z));
}

// Procedure: shift_symmetrize
inline PseudoExpectation shift_symmetrize(const PseudoExpectation& pe) {
  const auto& vs = pe.vars();
  if (const auto* d = pe.distribution()) {
    std::map<std::pair<Assignment, Assignment>, double> acc;
    for (const auto& p : d->points())
      for (int s = 0; s < vs.q; ++s)
        acc[{shift(p.x, s, vs.q), p.xp.empty() ? p.xp : shift(p.xp, s, vs.q)}] += p.w / vs.q;
    std::vector<WeightedPoint> pts;
    for (auto& [k, w] : acc) pts.push_back({k.first, k.second, w});
    return from_distribution(vs, std::move(pts));
  }
  return PseudoExpectation(vs, pe.mode(), pe.degrees(), std::make_shared<ShiftBackend>(pe));
}

// Procedure: pseudo_probability
inline double pseudo_probability(const PseudoExpectation& pe, const Poly& event, const Poly* given = nullptr,
                                 double floor = 1e-9) {
  if (!given) return pe(event);
  const double z = pe(*given);
  if (z < floor) throw NearZeroEvent("conditioning event has pseudo-probability below the floor");
  return pe(mul(event, *given, pe.vars())) / z;
}

// Procedure: z_moment
// E[prod Z_{u_i,s_i}] for a product-mode pseudoexpectation.
inline double z_moment(const PseudoExpectation& pe, const std::vector<std::pair<int, int>>& us) {
  if (pe.mode() != PEMode::Product) throw ParameterError("z_moment needs a product pseudoexpectation");
  Poly p = Poly::constant(1.0);
  for (auto [u, s] : us) p = mul(p, z_poly(pe.vars(), u, s), pe.vars());
  return pe(p);
}

struct ZIdentityReport {
  double booleanity = 0, partition = 0, crossing = 0;
  double worst() const { return std::max({booleanity, partition, crossing}); }
};

// Residuals of the shift-variable identities over all vertices, shifts and edges.
inline ZIdentityReport z_identities(const PseudoExpectation& pe, const UGInstance& inst) {
  const auto& vs = pe.vars();
  ZIdentityReport r;
  for (int u = 0; u < vs.n; ++u) {
    double tot = 0;
    for (int s = 0; s < vs.q; ++s) {
      auto z = z_poly(vs, u, s);
      const double ez = pe(z);
      r.booleanity = std::max(r.booleanity, std::abs(pe(mul(z, z, vs)) - ez));
      tot += ez;
    }
    r.partition = std::max(r.partition, std::abs(tot - 1));
  }
  if (pe.degree(0) >= 4 && pe.degree(1) >= 4) {
    for (int ei = 0; ei < static_cast<int>(inst.edges().size()); ++ei) {
      const auto& e = inst.edges()[ei];
      auto yy = mul(edge_poly(inst, vs, ei, 0), edge_poly(inst, vs, ei, 1), vs);
      for (int s = 0; s < vs.q; ++s)
        for (int t = 0; t < vs.q; ++t) {
          if (s == t) continue;
          auto p = mul(mul(z_poly(vs, e.u, s), z_poly(vs, e.v, t), vs), yy, vs);
          r.crossing = std::max(r.crossing, std::abs(pe(p)));
        }
    }
  }
  return r;
}

// ---- validation ----

struct ValidationReport {
  int degree = 0;
  double scaling = 0;
  double min_eig = 0;
  int psd_side = 0;
  double partition = 0;
  double marginal_min = 0;
  double marginal_sum = 0;
  double consistency = 0;  // table entries that disagree with the expansion of other entries
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
};

// Reduced monomials (labels 0..q-2 on distinct vertices) of degree <= k.
inline std::vector<Mono> reduced_monomials(const VarSpace& vs, int k, int copy = 0) {
  std::vector<Mono> out;
  out.push_back(Mono{});
  for (int d = 1; d <= k; ++d) {
    for_each_subset(vs.n, d, [&](const std::vector<int>& S) {
      std::vector<int> lab(d, 0);
      while (true) {
        Mono m;
        for (int i = 0; i < d; ++i) m.push(vs.id(copy, S[i], lab[i]));
        out.push_back(m);
        int i = 0;
        while (i < d && ++lab[i] == vs.q - 1) lab[i++] = 0;
        if (i == d) break;
      }
    });
  }
  return out;
}

struct ValidateOptions {
  double tol_psd = 1e-7;
  double tol = 1e-6;
  int check_degree = 4;  // used when the pseudoexpectation is exact at every degree
  int max_side = 2500;
  int partition_samples = 4000;
  std::uint64_t seed = 1;
};

// Procedure: validate
inline ValidationReport validate(const PseudoExpectation& pe, ValidateOptions opt = {}) {
  ValidationReport rep;
  if (pe.mode() == PEMode::Product) {
    // a product is valid iff both factors are; check the copy marginals and factorization on sampled pairs
    auto a = validate(marginal(pe, 0), opt), b = validate(marginal(pe, 1), opt);
    rep = a;
    rep.min_eig = std::min(a.min_eig, b.min_eig);
    rep.partition = std::max(a.partition, b.partition);
    rep.marginal_min = std::min(a.marginal_min, b.marginal_min);
    rep.marginal_sum = std::max(a.marginal_sum, b.marginal_sum);
    for (auto& f : b.failures) rep.failures.push_back("copy 1: " + f);
    return rep;
  }
  const auto& vs = pe.vars();
  const int D = std::min(pe.degree(), pe.degree() >= kExactDegree ? opt.check_degree : pe.degree());
  rep.degree = D;
  rep.scaling = std::abs(pe[Mono{}] - 1.0);
  if (rep.scaling > opt.tol) rep.failures.push_back("scaling");

  // PSD of the reduced moment matrix (equivalent to the full one modulo the program ideal)
  int half = D / 2;
  auto basis = reduced_monomials(vs, half);
  while (static_cast<int>(basis.size()) > opt.max_side && half > 1) basis = reduced_monomials(vs, --half);
  rep.psd_side = static_cast<int>(basis.size());
  Eigen::MatrixXd M(basis.size(), basis.size());
  Mono t;
  for (std::size_t i = 0; i < basis.size(); ++i)
    for (std::size_t j = i; j < basis.size(); ++j) {
      const double v = multiply(basis[i], basis[j], vs, t) ? pe[t] : 0.0;
      M(i, j) = M(j, i) = v;
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
  rep.min_eig = es.eigenvalues().minCoeff();
  if (rep.min_eig < -opt.tol_psd) rep.failures.push_back("psd");

  // partition: sum_a pE[m X_{u,a}] = pE[m]
  Rng rng(opt.seed);
  auto check_partition = [&](const Mono& m, int u) {
    double s = 0;
    Mono mm;
    for (int a = 0; a < vs.q; ++a) {
      Mono x;
      x.push(vs.id(0, u, a));
      if (multiply(m, x, vs, mm)) s += pe[mm];
    }
    rep.partition = std::max(rep.partition, std::abs(s - pe[m]));
  };
  for (int u = 0; u < vs.n; ++u) check_partition(Mono{}, u);
  if (D >= 2) {
    for (int it = 0; it < opt.partition_samples; ++it) {
      const int deg = 1 + static_cast<int>(uniform_below(rng, std::max(1, D - 1)));
      Mono m;
      for (int i = 0; i < deg; ++i) m.push(vs.id(0, uniform_below(rng, vs.n), uniform_below(rng, vs.q)));
      if (!canonical(m, vs) || m.size() > D - 1) continue;
      check_partition(m, static_cast<int>(uniform_below(rng, vs.n)));
    }
  }
  if (rep.partition > opt.tol) rep.failures.push_back("partition");

  // 2-variable local marginals
  rep.marginal_min = 1;
  if (D >= 2) {
    for (int u = 0; u < vs.n; ++u)
      for (int v = u + 1; v < vs.n; ++v) {
        double s = 0;
        for (int a = 0; a < vs.q; ++a)
          for (int b = 0; b < vs.q; ++b) {
            const double e = pe.xx(u, a, v, b);
            rep.marginal_min = std::min(rep.marginal_min, e);
            s += e;
          }
        rep.marginal_sum = std::max(rep.marginal_sum, std::abs(s - 1));
      }
  }
  if (rep.marginal_min < -1e-8) rep.failures.push_back("local marginal negative");
  if (rep.marginal_sum > opt.tol) rep.failures.push_back("local marginal sum");

  // table consistency: every stored entry must agree with its reduced-basis expansion
  if (const auto* ft = dynamic_cast<const FullTableBackend*>(&pe.backend())) {
    std::unordered_map<Mono, double, MonoHash> red;
    for (const auto& [m, v] : ft->table()) {
      bool reduced = true;
      for (auto x : m) reduced = reduced && vs.label(x) != vs.q - 1;
      if (reduced) red[m] = v;
    }
    for (const auto& [m, v] : ft->table()) {
      double s = 0;
      bool have = true;
      reduce_to_basis(m, vs, [&](const Mono& t, double c) {
        if (t.size() == 0) { s += c * pe[Mono{}]; return; }
        auto it = red.find(t);
        if (it == red.end()) have = false;
        else s += c * it->second;
      });
      if (have) rep.consistency = std::max(rep.consistency, std::abs(s - v));
    }
    if (rep.consistency > opt.tol) rep.failures.push_back("table consistency");
  }
  return rep;
}

// ---- serialization ----

inline nlohmann::json pe_to_json(const PseudoExpectation& pe, std::size_t full_limit = 200000) {
  if (pe.mode() != PEMode::Single) throw ParameterError("only single-copy tables are serialized");
  const auto& vs = pe.vars();
  const int D = std::min(pe.degree(), 8);
  nlohmann::json j;
  j["degree"] = D;
  j["n"] = vs.n;
  j["q"] = vs.q;
  j["mode"] = "single";
  std::uint64_t full_count = 0;
  for (int d = 0; d <= D; ++d) full_count += binom(vs.n, d) * ipow(vs.q, d);
  const bool full = full_count <= full_limit;
  j["basis"] = full ? "full" : "reduced";
  nlohmann::json mom = nlohmann::json::object();
  if (full) {
    for (int d = 0; d <= D; ++d)
      for_each_subset(vs.n, d, [&](const std::vector<int>& S) {
        std::vector<int> lab(d, 0);
        while (true) {
          Mono m;
          for (int i = 0; i < d; ++i) m.push(vs.id(0, S[i], lab[i]));
          mom[mono_key(m, vs)] = pe[m];
          int i = 0;
          while (i < d && ++lab[i] == vs.q) lab[i++] = 0;
          if (i == d) break;
        }
      });
  } else {
    for (const auto& m : reduced_monomials(vs, D)) mom[mono_key(m, vs)] = pe[m];
  }
  j["moments"] = mom;
  return j;
}

inline PseudoExpectation pe_from_json(const nlohmann::json& j) {
  if (j.value("mode", "single") != "single") throw ParameterError("only single-copy tables are supported");
  VarSpace vs{j.at("n").get<int>(), j.at("q").get<int>()};
  const int D = j.at("degree").get<int>();
  std::unordered_map<Mono, double, MonoHash> t;
  for (auto it = j.at("moments").begin(); it != j.at("moments").end(); ++it)
    t[parse_mono_key(it.key(), vs)] = it.value().get<double>();
  if (j.value("basis", "full") == "reduced") {
    t.erase(Mono{});
    return PseudoExpectation(vs, PEMode::Single, {D, 0}, std::make_shared<ReducedTableBackend>(vs, std::move(t)));
  }
  return PseudoExpectation(vs, PEMode::Single, {D, 0}, std::make_shared<FullTableBackend>(std::move(t)));
}

}  // namespace ughc
