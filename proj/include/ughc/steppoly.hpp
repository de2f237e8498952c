#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ughc/common.hpp"
#include "ughc/poly.hpp"
#include "ughc/ug_core.hpp"

namespace ughc {

// Polynomial approximation of 1[x >= beta] on [0,1], stored as a shifted
// Chebyshev series in t = 2x - 1.
class StepPoly {
 public:
  double beta = 0.5, nu = 0.1;
  std::vector<double> cheb;  // coefficients of T_k(2x-1)
  // construction metadata
  double degree_constant = 4.0;
  int degree_cap = 0;
  int attempts = 0;
  double fit_residual = 0;  // max |fit - profile| on the grid before the squeeze
  double log10_max_monomial_coef = 0;

  int degree() const { return static_cast<int>(cheb.size()) - 1; }

  double operator()(double x) const {
    // Clenshaw
    const double t = 2 * x - 1;
    double b1 = 0, b2 = 0;
    for (int k = degree(); k >= 1; --k) {
      const double b0 = cheb[k] + 2 * t * b1 - b2;
      b2 = b1;
      b1 = b0;
    }
    return cheb[0] + t * b1 - b2;
  }
  double complement(double x) const { return 1.0 - (*this)(x); }

  // Coefficients in the monomial basis of x, in long double (grow like 4^d).
  std::vector<long double> monomial() const {
    const int d = degree();
    std::vector<long double> out(d + 1, 0.0L), tkm1(d + 1, 0.0L), tk(d + 1, 0.0L), tkp1(d + 1, 0.0L);
    tkm1[0] = 1;           // T*_0 = 1
    tk[0] = -1; tk[1] = 2;  // T*_1 = 2x - 1
    out[0] += cheb[0];
    if (d >= 1) for (int i = 0; i <= 1; ++i) out[i] += cheb[1] * tk[i];
    for (int k = 1; k < d; ++k) {
      // T*_{k+1} = 2(2x-1) T*_k - T*_{k-1}
      std::fill(tkp1.begin(), tkp1.end(), 0.0L);
      for (int i = 0; i <= k; ++i) {
        tkp1[i + 1] += 4 * tk[i];
        tkp1[i] -= 2 * tk[i];
      }
      for (int i = 0; i <= k + 1; ++i) tkp1[i] -= tkm1[i];
      for (int i = 0; i <= k + 1; ++i) out[i] += cheb[k + 1] * tkp1[i];
      tkm1.swap(tk);
      tk.swap(tkp1);
    }
    return out;
  }
};

inline std::vector<double> verification_grid(int degree, int uniform_points = 10000) {
  std::vector<double> g;
  g.reserve(uniform_points + 2 * degree + 8);
  for (int i = 0; i <= uniform_points; ++i) g.push_back(static_cast<double>(i) / uniform_points);
  const int m = std::max(2 * degree + 2, 64);
  for (int k = 0; k < m; ++k) g.push_back(0.5 * (1 + std::cos(M_PI * (k + 0.5) / m)));
  std::sort(g.begin(), g.end());
  return g;
}

struct StepPolyReport {
  double range_slack = 0;      // min over grid of min(p, 1-p)
  double low_side_slack = 0;   // min over [0,beta] of nu - p
  double high_side_slack = 0;  // min over [beta+nu,1] of p - (1-nu)
  double monotone_slack = 0;   // min increment on the transition window
  double markov_lower = 0;     // min of p - (1 - (1-x)/(1-beta-nu) - nu)
  double markov_upper = 0;     // min of x/(beta-nu) + nu - p
  double composition = 0;      // min of p + beta + 3nu - x
  double mirrored = 0;         // complement meets the < beta properties
  int points = 0;
  bool ok(double tol = 1e-9) const {
    return std::min({range_slack, low_side_slack, high_side_slack, monotone_slack, markov_lower, markov_upper,
                     composition, mirrored}) >= -tol;
  }
};

// The transition interval is closed on the left: p(beta) <= nu is required
// together with p(beta+nu) >= 1-nu.
inline StepPolyReport check_step(const StepPoly& p, int uniform_points = 10000) {
  StepPolyReport r;
  const double b = p.beta, nu = p.nu;
  auto g = verification_grid(p.degree(), uniform_points);
  g.push_back(b);
  g.push_back(b + nu);
  std::sort(g.begin(), g.end());
  r.range_slack = r.low_side_slack = r.high_side_slack = r.monotone_slack = 1e300;
  r.markov_lower = r.markov_upper = r.composition = r.mirrored = 1e300;
  double prev_x = -1, prev_v = 0;
  for (double x : g) {
    const double v = p(x);
    r.range_slack = std::min({r.range_slack, v, 1 - v});
    if (x <= b) r.low_side_slack = std::min(r.low_side_slack, nu - v);
    if (x >= b + nu) r.high_side_slack = std::min(r.high_side_slack, v - (1 - nu));
    if (x > b && x < b + nu && prev_x > b) r.monotone_slack = std::min(r.monotone_slack, v - prev_v);
    r.markov_lower = std::min(r.markov_lower, v - (1 - (1 - x) / (1 - b - nu) - nu));
    r.markov_upper = std::min(r.markov_upper, x / (b - nu) + nu - v);
    r.composition = std::min(r.composition, v + b + 3 * nu - x);
    const double c = 1 - v;
    if (x <= b) r.mirrored = std::min(r.mirrored, c - (1 - nu));
    if (x >= b + nu) r.mirrored = std::min(r.mirrored, nu - c);
    prev_x = x;
    prev_v = v;
  }
  if (r.monotone_slack > 1e299) r.monotone_slack = 0;
  r.points = static_cast<int>(g.size());
  return r;
}

// Procedure: build_step_poly
inline StepPoly build_step_poly(double beta, double nu, double C = 4.0) {
  if (!(nu > 0 && nu < beta && beta < 1 && beta + nu < 1)) throw ParameterError("need 0 < nu < beta < 1, beta + nu < 1");
  const double L = std::log(1.0 / nu);
  const int cap = static_cast<int>(std::ceil(C * L * L / nu));
  const double c = beta + nu / 2, w = nu / 4;
  auto profile = [&](double x) { return 0.5 * (1 + std::erf((x - c) / w)); };

  int d = 8, attempts = 0;
  while (true) {
    ++attempts;
    const int m = 4 * d + 64;
    Eigen::MatrixXd V(m, d + 1);
    Eigen::VectorXd y(m);
    for (int i = 0; i < m; ++i) {
      const double t = std::cos(M_PI * (i + 0.5) / m);
      const double x = 0.5 * (1 + t);
      V(i, 0) = 1;
      if (d >= 1) V(i, 1) = t;
      for (int k = 2; k <= d; ++k) V(i, k) = 2 * t * V(i, k - 1) - V(i, k - 2);
      y(i) = profile(x);
    }
    Eigen::VectorXd coef = V.colPivHouseholderQr().solve(y);

    StepPoly p;
    p.beta = beta;
    p.nu = nu;
    p.degree_constant = C;
    p.degree_cap = cap;
    p.cheb.assign(coef.data(), coef.data() + coef.size());
    double res = 0;
    for (double x : verification_grid(d, 2000)) res = std::max(res, std::abs(p(x) - profile(x)));
    // affine squeeze into [nu/2, 1 - nu/2]
    for (auto& a : p.cheb) a *= (1 - nu);
    p.cheb[0] += nu / 2;
    p.fit_residual = res;
    p.attempts = attempts;
    if (check_step(p).ok()) {
      long double mx = 0;
      for (auto a : p.monomial()) mx = std::max(mx, std::fabs(a));
      p.log10_max_monomial_coef = static_cast<double>(std::log10(std::max(mx, 1e-300L)));
      return p;
    }
    if (d >= cap) throw SolverError("step polynomial verification failed up to the degree cap");
    d = std::min(cap, d + std::max(4, d / 4));
  }
}

enum class ValMode { Single, Restricted, Both };

// Local vertex set of val_u: u and its (masked) neighbours.
inline std::vector<int> local_vertices(const UGInstance& inst, int u, const std::vector<char>* mask) {
  std::vector<int> L{u};
  for (int ei : inst.incident(u)) {
    int v = inst.other(ei, u);
    if (mask && !((*mask)[u] && (*mask)[v])) continue;
    L.push_back(v);
  }
  std::sort(L.begin(), L.end());
  L.erase(std::unique(L.begin(), L.end()), L.end());
  return L;
}

// Expands a function of the labels of the given (copy, vertex) slots into the
// reduced basis (labels 0..q-2; label q-1 is the absence of all others).
inline Poly expand_local_function(const VarSpace& vs, const std::vector<std::pair<int, int>>& slots,
                                  const std::function<double(const std::vector<int>&)>& f) {
  const int k = static_cast<int>(slots.size()), q = vs.q;
  const std::uint64_t N = ipow(q, k);
  if (N > (1u << 22)) throw BudgetExceeded("local expansion too large");
  std::vector<double> c(N);
  std::vector<int> lab(k);
  for (std::uint64_t code = 0; code < N; ++code) {
    std::uint64_t z = code;
    for (int i = 0; i < k; ++i) { lab[i] = static_cast<int>(z % q); z /= q; }
    c[code] = f(lab);
  }
  // per-axis transform: c[a] -= c[q-1] for a < q-1
  std::uint64_t stride = 1;
  for (int i = 0; i < k; ++i, stride *= q) {
    for (std::uint64_t code = 0; code < N; ++code) {
      const int a = static_cast<int>((code / stride) % q);
      if (a == q - 1) continue;
      c[code] -= c[code + static_cast<std::uint64_t>(q - 1 - a) * stride];
    }
  }
  Poly p;
  for (std::uint64_t code = 0; code < N; ++code) {
    if (std::abs(c[code]) < 1e-15) continue;
    std::uint64_t z = code;
    Mono m;
    for (int i = 0; i < k; ++i) {
      const int a = static_cast<int>(z % q);
      z /= q;
      if (a != q - 1) m.push(vs.id(slots[i].first, slots[i].second, a));
    }
    canonical(m, vs);
    p.terms.push_back({m, c[code]});
  }
  p.normalize();
  return p;
}

// Procedure: compose_val
// Event p(val_u(.)) in the requested mode. budget[c] is the degree available
// in copy c; when the exact expansion does not fit, the polynomial is the
// degree-1 surrogate (v - beta + nu)/(2nu) in v = val_u and the pointwise
// evaluator applies the same surrogate clipped to [0,1].
inline EventPoly compose_val(const StepPoly& p, const UGInstance& inst, const VarSpace& vs, int u, ValMode mode,
                             std::array<int, 2> budget, const std::vector<char>* mask = nullptr) {
  if (mode == ValMode::Restricted && !mask) throw ParameterError("restricted mode needs a mask");
  const std::vector<char>* mk = mode == ValMode::Restricted ? mask : nullptr;
  auto L = local_vertices(inst, u, mk);
  const int k = static_cast<int>(L.size());
  auto v_of = [&inst, u, mk, mode](const Assignment& x, const Assignment* xp) {
    if (mode == ValMode::Both) return vertex_value_and(inst, x, *xp, u, mk);
    return vertex_value(inst, x, u, mk);
  };

  EventPoly ev;
  const bool both = mode == ValMode::Both;
  const int need0 = k, need1 = both ? k : 0;
  const bool fits = need0 <= budget[0] && need1 <= budget[1] && ipow(vs.q, both ? 2 * k : k) <= (1u << 20);
  if (fits) {
    std::vector<std::pair<int, int>> slots;
    for (int v : L) slots.push_back({0, v});
    if (both) for (int v : L) slots.push_back({1, v});
    Assignment x(vs.n, 0), xp(vs.n, 0);
    ev.poly = expand_local_function(vs, slots, [&](const std::vector<int>& lab) {
      for (int i = 0; i < k; ++i) x[L[i]] = lab[i];
      if (both) for (int i = 0; i < k; ++i) xp[L[i]] = lab[k + i];
      return p(v_of(x, &xp));
    });
    ev.provenance = "step polynomial of a vertex value, exact local expansion";
    ev.exact = [p, v_of](const Assignment& a, const Assignment* b) { return p(v_of(a, b)); };
    return ev;
  }
  if (budget[0] < 2 || (both && budget[1] < 2)) throw DegreeExhausted("no room for the vertex-value surrogate");
  const double b = p.beta, nu = p.nu;
  Poly val;
  if (both) {
    double den = 0;
    std::vector<int> used;
    for (int ei : inst.incident(u)) {
      int v = inst.other(ei, u);
      if (mk && !((*mk)[u] && (*mk)[v])) continue;
      used.push_back(ei);
      den += inst.uniform() ? 1.0 : inst.edges()[ei].w;
    }
    for (int ei : used) {
      const double w = (inst.uniform() ? 1.0 : inst.edges()[ei].w) / den;
      for (auto& t : mul(edge_poly(inst, vs, ei, 0), edge_poly(inst, vs, ei, 1), vs).terms)
        val.terms.push_back({t.first, w * t.second});
    }
    val.normalize();
  } else {
    val = vertex_val_poly(inst, vs, u, 0, mk);
  }
  ev.poly = (1.0 / (2 * nu)) * (val + Poly::constant(nu - b));
  ev.truncated = true;
  ev.provenance = "degree-1 surrogate of a step polynomial (not sign-certified)";
  ev.exact = [b, nu, v_of](const Assignment& a, const Assignment* c) {
    return std::clamp((v_of(a, c) - b + nu) / (2 * nu), 0.0, 1.0);
  };
  return ev;
}

}  // namespace ughc
