#pragma once

#include <chrono>
#include <string>
#include <unordered_map>
#include <vector>

#include "ughc/pe.hpp"
#include "ughc/poly.hpp"
#include "ughc/sdp.hpp"
#include "ughc/ug_core.hpp"

namespace ughc {

struct RelaxOptions {
  bool pair_lp = true;              // add E[X_{u,a} X_{v,b}] >= 0 rows at D = 2
  std::size_t max_moments = 4000;   // Schur complement is dense m x m
  int max_side = 400;               // Schur assembly costs side^4
};

// The degree-D program in the reduced basis: labels 0..q-2 on distinct
// vertices; label q-1 is implied by the partition constraint, so Booleanity,
// annihilation and partition all hold by construction.
struct Relaxation {
  VarSpace vs;
  int degree = 2;
  std::vector<Mono> basis;  // rows of the moment matrix
  std::vector<Mono> vars;   // y index -> monomial
  std::unordered_map<Mono, int, MonoHash> index;
  MomentSdp sdp;
  double c0 = 0;            // constant part of the objective
  Poly objective;           // val_I(X) in the full basis
};

// Linear form of a full-basis single-copy polynomial over the y variables.
inline double linear_form(const Poly& p, const Relaxation& R, std::vector<std::pair<int, double>>& out) {
  double c0 = 0;
  std::unordered_map<int, double> acc;
  for (const auto& [m, c] : p.terms)
    reduce_to_basis(m, R.vs, [&](const Mono& t, double s) {
      if (t.size() == 0) { c0 += c * s; return; }
      auto it = R.index.find(t);
      if (it == R.index.end()) throw DegreeExhausted("polynomial exceeds the relaxation degree");
      acc[it->second] += c * s;
    });
  out.assign(acc.begin(), acc.end());
  std::sort(out.begin(), out.end());
  return c0;
}

// Procedure: relax
inline Relaxation relax(const UGInstance& inst, int D, RelaxOptions opt = {}) {
  if (D < 2 || D % 2) throw ParameterError("degree must be even and >= 2");
  Relaxation R;
  R.vs = VarSpace{inst.vertex_count(), inst.q()};
  R.degree = D;
  std::uint64_t moments = 0, side = 0;
  for (int d = 1; d <= D; ++d) moments += binom(R.vs.n, d) * ipow(R.vs.q - 1, d);
  for (int d = 0; d <= D / 2; ++d) side += binom(R.vs.n, d) * ipow(R.vs.q - 1, d);
  if (moments > opt.max_moments || side > static_cast<std::uint64_t>(opt.max_side))
    throw BudgetExceeded("relaxation of degree " + std::to_string(D) + " needs " + std::to_string(moments) +
                         " moments and side " + std::to_string(side));

  R.basis = reduced_monomials(R.vs, D / 2);
  for (const auto& m : reduced_monomials(R.vs, D)) {
    if (m.size() == 0) continue;
    R.index.emplace(m, static_cast<int>(R.vars.size()));
    R.vars.push_back(m);
  }
  const int n = static_cast<int>(R.basis.size());
  R.sdp.side = n;
  R.sdp.m = static_cast<int>(R.vars.size());
  R.sdp.pos.assign(static_cast<std::size_t>(n) * n, MomentSdp::kZero);
  Mono t;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      int& p = R.sdp.pos[static_cast<std::size_t>(i) * n + j];
      if (!multiply(R.basis[i], R.basis[j], R.vs, t)) p = MomentSdp::kZero;
      else if (t.size() == 0) p = MomentSdp::kOne;
      else p = R.index.at(t);
    }

  R.objective = val_poly(inst, R.vs, 0);
  std::vector<std::pair<int, double>> lf;
  R.c0 = linear_form(R.objective, R, lf);
  R.sdp.c = Eigen::VectorXd::Zero(R.sdp.m);
  for (auto [k, w] : lf) R.sdp.c[k] = w;

  if (D == 2 && opt.pair_lp) {
    for (int u = 0; u < R.vs.n; ++u)
      for (int v = u + 1; v < R.vs.n; ++v)
        for (int a = 0; a < R.vs.q; ++a)
          for (int b = 0; b < R.vs.q; ++b) {
            Poly p = mul(x_var(R.vs, 0, u, a), x_var(R.vs, 0, v, b), R.vs);
            std::vector<std::pair<int, double>> row;
            const double g = linear_form(p, R, row);
            R.sdp.g0.push_back(g);
            R.sdp.a.push_back(row);
          }
  }
  return R;
}

struct SolveInfo {
  SdpResult sdp;
  double objective = 0;
  int degree = 0;
  double seconds = 0;
};

// Procedure: solve
inline std::pair<PseudoExpectation, SolveInfo> solve(const Relaxation& R, SdpOptions opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  Eigen::VectorXd y0(R.sdp.m);
  for (int k = 0; k < R.sdp.m; ++k) y0[k] = std::pow(1.0 / R.vs.q, R.vars[k].size());
  SolveInfo info;
  info.sdp = solve_sdp(R.sdp, y0, opt);
  if (!info.sdp.converged)
    throw SolverError("SDP did not converge: " + info.sdp.status);
  std::unordered_map<Mono, double, MonoHash> tab;
  for (int k = 0; k < R.sdp.m; ++k) tab.emplace(R.vars[k], info.sdp.y[k]);
  PseudoExpectation pe(R.vs, PEMode::Single, {R.degree, 0}, std::make_shared<ReducedTableBackend>(R.vs, std::move(tab)));
  info.objective = R.c0 + R.sdp.c.dot(info.sdp.y);
  info.degree = R.degree;
  info.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {pe, info};
}

}  // namespace ughc
