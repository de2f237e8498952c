#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ughc/common.hpp"

namespace ughc {

// maximize c'y  s.t.  M(y) = F0 + sum_k y_k F_k >= 0  (one dense block whose
// entries are either a single variable, the constant 1 or the constant 0) and
// g0_j + a_j'y >= 0 for an optional LP block.
struct MomentSdp {
  int side = 0;
  int m = 0;
  std::vector<int> pos;  // side*side: variable index, kZero or kOne
  Eigen::VectorXd c;
  std::vector<double> g0;
  std::vector<std::vector<std::pair<int, double>>> a;

  static constexpr int kZero = -1;
  static constexpr int kOne = -2;

  Eigen::MatrixXd matrix(const Eigen::VectorXd& y) const {
    Eigen::MatrixXd M(side, side);
    for (int i = 0; i < side * side; ++i) {
      const int k = pos[i];
      M.data()[i] = k >= 0 ? y[k] : (k == kOne ? 1.0 : 0.0);
    }
    return M;
  }
  Eigen::VectorXd lp(const Eigen::VectorXd& y) const {
    Eigen::VectorXd s(g0.size());
    for (std::size_t j = 0; j < g0.size(); ++j) {
      double v = g0[j];
      for (auto [k, w] : a[j]) v += w * y[k];
      s[j] = v;
    }
    return s;
  }
};

struct SdpOptions {
  double tol_gap = 1e-9;
  double tol_feas = 1e-9;
  int max_iter = 120;
  double step_fraction = 0.95;
  bool verbose = false;
};

struct SdpResult {
  Eigen::VectorXd y;
  double primal_obj = 0, dual_obj = 0, gap = 0, pinf = 0, dinf = 0, min_eig = 0;
  int iterations = 0;
  bool converged = false;
  std::string status;
};

namespace detail {

// Largest alpha in (0, inf] keeping P + alpha dP >= 0, for P > 0.
inline double max_step(const Eigen::MatrixXd& P, const Eigen::MatrixXd& dP) {
  Eigen::LLT<Eigen::MatrixXd> llt(P);
  if (llt.info() != Eigen::Success) return 0.0;
  Eigen::MatrixXd W = llt.matrixL().solve(dP);
  Eigen::MatrixXd Wt = W.transpose();
  W = llt.matrixL().solve(Wt).transpose().eval();
  W = (0.5 * (W + W.transpose())).eval();
  const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(W, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  return lmin < 0 ? -1.0 / lmin : std::numeric_limits<double>::infinity();
}

inline double max_step(const Eigen::VectorXd& p, const Eigen::VectorXd& dp) {
  double a = std::numeric_limits<double>::infinity();
  for (int i = 0; i < p.size(); ++i)
    if (dp[i] < 0) a = std::min(a, -p[i] / dp[i]);
  return a;
}

}  // namespace detail

// Procedure: solve_sdp
// Infeasible-start primal-dual interior point with the HKM direction and a
// Mehrotra predictor-corrector. Standard form: C = F0, A_k = -F_k, b = c.
inline SdpResult solve_sdp(const MomentSdp& P, const Eigen::VectorXd& y0, SdpOptions opt = {}) {
  const int n = P.side, m = P.m, nl = static_cast<int>(P.g0.size());
  std::vector<std::vector<int>> where(m);
  for (int i = 0; i < n * n; ++i)
    if (P.pos[i] >= 0) where[P.pos[i]].push_back(i);
  for (int k = 0; k < m; ++k)
    if (where[k].empty()) throw SolverError("variable absent from the moment matrix");

  // A(X, x)_k = -sum_{pos=k} X - sum_j a_jk x_j
  auto A = [&](const Eigen::MatrixXd& X, const Eigen::VectorXd& x) {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(m);
    for (int k = 0; k < m; ++k) {
      double s = 0;
      for (int i : where[k]) s += X.data()[i];
      r[k] = -s;
    }
    for (int j = 0; j < nl; ++j)
      for (auto [k, w] : P.a[j]) r[k] -= w * x[j];
    return r;
  };
  auto Fdy = [&](const Eigen::VectorXd& dy) {  // sum_k dy_k F_k
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n * n; ++i)
      if (P.pos[i] >= 0) M.data()[i] = dy[P.pos[i]];
    return M;
  };
  auto ady = [&](const Eigen::VectorXd& dy) {
    Eigen::VectorXd r(nl);
    for (int j = 0; j < nl; ++j) {
      double s = 0;
      for (auto [k, w] : P.a[j]) s += w * dy[k];
      r[j] = s;
    }
    return r;
  };

  SdpResult res;
  Eigen::VectorXd y = y0;
  Eigen::MatrixXd S = P.matrix(y);
  Eigen::VectorXd s = P.lp(y);
  if (Eigen::LLT<Eigen::MatrixXd>(S).info() != Eigen::Success) throw SolverError("initial point not interior");
  for (int j = 0; j < nl; ++j)
    if (s[j] <= 0) throw SolverError("initial LP slack not interior");
  Eigen::MatrixXd X = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd x = Eigen::VectorXd::Ones(nl);
  const double bnorm = 1.0 + P.c.norm();
  const int dim = n + nl;
  int stalled = 0;
  double last_mu = std::numeric_limits<double>::infinity();

  for (int it = 0; it < opt.max_iter; ++it) {
    res.iterations = it;
    const Eigen::VectorXd rp = P.c - A(X, x);
    const Eigen::MatrixXd Rd = P.matrix(y) - S;
    const Eigen::VectorXd rd = P.lp(y) - s;
    const double xs = (X.cwiseProduct(S)).sum() + x.dot(s);
    const double mu = xs / dim;
    res.primal_obj = X(0, 0);
    for (int j = 0; j < nl; ++j) res.primal_obj += P.g0[j] * x[j];
    res.dual_obj = P.c.dot(y);
    res.gap = std::abs(res.primal_obj - res.dual_obj) / (1 + std::abs(res.primal_obj) + std::abs(res.dual_obj));
    res.pinf = rp.norm() / bnorm;
    res.dinf = (Rd.norm() + rd.norm()) / 2.0;
    if (opt.verbose)
      std::fprintf(stderr, "it %d pobj %.9g dobj %.9g gap %.2e pinf %.2e dinf %.2e mu %.2e\n", it, res.primal_obj,
                   res.dual_obj, res.gap, res.pinf, res.dinf, mu);
    if (res.gap < opt.tol_gap && res.pinf < opt.tol_feas && res.dinf < opt.tol_feas) {
      res.converged = true;
      res.status = "optimal";
      break;
    }
    // numerical stagnation near the optimum: accept a slightly looser certificate
    stalled = (mu > 0.5 * last_mu) ? stalled + 1 : 0;
    last_mu = mu;
    if (stalled >= 5 && res.gap < 1e-6 && res.pinf < 1e-6 && res.dinf < opt.tol_feas) {
      res.converged = true;
      res.status = "optimal (stagnated)";
      break;
    }

    Eigen::LLT<Eigen::MatrixXd> Sllt(S);
    Eigen::MatrixXd Sinv = Sllt.solve(Eigen::MatrixXd::Identity(n, n));
    Sinv = (0.5 * (Sinv + Sinv.transpose())).eval();

    // Schur complement H_kl = tr(F_k X F_l Sinv) + sum_j a_jk a_jl x_j / s_j
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m, m);
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q) {
        const int k = P.pos[p * n + q];
        if (k < 0) continue;
        double* Hk = H.data() + static_cast<std::ptrdiff_t>(k) * m;  // column k (symmetric)
        for (int r = 0; r < n; ++r) {
          const double xqr = X(q, r);
          if (xqr == 0) continue;
          const int* pr = P.pos.data() + static_cast<std::ptrdiff_t>(r) * n;
          for (int c = 0; c < n; ++c) {
            const int l = pr[c];
            if (l >= 0) Hk[l] += xqr * Sinv(c, p);
          }
        }
      }
    for (int j = 0; j < nl; ++j) {
      const double d = x[j] / s[j];
      for (auto [k, wk] : P.a[j])
        for (auto [l, wl] : P.a[j]) H(k, l) += d * wk * wl;
    }
    H = (0.5 * (H + H.transpose())).eval();
    Eigen::LLT<Eigen::MatrixXd> Hllt(H);
    if (Hllt.info() != Eigen::Success) {
      H.diagonal().array() += 1e-12 * (1 + H.diagonal().cwiseAbs().maxCoeff());
      Hllt.compute(H);
      if (Hllt.info() != Eigen::Success) {
        res.status = "schur complement not positive definite";
        break;
      }
    }
    const Eigen::VectorXd base_rhs = rp + A(X * Rd * Sinv, Eigen::VectorXd::Zero(nl)) - [&] {
      Eigen::VectorXd t = Eigen::VectorXd::Zero(m);
      for (int j = 0; j < nl; ++j)
        for (auto [k, w] : P.a[j]) t[k] += w * x[j] * rd[j] / s[j];
      return t;
    }();

    struct Dir {
      Eigen::MatrixXd dX, dS;
      Eigen::VectorXd dx, ds, dy;
    };
    auto direction = [&](const Eigen::MatrixXd& Pm, const Eigen::VectorXd& plp) {
      Dir d;
      Eigen::VectorXd rhs = base_rhs - A(Pm, Eigen::VectorXd::Zero(nl));
      for (int j = 0; j < nl; ++j)
        for (auto [k, w] : P.a[j]) rhs[k] += w * plp[j];
      d.dy = Hllt.solve(rhs);
      d.dS = Rd + Fdy(d.dy);
      d.dX = Pm - X * d.dS * Sinv;
      d.dX = (0.5 * (d.dX + d.dX.transpose())).eval();
      d.ds = rd + ady(d.dy);
      d.dx = plp - (x.array() * d.ds.array() / s.array()).matrix();
      return d;
    };

    // predictor
    Dir pr = direction(-X, -x);
    const double ap = std::min(1.0, detail::max_step(X, pr.dX) * 1.0);
    const double ap2 = std::min(ap, detail::max_step(x, pr.dx));
    const double ad = std::min({1.0, detail::max_step(S, pr.dS), detail::max_step(s, pr.ds)});
    const double mu_aff = (((X + ap2 * pr.dX).cwiseProduct(S + ad * pr.dS)).sum() +
                           (x + ap2 * pr.dx).dot(s + ad * pr.ds)) / dim;
    const double sigma = std::clamp(std::pow(mu_aff / mu, 3), 0.0, 1.0);

    // corrector
    Eigen::MatrixXd Pm = sigma * mu * Sinv - X - pr.dX * pr.dS * Sinv;
    Eigen::VectorXd plp(nl);
    for (int j = 0; j < nl; ++j) plp[j] = (sigma * mu - pr.dx[j] * pr.ds[j]) / s[j] - x[j];
    Dir co = direction(Pm, plp);
    const double gp = std::min({1.0, opt.step_fraction * detail::max_step(X, co.dX),
                                opt.step_fraction * detail::max_step(x, co.dx)});
    const double gd = std::min({1.0, opt.step_fraction * detail::max_step(S, co.dS),
                                opt.step_fraction * detail::max_step(s, co.ds)});
    if (gp < 1e-12 && gd < 1e-12) {
      res.status = "stalled";
      break;
    }
    X += gp * co.dX;
    x += gp * co.dx;
    y += gd * co.dy;
    S += gd * co.dS;
    s += gd * co.ds;
    // keep the dual slack exactly on the affine map once feasible
    if (Rd.norm() < 1e-12) S = P.matrix(y);
    if (rd.norm() < 1e-12 && nl) s = P.lp(y);
  }
  if (!res.converged && res.status.empty()) res.status = "iteration limit";
  res.y = y;
  res.min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(P.matrix(y), Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  return res;
}

}  // namespace ughc
