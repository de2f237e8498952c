#pragma once

#include <algorithm>
#include <array>
#include <complex>
#include <map>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "ughc/common.hpp"
#include "ughc/johnson.hpp"

namespace ughc {

using cplx = std::complex<double>;

// Functions on [n]^l are dense arrays; the first coordinate is most significant,
// so fixing a prefix selects a contiguous block.
struct CayleyDomain {
  static constexpr std::uint64_t kMaxSize = 1000000;
  int n = 2, l = 1, t = 1;
  std::size_t N = 2;

  CayleyDomain() = default;
  CayleyDomain(int n_, int l_, int t_) : n(n_), l(l_), t(t_) {
    if (n < 2 || l < 0) throw ParameterError("need n >= 2, l >= 0");
    if (t < 0 || t > l) throw ParameterError("need 0 <= t <= l");
    double sz = std::pow(static_cast<double>(n), l);
    if (sz > static_cast<double>(kMaxSize)) throw BudgetExceeded("Cayley domain too large");
    N = static_cast<std::size_t>(ipow(n, l));
  }
  double alpha() const { return l ? static_cast<double>(t) / l : 0.0; }

  std::vector<int> decode(std::size_t idx) const {
    std::vector<int> x(l);
    for (int k = l - 1; k >= 0; --k) { x[k] = static_cast<int>(idx % n); idx /= n; }
    return x;
  }
  std::size_t encode(const std::vector<int>& x) const {
    std::size_t idx = 0;
    for (int k = 0; k < l; ++k) idx = idx * n + x[k];
    return idx;
  }
  CayleyDomain sub(int len) const { return CayleyDomain(n, len, std::min(t, len)); }
};

inline int hamming(const std::vector<int>& a, const std::vector<int>& b) {
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

// Procedure: eigenvalue
inline double eigenvalue(int l, int t, int d) {
  if (d < 0 || d > l) throw ParameterError("degree out of range");
  if (d > l - t) return 0.0;
  return binomd(l - d, l - t - d) / binomd(l, l - t);
}
inline double eigenvalue(const CayleyDomain& dom, int d) { return eigenvalue(dom.l, dom.t, d); }

// Walk probability x -> z: pick a uniform t-subset B, re-randomize those coordinates.
inline double transition_entry(const CayleyDomain& dom, int dist) {
  if (dist > dom.t) return 0.0;
  return binomd(dom.l - dist, dom.t - dist) / binomd(dom.l, dom.t) * std::pow(static_cast<double>(dom.n), -dom.t);
}

inline Eigen::MatrixXd transition_matrix(const CayleyDomain& dom) {
  if (dom.N > 4000) throw BudgetExceeded("explicit transition matrix too large");
  Eigen::MatrixXd T(dom.N, dom.N);
  std::vector<std::vector<int>> pts(dom.N);
  for (std::size_t i = 0; i < dom.N; ++i) pts[i] = dom.decode(i);
  for (std::size_t i = 0; i < dom.N; ++i)
    for (std::size_t j = 0; j < dom.N; ++j) T(i, j) = transition_entry(dom, hamming(pts[i], pts[j]));
  return T;
}

// Distance-class quotient of the walk, entries summed from explicit rows.
inline Eigen::MatrixXd distance_quotient(const CayleyDomain& dom) {
  const int L = dom.l;
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(L + 1, L + 1);
  std::vector<double> entry(L + 1);
  for (int d = 0; d <= L; ++d) entry[d] = transition_entry(dom, d);
  std::vector<int> z(L, 0);
  for (std::size_t idx = 0; idx < dom.N; ++idx) {
    int w = 0;  // distance of z from 0
    for (int k = 0; k < L; ++k) w += z[k] != 0;
    // representative of class i: first i coordinates 1, rest 0
    int mism_tail = w;  // count of nonzero coordinates in z beyond prefix
    for (int i = 0; i <= L; ++i) {
      if (i > 0) {
        mism_tail -= z[i - 1] != 0;
      }
      int dprefix = 0;
      for (int k = 0; k < i; ++k) dprefix += z[k] != 1;
      Q(i, w) += entry[dprefix + mism_tail];
    }
    for (int k = L - 1; k >= 0; --k) {
      if (++z[k] < dom.n) break;
      z[k] = 0;
    }
  }
  return Q;
}

// Procedure: apply_walk
// Average over t-subsets B of the conditional expectation that forgets coordinates B.
inline std::vector<double> apply_walk(const CayleyDomain& dom, const std::vector<double>& F) {
  std::vector<double> out(dom.N, 0.0);
  const double w = 1.0 / binomd(dom.l, dom.t);
  for_each_subset(dom.l, dom.t, [&](const std::vector<int>& B) {
    std::vector<double> G = F;
    for (int k : B) {
      const std::size_t stride = ipow(dom.n, dom.l - 1 - k);
      const std::size_t block = stride * dom.n;
      for (std::size_t base = 0; base < dom.N; base += block)
        for (std::size_t off = 0; off < stride; ++off) {
          double s = 0;
          for (int a = 0; a < dom.n; ++a) s += G[base + off + a * stride];
          s /= dom.n;
          for (int a = 0; a < dom.n; ++a) G[base + off + a * stride] = s;
        }
    }
    for (std::size_t i = 0; i < dom.N; ++i) out[i] += w * G[i];
  });
  return out;
}

// Procedure: character
inline std::vector<cplx> character(const CayleyDomain& dom, const std::vector<int>& T) {
  std::vector<cplx> c(dom.N);
  for (std::size_t i = 0; i < dom.N; ++i) {
    auto x = dom.decode(i);
    long s = 0;
    for (int k = 0; k < dom.l; ++k) s += static_cast<long>(T[k]) * x[k];
    c[i] = std::polar(1.0, 2 * M_PI * static_cast<double>(mod(s, dom.n)) / dom.n);
  }
  return c;
}

// Per-axis DFT. forward: F^(chi) = E_x F(x) conj(chi(x)); inverse: F(x) = sum chi F^(chi) chi(x).
inline std::vector<cplx> dft(const CayleyDomain& dom, std::vector<cplx> a, bool inverse) {
  const int n = dom.n;
  std::vector<cplx> w(n);
  for (int k = 0; k < n; ++k) w[k] = std::polar(1.0, (inverse ? 2 : -2) * M_PI * k / n);
  std::vector<cplx> tmp(n);
  for (int ax = 0; ax < dom.l; ++ax) {
    const std::size_t stride = ipow(n, dom.l - 1 - ax);
    const std::size_t block = stride * n;
    for (std::size_t base = 0; base < dom.N; base += block)
      for (std::size_t off = 0; off < stride; ++off) {
        for (int c = 0; c < n; ++c) {
          cplx s = 0;
          for (int x = 0; x < n; ++x) s += a[base + off + x * stride] * w[(static_cast<long>(c) * x) % n];
          tmp[c] = inverse ? s : s / static_cast<double>(n);
        }
        for (int c = 0; c < n; ++c) a[base + off + c * stride] = tmp[c];
      }
  }
  return a;
}

inline int char_degree(const CayleyDomain& dom, std::size_t idx) {
  int d = 0;
  for (int k = 0; k < dom.l; ++k) { d += (idx % dom.n) != 0; idx /= dom.n; }
  return d;
}

struct LevelDecomposition {
  CayleyDomain dom;
  std::vector<cplx> coeff;                 // Fourier coefficients
  std::vector<std::vector<double>> level;  // F_0..F_l
  std::vector<double> eta;                 // E[F_i^2]
  double max_imag = 0;
  double reconstruction_residual = 0;
};

// Procedure: level_decompose
inline LevelDecomposition level_decompose(const CayleyDomain& dom, const std::vector<double>& F) {
  if (F.size() != dom.N) throw ParameterError("function size mismatch");
  LevelDecomposition dec;
  dec.dom = dom;
  dec.coeff = dft(dom, std::vector<cplx>(F.begin(), F.end()), false);
  dec.level.assign(dom.l + 1, std::vector<double>(dom.N, 0.0));
  dec.eta.assign(dom.l + 1, 0.0);
  for (int i = 0; i <= dom.l; ++i) {
    std::vector<cplx> masked(dom.N, 0.0);
    bool any = false;
    for (std::size_t c = 0; c < dom.N; ++c)
      if (char_degree(dom, c) == i) { masked[c] = dec.coeff[c]; any = true; }
    if (!any) continue;
    auto back = dft(dom, masked, true);
    double s = 0;
    for (std::size_t x = 0; x < dom.N; ++x) {
      dec.level[i][x] = back[x].real();
      dec.max_imag = std::max(dec.max_imag, std::abs(back[x].imag()));
      s += back[x].real() * back[x].real();
    }
    dec.eta[i] = s / static_cast<double>(dom.N);
  }
  for (std::size_t x = 0; x < dom.N; ++x) {
    double s = 0;
    for (int i = 0; i <= dom.l; ++i) s += dec.level[i][x];
    dec.reconstruction_residual = std::max(dec.reconstruction_residual, std::abs(s - F[x]));
  }
  return dec;
}

inline double mean(const std::vector<double>& F) {
  return F.empty() ? 0.0 : std::accumulate(F.begin(), F.end(), 0.0) / static_cast<double>(F.size());
}

// Procedure: symmetrize_perm
inline std::vector<double> symmetrize_perm(const CayleyDomain& dom, const std::vector<double>& F) {
  std::vector<double> out(dom.N, 0.0);
  std::vector<int> perm(dom.l);
  std::iota(perm.begin(), perm.end(), 0);
  long cnt = 0;
  do {
    for (std::size_t i = 0; i < dom.N; ++i) {
      auto x = dom.decode(i);
      std::vector<int> y(dom.l);
      for (int k = 0; k < dom.l; ++k) y[k] = x[perm[k]];
      out[i] += F[dom.encode(y)];
    }
    ++cnt;
  } while (std::next_permutation(perm.begin(), perm.end()));
  for (auto& v : out) v /= static_cast<double>(cnt);
  return out;
}

inline bool is_invariant(const CayleyDomain& dom, const std::vector<double>& F, double tol = 1e-12) {
  for (std::size_t i = 0; i < dom.N; ++i) {
    auto x = dom.decode(i);
    for (int k = 0; k + 1 < dom.l; ++k) {
      auto y = x;
      std::swap(y[k], y[k + 1]);
      if (std::abs(F[dom.encode(y)] - F[i]) > tol) return false;
    }
  }
  return true;
}

// Restriction to the first coordinate fixed to a.
inline std::vector<double> restrict_first(const CayleyDomain& dom, const std::vector<double>& F, int a) {
  const std::size_t block = dom.N / dom.n;
  return std::vector<double>(F.begin() + a * block, F.begin() + (a + 1) * block);
}

// prefix[k][y] = mean of F over tuples whose first k coordinates are y.
inline std::vector<std::vector<double>> prefix_means(const CayleyDomain& dom, const std::vector<double>& F) {
  std::vector<std::vector<double>> P(dom.l + 1);
  P[dom.l] = F;
  for (int k = dom.l - 1; k >= 0; --k) {
    P[k].assign(ipow(dom.n, k), 0.0);
    for (std::size_t y = 0; y < P[k].size(); ++y) {
      double s = 0;
      for (int z = 0; z < dom.n; ++z) s += P[k + 1][y * dom.n + z];
      P[k][y] = s / dom.n;
    }
  }
  return P;
}

// Procedure: f_i_fourier
inline std::vector<double> f_i_fourier(const LevelDecomposition& dec, int i) {
  const auto& dom = dec.dom;
  CayleyDomain di(dom.n, i, 0);
  const std::size_t tail = ipow(dom.n, dom.l - i);
  std::vector<cplx> c(di.N, 0.0);
  for (std::size_t y = 0; y < di.N; ++y) {
    if (char_degree(di, y) != i) continue;
    c[y] = dec.coeff[y * tail];
  }
  auto back = dft(di, c, true);
  std::vector<double> f(di.N);
  for (std::size_t y = 0; y < di.N; ++y) f[y] = back[y].real();
  return f;
}

// Procedure: f_i_restriction
// Inclusion-exclusion over prefix means; needs no Fourier transform.
inline std::vector<double> f_i_restriction(const CayleyDomain& dom, const std::vector<double>& F, int i) {
  auto P = prefix_means(dom, F);
  CayleyDomain di(dom.n, i, 0);
  std::vector<double> f(di.N, 0.0);
  for (std::size_t y = 0; y < di.N; ++y) {
    auto X = di.decode(y);
    double s = 0;
    for (unsigned mask = 0; mask < (1u << i); ++mask) {
      std::size_t idx = 0;
      int sz = 0;
      for (int k = 0; k < i; ++k)
        if (mask >> k & 1u) { idx = idx * dom.n + X[k]; ++sz; }
      s += ((i - sz) % 2 ? -1.0 : 1.0) * P[sz][idx];
    }
    f[y] = s;
  }
  return f;
}

// max |f_{i+1,F}(a,X) - f_{i,F|a}(X) + f_{i,F}(X)| over a, X.
inline double restriction_recursion_residual(const CayleyDomain& dom, const std::vector<double>& F, int i) {
  if (i + 1 > dom.l) return 0.0;
  auto fi1 = f_i_restriction(dom, F, i + 1);
  auto fi = f_i_restriction(dom, F, i);
  CayleyDomain rest(dom.n, dom.l - 1, 0);
  double worst = 0;
  const std::size_t bi = ipow(dom.n, i);
  for (int a = 0; a < dom.n; ++a) {
    auto Fa = restrict_first(dom, F, a);
    auto fa = f_i_restriction(rest, Fa, i);
    for (std::size_t y = 0; y < bi; ++y)
      worst = std::max(worst, std::abs(fi1[a * bi + y] - fa[y] + fi[y]));
  }
  return worst;
}

// Procedure: second_moment_identity
inline double second_moment_identity(const LevelDecomposition& dec, int i) {
  auto f = f_i_fourier(dec, i);
  return std::abs(mean([&] { for (auto& v : f) v *= v; return f; }()) * binomd(dec.dom.l, i) - dec.eta[i]);
}

// F_i(X) = sum_{|I|=i} f_i(X|_I), pointwise residual.
inline double level_from_f_residual(const LevelDecomposition& dec, int i) {
  const auto& dom = dec.dom;
  auto f = f_i_fourier(dec, i);
  double worst = 0;
  for (std::size_t x = 0; x < dom.N; ++x) {
    auto X = dom.decode(x);
    double s = 0;
    for_each_subset(dom.l, i, [&](const std::vector<int>& I) {
      std::size_t idx = 0;
      for (int k : I) idx = idx * dom.n + X[k];
      s += f[idx];
    });
    worst = std::max(worst, std::abs(s - dec.level[i][x]));
  }
  return worst;
}

// Fourier coefficient symmetry under coordinate permutations.
inline double coefficient_symmetry_residual(const LevelDecomposition& dec) {
  const auto& dom = dec.dom;
  double worst = 0;
  for (std::size_t c = 0; c < dom.N; ++c) {
    auto T = dom.decode(c);
    for (int k = 0; k + 1 < dom.l; ++k) {
      auto U = T;
      std::swap(U[k], U[k + 1]);
      worst = std::max(worst, std::abs(dec.coeff[c] - dec.coeff[dom.encode(U)]));
    }
  }
  return worst;
}

// W[i][j][a] = E_b f_i(a,b)^2 with a in [n]^j; D[j][a] = delta(F^2 | first j coords = a).
struct RestrictionTables {
  std::vector<std::vector<std::vector<double>>> W;
  std::vector<std::vector<double>> D;
};

inline RestrictionTables restriction_tables(const CayleyDomain& dom, const std::vector<double>& F, int imax) {
  RestrictionTables rt;
  std::vector<double> F2(F.size());
  for (std::size_t k = 0; k < F.size(); ++k) F2[k] = F[k] * F[k];
  rt.D = prefix_means(dom, F2);
  rt.W.resize(imax + 1);
  for (int i = 0; i <= imax; ++i) {
    auto f = f_i_restriction(dom, F, i);
    for (auto& v : f) v *= v;
    CayleyDomain di(dom.n, i, 0);
    rt.W[i] = prefix_means(di, f);  // W[i][j][a]
  }
  return rt;
}

// Restricted weight bound as stated: E_b f_i(a,b)^2 <= delta(F^2|a)/C(l-j, i-j); returns min slack.
// This form is not valid in general (f_i(a,.) is not f_{i-j} of F|a); see pr_weight_slack_corrected.
inline double pr_weight_slack(const CayleyDomain& dom, const std::vector<double>& F) {
  auto rt = restriction_tables(dom, F, dom.l);
  double worst = 1e300;
  for (int i = 0; i <= dom.l; ++i)
    for (int j = 0; j <= i; ++j)
      for (std::size_t a = 0; a < rt.W[i][j].size(); ++a)
        worst = std::min(worst, rt.D[j][a] / binomd(dom.l - j, i - j) - rt.W[i][j][a]);
  return worst;
}

// Valid form: unrolling the restriction recursion j times gives
// f_i(a,b) = sum_{S subset [j]} (-1)^{j-|S|} f_{i-j, F|a_S}(b), hence by Cauchy-Schwarz
// E_b f_i(a,b)^2 <= 2^j sum_S delta(F^2|a_S) / C(l-|S|, i-j).
inline double pr_weight_slack_corrected(const CayleyDomain& dom, const std::vector<double>& F) {
  auto rt = restriction_tables(dom, F, dom.l);
  double worst = 1e300;
  for (int i = 0; i <= dom.l; ++i)
    for (int j = 0; j <= i; ++j) {
      CayleyDomain dj(dom.n, j, 0);
      for (std::size_t a = 0; a < rt.W[i][j].size(); ++a) {
        auto A = dj.decode(a);
        double bound = 0;
        for (unsigned m = 0; m < (1u << j); ++m) {
          std::size_t idx = 0;
          int sz = 0;
          for (int k = 0; k < j; ++k)
            if (m >> k & 1u) { idx = idx * dom.n + A[k]; ++sz; }
          bound += rt.D[sz][idx] / binomd(dom.l - sz, i - j);
        }
        bound *= std::pow(2.0, j);
        worst = std::min(worst, bound - rt.W[i][j][a]);
      }
    }
  return worst;
}

struct PseudorandomnessReport {
  int r = 0;
  double gamma = 0;
  std::vector<int> worst_a;
  double worst_density = 0;
  bool pass = true;
};

// Procedure: pseudorandomness (Cayley domain, prefix restrictions)
inline PseudorandomnessReport pseudorandomness(const CayleyDomain& dom, const std::vector<double>& F, int r, double gamma) {
  std::vector<double> F2(F.size());
  for (std::size_t k = 0; k < F.size(); ++k) F2[k] = F[k] * F[k];
  auto P = prefix_means(dom, F2);
  PseudorandomnessReport rep{r, gamma, {}, -1, true};
  for (int j = 0; j <= std::min(r, dom.l - 1); ++j) {
    CayleyDomain dj(dom.n, j, 0);
    for (std::size_t a = 0; a < P[j].size(); ++a)
      if (P[j][a] > rep.worst_density + 1e-15) { rep.worst_density = P[j][a]; rep.worst_a = dj.decode(a); }
  }
  rep.pass = rep.worst_density <= gamma;
  return rep;
}

// Procedure: pseudorandomness (Johnson graph, subcube restrictions)
inline PseudorandomnessReport pseudorandomness(const JohnsonGraph& g, const std::vector<double>& F, int r, double gamma) {
  PseudorandomnessReport rep{r, gamma, {}, -1, true};
  for (int j = 0; j <= std::min(r, g.l() - 1); ++j)
    for_each_subset(g.n(), j, [&](const std::vector<int>& a) {
      double s = 0;
      long c = 0;
      for (int v = 0; v < g.vertex_count(); ++v)
        if (g.contains(v, a)) { s += F[v] * F[v]; ++c; }
      double d = s / static_cast<double>(c);
      if (d > rep.worst_density + 1e-15) { rep.worst_density = d; rep.worst_a = a; }
    });
  rep.pass = rep.worst_density <= gamma;
  return rep;
}

// Constants of the fourth-moment upper bound at level i, aggregated over all
// 4-tuples of i-subsets of [l]:
//   E[F_i^4] <= K gamma eta_i + sum_j cp[j] E_{a in [n]^j}[W_{i,a}(delta_a - gamma)].
struct UpperBoundConstants {
  int i = 0;
  double K = 0;
  std::vector<double> cp;  // indexed by j = |A| or |C|
  long tuples = 0, zero_tuples = 0;
  double explicit_count_bound = 0;  // sum_d C(l,d) C(d,i)^4
};

struct TupleSplit {
  int A = 0, C = 0;
  double eps = 1;
  bool vanishes = false;
};

inline TupleSplit split_tuple(int l, int i, const std::array<std::vector<int>, 4>& I) {
  std::vector<int> cnt(l, 0);
  std::vector<std::array<char, 4>> in(l, {0, 0, 0, 0});
  for (int k = 0; k < 4; ++k)
    for (int x : I[k]) { ++cnt[x]; in[x][k] = 1; }
  TupleSplit s;
  for (int x = 0; x < l; ++x)
    if (cnt[x] == 1) { s.vanishes = true; return s; }
  for (int x = 0; x < l; ++x) {
    if (cnt[x] == 4) { ++s.A; ++s.C; }
    if (cnt[x] == 3) {
      if (in[x][0] && in[x][1]) ++s.A;
      if (in[x][2] && in[x][3]) ++s.C;
    }
  }
  s.eps = i == 0 ? 1.0 : std::pow(static_cast<double>(i) / l, (s.A - s.C) / 2.0);
  return s;
}

template <typename Fn>
void for_each_four_tuple(int l, int i, Fn&& fn) {
  std::vector<std::vector<int>> subs;
  for_each_subset(l, i, [&](const std::vector<int>& s) { subs.push_back(s); });
  for (const auto& a : subs)
    for (const auto& b : subs)
      for (const auto& c : subs)
        for (const auto& d : subs) fn(std::array<std::vector<int>, 4>{a, b, c, d});
}

inline UpperBoundConstants upper_bound_constants(int l, int i) {
  UpperBoundConstants uc;
  uc.i = i;
  uc.cp.assign(i + 1, 0.0);
  const double Cli = binomd(l, i);
  for_each_four_tuple(l, i, [&](const std::array<std::vector<int>, 4>& I) {
    ++uc.tuples;
    auto s = split_tuple(l, i, I);
    if (s.vanishes) { ++uc.zero_tuples; return; }
    const double bA = binomd(l - s.A, i - s.A), bC = binomd(l - s.C, i - s.C);
    uc.K += 0.5 * s.eps / (bA * Cli) + 0.5 / s.eps / (bC * Cli);
    uc.cp[s.A] += 0.5 * s.eps / bA;
    uc.cp[s.C] += 0.5 / s.eps / bC;
  });
  for (int d = i; d <= std::min(4 * i, l); ++d) uc.explicit_count_bound += binomd(l, d) * std::pow(binomd(d, i), 4);
  return uc;
}

inline double correction_sum(const RestrictionTables& rt, int i, int j, double gamma) {
  const auto& W = rt.W[i][j];
  const auto& D = rt.D[j];
  double s = 0;
  for (std::size_t a = 0; a < W.size(); ++a) s += W[a] * (D[a] - gamma);
  return s / static_cast<double>(W.size());
}

struct FourthMomentReport {
  double fourth = 0;          // E[F_i^4]
  double lower = 0, upper = 0;
  bool lower_ok = false, upper_ok = false;
  double slack = 0;           // min(fourth - lower, upper - fourth)
  UpperBoundConstants constants;
};

// Procedure: fourth_moment_bounds
inline FourthMomentReport fourth_moment_bounds(const LevelDecomposition& dec, const std::vector<double>& F, int i,
                                               double eps, double gamma) {
  const auto& dom = dec.dom;
  FourthMomentReport rep;
  const auto& Fi = dec.level[i];
  double f4 = 0, boole1 = 0, boole2 = 0;
  for (std::size_t x = 0; x < dom.N; ++x) {
    f4 += std::pow(Fi[x], 4);
    boole1 += (std::pow(F[x], 3) - F[x]) * Fi[x];
    boole2 += F[x] - std::pow(F[x], 4);
  }
  const double Nd = static_cast<double>(dom.N);
  rep.fourth = f4 / Nd;
  const double B = 4 * std::pow(eps, 3) * boole1 / Nd + 3 * std::pow(eps, 4) * boole2 / Nd;
  rep.lower = 4 * std::pow(eps, 3) * dec.eta[i] - 3 * std::pow(eps, 4) * mean(F) + B;
  rep.constants = upper_bound_constants(dom.l, i);
  auto rt = restriction_tables(dom, F, i);
  rep.upper = rep.constants.K * gamma * dec.eta[i];
  for (int j = 0; j <= i; ++j) rep.upper += rep.constants.cp[j] * correction_sum(rt, i, j, gamma);
  rep.lower_ok = rep.fourth >= rep.lower - 1e-9;
  rep.upper_ok = rep.fourth <= rep.upper + 1e-9;
  rep.slack = std::min(rep.fourth - rep.lower, rep.upper - rep.fourth);
  return rep;
}

// Direct sum E[f(I1)f(I2)f(I3)f(I4)] for one tuple of coordinate sets.
inline double four_tuple_moment(const CayleyDomain& dom, const std::vector<double>& fi, int i,
                                const std::array<std::vector<int>, 4>& I) {
  double s = 0;
  for (std::size_t x = 0; x < dom.N; ++x) {
    auto X = dom.decode(x);
    double p = 1;
    for (int k = 0; k < 4; ++k) {
      std::size_t idx = 0;
      for (int c : I[k]) idx = idx * dom.n + X[c];
      p *= fi[idx];
    }
    s += p;
  }
  (void)i;
  return s / static_cast<double>(dom.N);
}

struct LevelInequalityReport {
  int i = 0;
  double eta = 0, rhs = 0, slack = 0;
  double eps_i = 0, B_i = 0, correction = 0;
};

// Procedure: level_inequality
inline LevelInequalityReport level_inequality(const LevelDecomposition& dec, const std::vector<double>& F, int i,
                                              double gamma, const RestrictionTables& rt) {
  const auto& dom = dec.dom;
  auto uc = upper_bound_constants(dom.l, i);
  LevelInequalityReport rep;
  rep.i = i;
  rep.eta = dec.eta[i];
  rep.eps_i = std::cbrt(uc.K * gamma);
  double t1 = 0, t2 = 0;
  for (std::size_t x = 0; x < dom.N; ++x) {
    t1 += (F[x] - std::pow(F[x], 3)) * dec.level[i][x];
    t2 += std::pow(F[x], 4) - F[x];
  }
  rep.B_i = 4.0 / 3.0 * t1 / dom.N + rep.eps_i * t2 / dom.N;
  for (int j = 0; j <= i; ++j) rep.correction += uc.cp[j] / (3 * uc.K * gamma) * correction_sum(rt, i, j, gamma);
  rep.rhs = rep.eps_i * mean(F) + rep.B_i + rep.correction;
  rep.slack = rep.rhs - rep.eta;
  return rep;
}

struct ExpansionCertificate {
  int r = 0;
  double gamma = 0;
  double lhs = 0, lhs_direct = 0;  // <F,LF> from the spectrum and from the walk
  double main_term = 0, correction = 0, boolean_term = 0, rhs = 0, slack = 0;
  double E_r = 0;                  // sum_i K_i^{1/3}
  std::vector<double> c;           // c_j
  double q_min = 0, q_max = 0;
  bool q_ok = true, holds = false;
  std::vector<LevelInequalityReport> levels;
};

// Procedure: expansion_theorem_check
inline ExpansionCertificate expansion_theorem_check(const CayleyDomain& dom, const std::vector<double>& F, int r,
                                                    double gamma) {
  if (gamma <= 0) throw ParameterError("gamma must be positive");
  ExpansionCertificate cert;
  cert.r = r;
  cert.gamma = gamma;
  auto dec = level_decompose(dom, F);
  const int R = std::min(r, dom.l);
  const double lam = r + 1 <= dom.l ? eigenvalue(dom, r + 1) : 0.0;
  double EF2 = 0;
  for (double v : F) EF2 += v * v;
  EF2 /= dom.N;
  cert.lhs = EF2;
  for (int i = 0; i <= dom.l; ++i) cert.lhs -= eigenvalue(dom, i) * dec.eta[i];
  auto TF = apply_walk(dom, F);
  for (std::size_t x = 0; x < dom.N; ++x) cert.lhs_direct += F[x] * (F[x] - TF[x]);
  cert.lhs_direct /= dom.N;

  auto rt = restriction_tables(dom, F, R);
  std::vector<UpperBoundConstants> uc;
  double sum_eps = 0;
  for (int i = 0; i <= R; ++i) {
    uc.push_back(upper_bound_constants(dom.l, i));
    cert.E_r += std::cbrt(uc[i].K);
    sum_eps += std::cbrt(uc[i].K * gamma);
    cert.levels.push_back(level_inequality(dec, F, i, gamma, rt));
  }
  const double delta = mean(F);
  const double factor = 1 - std::cbrt(gamma) * cert.E_r;
  cert.main_term = factor >= 0 ? delta * (1 - std::pow(1 - dom.alpha(), r + 1)) * factor : delta * (1 - lam) * factor;

  double t1 = 0, t2 = 0, t3 = 0;
  for (std::size_t x = 0; x < dom.N; ++x) {
    double low = 0;
    for (int i = 0; i <= R; ++i) low += dec.level[i][x];
    t1 += (std::pow(F[x], 3) - F[x]) * low;
    t2 += F[x] - std::pow(F[x], 4);
    t3 += F[x] - F[x] * F[x];
  }
  cert.boolean_term = (1 - lam) * (4.0 / 3.0 * t1 / dom.N + sum_eps * t2 / dom.N - t3 / dom.N);

  cert.c.assign(R + 1, 0.0);
  cert.q_min = 1e300;
  cert.q_max = -1e300;
  for (int j = 0; j <= R; ++j) {
    // c_j l^j = sum_i (1-lam) c''_{ij} l^i / C(l-j, i-j), with c''_{ij} l^i = cp_ij / (3 K_i)
    double cl = 0;
    for (int i = j; i <= R; ++i) cl += (1 - lam) * uc[i].cp[j] / (3 * uc[i].K) / binomd(dom.l - j, i - j);
    cert.c[j] = cl / std::pow(static_cast<double>(dom.l), j);
    const std::size_t na = ipow(dom.n, j);
    double acc = 0;
    for (std::size_t a = 0; a < na; ++a) {
      double qa = 0;
      for (int i = j; i <= R; ++i) qa += (1 - lam) * uc[i].cp[j] / (3 * uc[i].K) * rt.W[i][j][a];
      qa = cl > 0 ? qa / cl : 0.0;
      cert.q_min = std::min(cert.q_min, qa);
      cert.q_max = std::max(cert.q_max, qa);
      acc += qa * (rt.D[j][a] - gamma);
    }
    cert.correction += cl / gamma * acc / static_cast<double>(na);
  }
  cert.q_ok = cert.q_min >= -1e-12 && cert.q_max <= 1 + 1e-12;
  cert.rhs = cert.main_term - cert.correction + cert.boolean_term;
  cert.slack = cert.lhs - cert.rhs;
  cert.holds = cert.slack >= -1e-9 && cert.q_ok;
  return cert;
}

// Lift a Johnson-graph function to an invariant function on [n]^l: distinct tuples
// take the value of their set, tuples with repeats get 0.
inline std::vector<double> lift_to_cayley(const JohnsonGraph& g, const std::vector<double>& F, const CayleyDomain& dom) {
  std::vector<double> out(dom.N, 0.0);
  for (std::size_t x = 0; x < dom.N; ++x) {
    auto X = dom.decode(x);
    std::sort(X.begin(), X.end());
    if (std::adjacent_find(X.begin(), X.end()) != X.end()) continue;
    out[x] = F[g.index_of(X)];
  }
  return out;
}

}  // namespace ughc
