#pragma once

// Invariant suites shared by the command-line harness and the acceptance driver.
// Each suite aggregates many samples into a few named checks; a check keeps the
// worst value seen and passes iff that value respects its bound.

#include <chrono>
#include <map>

#include "ughc/cayley_fourier.hpp"
#include "ughc/johnson.hpp"
#include "ughc/potentials.hpp"
#include "ughc/rounding.hpp"
#include "ughc/sos.hpp"
#include "ughc/steppoly.hpp"

namespace ughc {

struct Check {
  std::string name;
  bool upper = true;  // value <= bound when true, value >= bound otherwise
  double value = 0, bound = 0;
  std::size_t samples = 0;
  bool pass = true;
};

struct SuiteReport {
  std::string suite;
  std::vector<Check> checks;
  nlohmann::json details = nlohmann::json::object();
  double seconds = 0;

  void at_most(const std::string& name, double v, double bound) { record(name, v, bound, true); }
  void at_least(const std::string& name, double v, double bound) { record(name, v, bound, false); }
  void require(const std::string& name, bool ok) { record(name, ok ? 0.0 : 1.0, 0.0, true); }

  bool ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }
  std::vector<std::string> failed() const {
    std::vector<std::string> f;
    for (const auto& c : checks)
      if (!c.pass) f.push_back(c.name);
    return f;
  }
  nlohmann::json to_json() const {
    nlohmann::json cs = nlohmann::json::array();
    for (const auto& c : checks)
      cs.push_back({{"name", c.name}, {"relation", c.upper ? "<=" : ">="}, {"worst", c.value}, {"bound", c.bound},
                    {"samples", c.samples}, {"pass", c.pass}});
    return {{"suite", suite}, {"ok", ok()}, {"failed", failed()}, {"checks", cs}, {"details", details},
            {"seconds", seconds}};
  }
  void merge(const SuiteReport& o, const std::string& prefix = "") {
    for (const auto& c : o.checks) record(prefix + c.name, c.value, c.bound, c.upper, c.samples);
    details[o.suite] = o.details;
  }

 private:
  void record(const std::string& name, double v, double bound, bool upper, std::size_t n = 1) {
    auto it = std::find_if(checks.begin(), checks.end(), [&](const Check& c) { return c.name == name; });
    if (it == checks.end()) {
      checks.push_back({name, upper, v, bound, 0, true});
      it = checks.end() - 1;
    } else if (upper ? v > it->value : v < it->value) {
      it->value = v;
    }
    if (std::isnan(v)) it->value = v;
    it->samples += n;
    it->pass = !std::isnan(it->value) && (upper ? it->value <= it->bound : it->value >= it->bound);
  }
};

namespace detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

inline std::vector<double> random_invariant(const CayleyDomain& dom, Rng& rng, bool boolean, double p = 0.5) {
  std::vector<double> F(dom.N);
  for (auto& v : F) v = boolean ? (uniform01(rng) < p ? 1.0 : 0.0) : uniform01(rng);
  auto S = symmetrize_perm(dom, F);
  if (boolean)
    for (auto& v : S) v = v > 0.5 ? 1.0 : 0.0;
  return S;
}

inline Assignment random_assignment(int n, int q, Rng& rng) {
  Assignment x(n);
  for (auto& a : x) a = static_cast<int>(uniform_below(rng, q));
  return x;
}

inline Assignment perturb(Assignment x, int q, int flips, Rng& rng) {
  for (int k = 0; k < flips; ++k) {
    auto& v = x[uniform_below(rng, x.size())];
    v = mod(v + 1 + static_cast<int>(uniform_below(rng, q - 1)), q);
  }
  return x;
}

inline Poly random_poly(const VarSpace& vs, int deg, Rng& rng, int terms = 6) {
  Poly p;
  for (int t = 0; t < terms; ++t) {
    Mono m;
    const int d = static_cast<int>(uniform_below(rng, deg + 1));
    for (int i = 0; i < d; ++i) m.push(vs.id(0, uniform_below(rng, vs.n), uniform_below(rng, vs.q)));
    if (!canonical(m, vs)) continue;
    p.terms.push_back({m, 2 * uniform01(rng) - 1});
  }
  p.normalize();
  return p;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Spectra of the Cayley walk.

struct SpectraOptions {
  int n = 0, l = 0, t = 0;           // n > 0: this tuple only; otherwise every tuple with n^l <= max_points
  std::uint64_t max_points = 30000;
  std::size_t dense_limit = 128;     // full eigendecomposition up to this many points
  double tol = 1e-9;
};

// Procedure: spectra_suite
// Dense domains are diagonalized outright. Larger ones are checked through the
// distance-class quotient (built by summing explicit rows) and through the
// first two trace moments, which pin down the multiplicities.
inline SuiteReport spectra_suite(const SpectraOptions& opt = {}) {
  detail::Stopwatch sw;
  SuiteReport rep;
  rep.suite = "spectra";
  std::vector<std::array<int, 3>> tuples;
  if (opt.n > 0) {
    tuples.push_back({opt.n, opt.l, opt.t});
  } else {
    for (int l = 1; std::pow(2.0, l) <= static_cast<double>(opt.max_points); ++l)
      for (int n = 2; std::pow(static_cast<double>(n), l) <= static_cast<double>(opt.max_points); ++n)
        for (int t = 1; t <= l; ++t) tuples.push_back({n, l, t});
  }
  std::size_t dense = 0;
  for (auto [n, l, t] : tuples) {
    CayleyDomain dom(n, l, t);
    std::vector<double> lam(l + 1), mult(l + 1);
    for (int d = 0; d <= l; ++d) {
      lam[d] = eigenvalue(dom, d);
      mult[d] = binomd(l, d) * std::pow(n - 1.0, d);
      rep.at_most("decay lambda(d) <= (1-alpha)^d", lam[d] - std::pow(1 - dom.alpha(), d), 1e-15);
    }
    if (dom.N <= opt.dense_limit) {
      ++dense;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(transition_matrix(dom), Eigen::EigenvaluesOnly);
      std::vector<double> want;
      for (int d = 0; d <= l; ++d)
        for (std::uint64_t k = 0; k < binom(l, d) * ipow(n - 1, d); ++k) want.push_back(lam[d]);
      std::sort(want.begin(), want.end());
      double worst = 0;
      for (std::size_t k = 0; k < want.size(); ++k) worst = std::max(worst, std::abs(es.eigenvalues()[k] - want[k]));
      rep.at_most("dense spectrum residual", worst, opt.tol);
    }
    Eigen::EigenSolver<Eigen::MatrixXd> qs(distance_quotient(dom), false);
    std::vector<double> got, want(lam);
    double imag = 0;
    for (int k = 0; k <= l; ++k) {
      got.push_back(qs.eigenvalues()[k].real());
      imag = std::max(imag, std::abs(qs.eigenvalues()[k].imag()));
    }
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    double worst = imag;
    for (int k = 0; k <= l; ++k) worst = std::max(worst, std::abs(got[k] - want[k]));
    rep.at_most("quotient spectrum residual", worst, opt.tol);
    // (1/N) tr T and (1/N) tr T^2 from row 0 against the multiplicity-weighted formula
    double tr1 = transition_entry(dom, 0), tr2 = 0, f1 = 0, f2 = 0;
    for (int d = 0; d <= l; ++d) {
      tr2 += mult[d] * std::pow(transition_entry(dom, d), 2);
      f1 += mult[d] * lam[d];
      f2 += mult[d] * lam[d] * lam[d];
    }
    const double N = static_cast<double>(dom.N);
    rep.at_most("trace moment residual", std::max(std::abs(tr1 - f1 / N), std::abs(tr2 - f2 / N)), opt.tol);
  }
  rep.details = {{"tuples", tuples.size()}, {"dense", dense}, {"dense_limit", opt.dense_limit}};
  rep.seconds = sw.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// Fourier calculus on random permutation-invariant functions.

struct ParsevalOptions {
  int n = 3;
  std::vector<int> ls{2, 3};
  int count = 100;  // total, split across ls
  std::uint64_t seed = 1;
  double tol = 1e-9;
};

inline SuiteReport parseval_suite(const ParsevalOptions& opt = {}) {
  detail::Stopwatch sw;
  SuiteReport rep;
  rep.suite = "parseval";
  Rng rng(opt.seed);
  int done = 0;
  for (std::size_t li = 0; li < opt.ls.size(); ++li) {
    const int l = opt.ls[li];
    const int share = (opt.count - done + static_cast<int>(opt.ls.size() - li) - 1) / static_cast<int>(opt.ls.size() - li);
    CayleyDomain dom(opt.n, l, 1);
    for (int it = 0; it < share; ++it, ++done) {
      auto F = detail::random_invariant(dom, rng, false);
      auto dec = level_decompose(dom, F);
      double EF2 = 0;
      for (double v : F) EF2 += v * v;
      EF2 /= static_cast<double>(dom.N);
      rep.at_most("parseval |sum eta - E F^2|", std::abs(std::accumulate(dec.eta.begin(), dec.eta.end(), 0.0) - EF2),
                  opt.tol);
      rep.at_most("level reconstruction", dec.reconstruction_residual, opt.tol);
      rep.at_most("imaginary residue", dec.max_imag, opt.tol);
      rep.at_most("coefficient symmetry", coefficient_symmetry_residual(dec), opt.tol);
      for (int i = 0; i <= l; ++i) {
        rep.at_most("E[f_i^2] C(l,i) = eta_i", second_moment_identity(dec, i), opt.tol);
        rep.at_most("level from f_i", level_from_f_residual(dec, i), opt.tol);
        rep.at_most("restriction recursion", restriction_recursion_residual(dom, F, i), opt.tol);
        auto a = f_i_fourier(dec, i), b = f_i_restriction(dom, F, i);
        double worst = a.size() == b.size() ? 0.0 : 1.0;
        for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
        rep.at_most("inclusion-exclusion vs Fourier f_i", worst, opt.tol);
      }
    }
  }
  rep.details = {{"functions", done}, {"n", opt.n}, {"ls", opt.ls}};
  rep.seconds = sw.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// Expansion theorem on random Boolean invariant sets.

struct ExpansionOptions {
  std::vector<std::array<int, 3>> domains{{5, 3, 1}, {4, 3, 1}, {6, 2, 1}};
  int count = 50;
  int r = 1;
  std::uint64_t seed = 1;
};

inline SuiteReport expansion_suite(const ExpansionOptions& opt = {}) {
  detail::Stopwatch sw;
  SuiteReport rep;
  rep.suite = "expansion";
  Rng rng(opt.seed);
  nlohmann::json slacks = nlohmann::json::array();
  int draws = 0;
  for (int it = 0; it < opt.count; ++it) {
    const auto [n, l, t] = opt.domains[it % opt.domains.size()];
    CayleyDomain dom(n, l, t);
    std::vector<double> F;
    do {  // empty and full sets are trivial; draw again
      F = detail::random_invariant(dom, rng, true, 0.05 + 0.4 * uniform01(rng));
      ++draws;
    } while (mean(F) == 0.0 || mean(F) == 1.0);
    const int r = std::min(opt.r, l - 1);
    // the tightest gamma at which F is (r, gamma)-pseudorandom
    const double gamma = std::max(pseudorandomness(dom, F, r, 1.0).worst_density, 1e-3);
    auto cert = expansion_theorem_check(dom, F, r, gamma);
    rep.at_least("expansion slack", cert.slack, 0.0);
    rep.require("0 <= q_a(F) <= 1", cert.q_ok);
    rep.at_most("spectral vs walk quadratic form", std::abs(cert.lhs - cert.lhs_direct), 1e-9);
    slacks.push_back(cert.slack);
  }
  rep.details = {{"functions", opt.count}, {"draws", draws}, {"slacks", slacks}};
  rep.seconds = sw.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// Step polynomials.

struct StepPolyOptions {
  std::vector<double> betas{0.3, 0.5, 0.7}, nus{0.05, 0.1};
  int grid = 10000;
  double tol = 1e-9;
};

inline SuiteReport steppoly_suite(const StepPolyOptions& opt = {}) {
  detail::Stopwatch sw;
  SuiteReport rep;
  rep.suite = "steppoly";
  nlohmann::json built = nlohmann::json::array();
  for (double b : opt.betas)
    for (double v : opt.nus) {
      auto p = build_step_poly(b, v);
      auto r = check_step(p, opt.grid);
      rep.at_least("range [0,1]", r.range_slack, -opt.tol);
      rep.at_least("below beta: p <= nu", r.low_side_slack, -opt.tol);
      rep.at_least("above beta+nu: p >= 1-nu", r.high_side_slack, -opt.tol);
      rep.at_least("monotone on transition", r.monotone_slack, -opt.tol);
      rep.at_least("markov lower", r.markov_lower, -opt.tol);
      rep.at_least("markov upper", r.markov_upper, -opt.tol);
      rep.at_least("composition", r.composition, -opt.tol);
      rep.at_least("complement", r.mirrored, -opt.tol);
      built.push_back({{"beta", b}, {"nu", v}, {"degree", p.degree()}, {"points", r.points}});
    }
  rep.details = {{"polynomials", built}};
  rep.seconds = sw.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// Shift variables, potentials and information measures.

struct PotentialsOptions {
  int joints = 1000;
  double beta = 0.8, nu = 0.05;
  std::uint64_t seed = 1;
};

// Shift-variable identities and the subcube potential relation.
inline SuiteReport shift_suite(const PotentialsOptions& opt = {}) {
  detail::Stopwatch sw;
  SuiteReport rep;
  rep.suite = "shift";
  Rng rng(opt.seed);

  // shift-variable identities on solver outputs and on integral pairs
  int solved = 0;
  for (auto [q, D, eps] : std::vector<std::tuple<int, int, double>>{{2, 4, 0.3}, {3, 2, 0.2}, {3, 4, 0.0}}) {
    JohnsonGraph g(4, 2, 1);
    auto [inst, A] = plant(g.simple(), q, {eps, opt.seed + solved});
    auto [pe, info] = solve(relax(inst, D));
    rep.at_most("z identities on solver output", z_identities(product(pe), inst).worst(), 1e-9);
    ++solved;
    for (int k = 0; k < 5; ++k) {
      auto B = detail::perturb(A, q, k, rng);
      rep.at_most("z identities on integral pairs", z_identities(product(from_assignment(A, q), from_assignment(B, q)), inst).worst(), 0.0);
    }
  }

  // the subcube potential against the restricted global one, every |a| <= 1 of J(8,4,2)
  JohnsonGraph g(8, 4, 2);
  int pairs = 0;
  for (std::uint64_t s = 0; s < 3; ++s) {
    auto [inst, A] = plant(g.simple(), 2, {0.02 * static_cast<double>(s), opt.seed + 10 + s});
    const auto B = detail::perturb(A, 2, 6, rng), C = detail::random_assignment(inst.vertex_count(), 2, rng);
    for (const auto& [x, y] : std::vector<std::pair<Assignment, Assignment>>{{A, A}, {A, B}, {B, A}, {A, shift(A, 1, 2)}, {A, C}}) {
      for (const auto& r : claim_potentials_check(g, inst, x, y, opt.beta, opt.nu, 1))
        rep.at_least("subcube potential slack", r.slack, -1e-9);
      ++pairs;
    }
  }

  rep.details["solved_instances"] = solved;
  rep.details["potential_pairs"] = pairs;
  rep.seconds = sw.seconds();
  return rep;
}

// Information measures on random joints and conditioning a two-cluster mixture.
inline SuiteReport information_suite(const PotentialsOptions& opt = {}) {
  detail::Stopwatch sw;
  SuiteReport rep;
  rep.suite = "information";
  Rng rng(opt.seed + 1);
  for (int it = 0; it < opt.joints; ++it) {
    const int da = 2 + static_cast<int>(uniform_below(rng, 3)), db = 2 + static_cast<int>(uniform_below(rng, 3));
    Joint J({da, db});
    double s = 0;
    for (auto& x : J.p) s += (x = std::pow(uniform01(rng), 3));
    for (auto& x : J.p) x /= s;
    const double mi = mutual_information(J, {0}, {1});
    rep.at_least("mutual information >= 0", mi, -1e-9);
    rep.at_least("pinsker residual", pinsker_residual(J, {0}, {1}), -1e-9);
    std::vector<int> f(da), h(db);
    for (auto& v : f) v = static_cast<int>(uniform_below(rng, 2));
    for (auto& v : h) v = static_cast<int>(uniform_below(rng, 2));
    auto K = map_coordinate(map_coordinate(J, 0, f, 2), 1, h, 2);
    rep.at_least("data processing", mi - mutual_information(K, {0}, {1}), -1e-9);
    auto [joint, prod] = joint_and_product(J, {0}, {1});
    rep.at_most("tv symmetric and in [0,1]",
                std::max(std::abs(tv(joint.p, prod.p) - tv(prod.p, joint.p)), tv(joint.p, prod.p) - 1.0), 1e-12);
  }

  // conditioning a two-cluster mixture
  {
    const int n = 10, q = 2;
    VarSpace vs{n, q};
    auto x = detail::random_assignment(n, q, rng);
    auto mu = mixture({{from_assignment(x, q), 0.5}, {from_assignment(shift(x, 1, q), q), 0.5}});
    std::vector<int> S(n);
    std::iota(S.begin(), S.end(), 0);
    Poly agree;
    for (int a = 0; a < q; ++a) agree += mul(x_var(vs, 0, 0, a), x_var(vs, 1, 0, a), vs);
    const double tau = 0.01;
    auto R = rt_reduce(mu, mu, S, EventPoly::from(agree, "copies agree at 0"), {tau, 8, 0, opt.seed});
    rep.at_most("two-cluster mutual information after conditioning", R.mi_final, tau);
    rep.at_least("two-cluster event mass kept (p_final - p/2)", R.p_final - R.p_initial / 2, 0.0);
    rep.details["two_cluster"] = {{"mi_initial", R.mi_initial}, {"mi_final", R.mi_final}, {"p_initial", R.p_initial},
                                  {"p_final", R.p_final}, {"tuples", R.tuples.size()}, {"stop", R.stop}};
  }
  rep.details["joints"] = opt.joints;
  rep.seconds = sw.seconds();
  return rep;
}

inline SuiteReport potentials_suite(const PotentialsOptions& opt = {}) {
  detail::Stopwatch sw;
  SuiteReport rep;
  rep.suite = "potentials";
  rep.merge(shift_suite(opt));
  rep.merge(information_suite(opt));
  rep.seconds = sw.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// Edge covering by dense subcubes.

struct EdgeCoverOptions {
  std::vector<std::array<int, 3>> graphs{{8, 2, 1}, {10, 2, 1}};
  int pairs_per_graph = 60;
  std::uint64_t seed = 1;
};

inline SuiteReport edgecover_suite(const EdgeCoverOptions& opt = {}) {
  detail::Stopwatch sw;
  SuiteReport rep;
  rep.suite = "edgecover";
  Rng rng(opt.seed);
  const auto eps = edge_cover_schedule(1);
  double bridge_max = 0, slack_min = 1e300, bare_min = 1e300;
  int total = 0;
  std::map<std::string, int> kinds;
  for (auto [n, l, t] : opt.graphs) {
    JohnsonGraph g(n, l, t);
    for (int k = 0; k < opt.pairs_per_graph; ++k) {
      const int q = 2 + k % 2;
      auto [inst, A] = plant(g.simple(), q, {(k / 2) % 3 * 0.1, opt.seed + 100 * total + k});
      const int V = inst.vertex_count();
      Assignment x, y;
      std::string kind;
      switch (k % 5) {
        case 0: x = A; y = A; kind = "planted"; break;
        case 1: x = A; y = shift(A, 1 + static_cast<int>(uniform_below(rng, q - 1)), q); kind = "planted shifted"; break;
        case 2: x = A; y = detail::perturb(A, q, 1 + static_cast<int>(uniform_below(rng, V / 3)), rng); kind = "perturbed"; break;
        case 3: x = detail::perturb(A, q, 3, rng); y = detail::perturb(A, q, 3, rng); kind = "two perturbed"; break;
        default: x = detail::random_assignment(V, q, rng); y = detail::random_assignment(V, q, rng); kind = "random";
      }
      ++kinds[kind];
      ++total;
      rep.at_most("satisfied edges crossing shift parts", crossing_satisfied_edges(inst, x, y), 0.0);
      auto ec = edge_cover_decompose(g, inst, x, y, eps);
      rep.at_least("edge cover slack", ec.slack, 0.0);
      slack_min = std::min(slack_min, ec.slack);
      bare_min = std::min(bare_min, ec.slack_without_err);
      for (const auto& G : shift_parts(x, y, q)) {
        auto d = dense_subcube_indicators(g, G, eps);
        for (std::size_t i = 0; i < d.count.size(); ++i) {
          rep.at_most("dense subcube count - bound - bridge", d.count[i] - d.bound[i] - d.bridge[i], 1e-12);
          bridge_max = std::max(bridge_max, d.bridge[i]);
        }
      }
    }
  }
  rep.details = {{"pairs", total}, {"kinds", kinds}, {"eps", eps}, {"max_bridge", bridge_max}, {"min_slack", slack_min},
                 {"min_slack_without_error_term", bare_min}};
  rep.seconds = sw.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// Solver outputs as pseudoexpectations.

struct SolveCase {
  int n = 5, l = 2, t = 1, q = 2, degree = 2;
  double eps = 0.2;
  std::uint64_t seed = 1;
};

struct SolveSuiteOptions {
  std::vector<SolveCase> cases;  // empty: the default family below
  int cs_pairs = 100;
  std::uint64_t seed = 1;
};

inline std::vector<SolveCase> default_solve_cases() {
  std::vector<SolveCase> out;
  std::uint64_t s = 1;
  for (double eps : {0.1, 0.3, 0.5})
    for (int q : {2, 3}) {
      out.push_back({5, 2, 1, q, 2, eps, s++});
      out.push_back({4, 2, 1, q, 2, eps, s++});
      out.push_back({4, 2, 1, q, 4, eps, s++});
      if (q == 2) out.push_back({5, 2, 1, q, 4, eps, s++});
    }
  return out;
}

// Procedure: solve_suite
inline SuiteReport solve_suite(const SolveSuiteOptions& opt = {}) {
  detail::Stopwatch sw;
  SuiteReport rep;
  rep.suite = "solve";
  Rng rng(opt.seed);
  const auto cases = opt.cases.empty() ? default_solve_cases() : opt.cases;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& c : cases) {
    JohnsonGraph g(c.n, c.l, c.t);
    auto [inst, A] = plant(g.simple(), c.q, {c.eps, c.seed});
    auto [pe, info] = solve(relax(inst, c.degree));
    auto v = validate(pe);
    rep.at_most("scaling residual", v.scaling, 1e-6);
    rep.at_most("psd residual (-min eig)", -v.min_eig, 1e-6);
    rep.at_most("partition residual", v.partition, 1e-6);
    const auto& vs = pe.vars();
    const double val = pe(val_poly(inst, vs));
    const double opt_val = brute_force_opt(inst).value;
    rep.at_least("pE[val] - OPT", val - opt_val, -1e-6);
    for (int k = 0; k < opt.cs_pairs; ++k) {
      auto f = detail::random_poly(vs, c.degree / 2, rng), h = detail::random_poly(vs, c.degree / 2, rng);
      const double fh = pe(mul(f, h, vs)), ff = pe(mul(f, f, vs)), hh = pe(mul(h, h, vs));
      rep.at_most("pseudo Cauchy-Schwarz excess", fh * fh - ff * hh, 1e-9);
    }
    const double inter = product(pe)(val_and_poly(inst, vs));
    rep.at_least("pE[val(X and X')] - pE[val]^2", inter - val * val, -1e-9);
    rows.push_back({{"graph", {c.n, c.l, c.t}}, {"q", c.q}, {"degree", c.degree}, {"eps", c.eps}, {"seed", c.seed},
                    {"objective", val}, {"opt", opt_val}, {"min_eig", v.min_eig}, {"seconds", info.seconds}});
  }
  rep.details = {{"instances", rows}};
  rep.seconds = sw.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// End-to-end rounding runs.

struct PipelineRun {
  int n = 8, l = 2, t = 1, q = 2;
  double eps = 0.0;
  std::uint64_t seed = 1;
  Regime regime = Regime::CloseToOne;
  int r = -1, min_restriction = 0;
  double floor = 0;  // required final value
  std::string label;
};

struct PipelineOptions {
  std::vector<PipelineRun> runs;
  bool determinism = true;
};

// Floors for planted instances: exact recovery at eps = 0, a constant fraction
// for small eps, the random-guess level for fully random instances.
inline double default_floor(double eps, int q) {
  if (eps <= 0) return 0.9;
  if (eps <= 0.05 + 1e-12) return 0.5;
  if (eps >= 1) return 1.0 / q - 0.05;
  return 0.0;
}

inline PipelineRun make_run(int q, double eps, std::uint64_t seed) {
  PipelineRun r;
  r.q = q;
  r.eps = eps;
  r.seed = seed;
  r.regime = eps >= 1 ? Regime::LowCompleteness : Regime::CloseToOne;
  r.floor = default_floor(eps, q);
  return r;
}

inline RoundingConfig run_config(const PipelineRun& run) {
  RoundingConfig cfg;
  cfg.regime = run.regime;
  cfg.epsilon = run.eps;
  cfg.r = run.r;
  cfg.min_restriction = run.min_restriction;
  cfg.seed = run.seed;
  return cfg;
}

// Checks that every rounding trace must satisfy, independent of the achieved value.
// A SubRound whose lemma quantities exceed the pseudoexpectation's degree fails
// only when require_evaluable is set; otherwise it is counted and skipped.
inline int trace_checks(SuiteReport& rep, const RoundingTrace& T, const std::string& prefix = "",
                        bool require_evaluable = true) {
  int skipped = 0;
  rep.require(prefix + "assigned sets disjoint", T.disjoint);
  rep.require(prefix + "output consistent with every partial assignment", T.consistent);
  rep.require(prefix + "iteration value-drop bound", T.it_drop_all);
  rep.require(prefix + "randomized-edge ceiling", T.chernoff_all);
  rep.require(prefix + "iteration value bound", T.it_val_all);
  for (const auto& it : T.iterations) {
    if (require_evaluable) rep.require(prefix + "subround lemmas evaluable", it.lemmas_evaluable);
    if (!it.lemmas_evaluable) {
      ++skipped;
      continue;
    }
    rep.at_least(prefix + "relating-entropy slack", it.relating_slack, -1e-6);
    rep.at_least(prefix + "round-j slack", it.round_slack, -1e-6);
  }
  return skipped;
}

// Procedure: pipeline_suite
inline SuiteReport pipeline_suite(const PipelineOptions& opt) {
  detail::Stopwatch sw;
  SuiteReport rep;
  rep.suite = "pipeline";
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& run : opt.runs) {
    JohnsonGraph g(run.n, run.l, run.t);
    auto [inst, A] = plant(g.simple(), run.q, {run.eps, run.seed});
    const auto cfg = run_config(run);
    detail::Stopwatch rs;
    auto [f, T] = main_algorithm(inst, cfg, &A);
    const double secs = rs.seconds();
    const std::string label = run.label.empty() ? "" : run.label + ": ";
    rep.at_least(label + "final value - floor", T.final_value - run.floor, 0.0);
    rep.at_most(label + "reported value matches assignment", std::abs(value(inst, f) - T.final_value), 1e-12);
    trace_checks(rep, T, label);
    bool same = true;
    if (opt.determinism) {
      auto [f2, T2] = main_algorithm(inst, cfg, &A);
      same = f2 == f && T2.to_jsonl() == T.to_jsonl();
      rep.require(label + "deterministic", same);
    }
    double ceiling = 0, lemma_worst = 1e300;
    for (const auto& it : T.iterations) {
      ceiling = std::max(ceiling, it.chernoff_max);
      if (it.lemmas_evaluable) lemma_worst = std::min({lemma_worst, it.relating_slack, it.round_slack});
    }
    rows.push_back({{"graph", {run.n, run.l, run.t}}, {"q", run.q}, {"eps", run.eps}, {"seed", run.seed},
                    {"regime", run.regime == Regime::CloseToOne ? "close-to-1" : "low"}, {"r", run.r},
                    {"min_restriction", run.min_restriction}, {"planted_value", inst.planted->realized_value},
                    {"final_value", T.final_value}, {"floor", run.floor}, {"iterations", T.iterations.size()},
                    {"max_randomized_fraction", ceiling}, {"worst_lemma_slack", lemma_worst},
                    {"deterministic", same}, {"seconds", secs}, {"trace", T.summary()}});
  }
  rep.details = {{"runs", rows}};
  rep.seconds = sw.seconds();
  return rep;
}

}  // namespace ughc
