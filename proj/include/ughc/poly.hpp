#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ughc/common.hpp"
#include "ughc/ug_core.hpp"

namespace ughc {

// Variable X_{u,a} of copy c (0 = X, 1 = X') has id ((c*n)+u)*q + a.
struct VarSpace {
  int n = 0, q = 2;
  std::uint32_t id(int copy, int u, int a) const {
    return static_cast<std::uint32_t>((copy * n + u) * q + a);
  }
  int copy(std::uint32_t v) const { return static_cast<int>(v) / (n * q); }
  int vertex(std::uint32_t v) const { return (static_cast<int>(v) / q) % n; }
  int label(std::uint32_t v) const { return static_cast<int>(v) % q; }
  int slot(std::uint32_t v) const { return static_cast<int>(v) / q; }  // (copy, vertex)
  bool operator==(const VarSpace&) const = default;
};

// Sorted, duplicate-free product of variables. Booleanity makes X^2 = X and
// two labels on one (copy, vertex) annihilate; canonical() applies both.
struct Mono {
  static constexpr int kCap = 14;
  std::array<std::uint32_t, kCap> v{};
  std::uint8_t k = 0;

  int size() const { return k; }
  std::uint32_t operator[](int i) const { return v[i]; }
  const std::uint32_t* begin() const { return v.data(); }
  const std::uint32_t* end() const { return v.data() + k; }
  void push(std::uint32_t x) {
    if (k >= kCap) throw DegreeExhausted("monomial exceeds capacity");
    v[k++] = x;
  }
  bool operator==(const Mono& o) const { return k == o.k && std::equal(begin(), end(), o.begin()); }
  bool operator<(const Mono& o) const {
    return std::lexicographical_compare(begin(), end(), o.begin(), o.end());
  }
};

struct MonoHash {
  std::size_t operator()(const Mono& m) const {
    std::uint64_t h = 1469598103934665603ull ^ m.k;
    for (auto x : m) { h ^= x; h *= 1099511628211ull; }
    return static_cast<std::size_t>(h);
  }
};

// Returns false when the product vanishes.
inline bool canonical(Mono& m, const VarSpace& vs) {
  std::sort(m.v.begin(), m.v.begin() + m.k);
  m.k = static_cast<std::uint8_t>(std::unique(m.v.begin(), m.v.begin() + m.k) - m.v.begin());
  for (int i = 1; i < m.k; ++i)
    if (vs.slot(m.v[i]) == vs.slot(m.v[i - 1])) return false;
  return true;
}

inline bool multiply(const Mono& a, const Mono& b, const VarSpace& vs, Mono& out) {
  out = a;
  for (auto x : b) out.push(x);
  return canonical(out, vs);
}

inline std::array<int, 2> copy_degree(const Mono& m, const VarSpace& vs) {
  std::array<int, 2> d{0, 0};
  for (auto x : m) ++d[vs.copy(x)];
  return d;
}

inline Mono mono_of(std::initializer_list<std::uint32_t> xs, const VarSpace& vs) {
  Mono m;
  for (auto x : xs) m.push(x);
  if (!canonical(m, vs)) m.k = 255;  // marker never used by callers that check
  return m;
}

struct Poly {
  std::vector<std::pair<Mono, double>> terms;

  static Poly constant(double c) {
    Poly p;
    if (c != 0) p.terms.push_back({Mono{}, c});
    return p;
  }
  static Poly var(std::uint32_t x) {
    Poly p;
    Mono m;
    m.push(x);
    p.terms.push_back({m, 1.0});
    return p;
  }

  void normalize() {
    std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::pair<Mono, double>> out;
    for (auto& t : terms) {
      if (!out.empty() && out.back().first == t.first) out.back().second += t.second;
      else out.push_back(t);
    }
    out.erase(std::remove_if(out.begin(), out.end(), [](const auto& t) { return t.second == 0.0; }), out.end());
    terms.swap(out);
  }

  std::array<int, 2> degree(const VarSpace& vs) const {
    std::array<int, 2> d{0, 0};
    for (const auto& [m, c] : terms) {
      auto e = copy_degree(m, vs);
      d[0] = std::max(d[0], e[0]);
      d[1] = std::max(d[1], e[1]);
    }
    return d;
  }
  int total_degree() const {
    int d = 0;
    for (const auto& [m, c] : terms) d = std::max(d, m.size());
    return d;
  }

  Poly& operator+=(const Poly& o) {
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    normalize();
    return *this;
  }
  Poly& operator*=(double s) {
    for (auto& t : terms) t.second *= s;
    return *this;
  }
};

inline Poly operator+(Poly a, const Poly& b) { return a += b; }
inline Poly operator*(double s, Poly a) { return a *= s; }
inline Poly operator-(Poly a, const Poly& b) {
  Poly nb = b;
  nb *= -1.0;
  return a += nb;
}

inline Poly mul(const Poly& a, const Poly& b, const VarSpace& vs) {
  Poly r;
  r.terms.reserve(a.terms.size() * b.terms.size());
  Mono m;
  for (const auto& [ma, ca] : a.terms)
    for (const auto& [mb, cb] : b.terms)
      if (multiply(ma, mb, vs, m)) r.terms.push_back({m, ca * cb});
  r.normalize();
  return r;
}

// Evaluate on an integral assignment pair (xp may be null for single-copy polys).
inline double evaluate(const Poly& p, const VarSpace& vs, const Assignment& x, const Assignment* xp = nullptr) {
  double s = 0;
  for (const auto& [m, c] : p.terms) {
    bool on = true;
    for (auto v : m) {
      const int cp = vs.copy(v);
      const Assignment& a = cp == 0 ? x : *xp;
      if (cp == 1 && !xp) throw ParameterError("second copy needed");
      if (a[vs.vertex(v)] != vs.label(v)) { on = false; break; }
    }
    if (on) s += c;
  }
  return s;
}

// ---- polynomials of the UG program ----

inline Poly x_var(const VarSpace& vs, int copy, int u, int a) { return Poly::var(vs.id(copy, u, mod(a, vs.q))); }

// Indicator that edge ei is satisfied by copy c.
inline Poly edge_poly(const UGInstance& inst, const VarSpace& vs, int ei, int copy) {
  const auto& e = inst.edges()[ei];
  Poly p;
  for (int a = 0; a < vs.q; ++a) {
    Mono m;
    m.push(vs.id(copy, e.u, a));
    m.push(vs.id(copy, e.v, mod(a - e.b, vs.q)));
    canonical(m, vs);
    p.terms.push_back({m, 1.0});
  }
  p.normalize();
  return p;
}

inline Poly val_poly(const UGInstance& inst, const VarSpace& vs, int copy = 0) {
  Poly p;
  for (int i = 0; i < static_cast<int>(inst.edges().size()); ++i) {
    auto e = edge_poly(inst, vs, i, copy);
    for (auto& t : e.terms) p.terms.push_back({t.first, t.second * inst.edges()[i].w});
  }
  p.normalize();
  return p;
}

// val_I(X and X'): weighted fraction of edges satisfied by both copies.
inline Poly val_and_poly(const UGInstance& inst, const VarSpace& vs) {
  Poly p;
  for (int i = 0; i < static_cast<int>(inst.edges().size()); ++i) {
    auto e = mul(edge_poly(inst, vs, i, 0), edge_poly(inst, vs, i, 1), vs);
    for (auto& t : e.terms) p.terms.push_back({t.first, t.second * inst.edges()[i].w});
  }
  p.normalize();
  return p;
}

// Vertex value val_u(X) (optionally on edges induced by a mask).
inline Poly vertex_val_poly(const UGInstance& inst, const VarSpace& vs, int u, int copy,
                            const std::vector<char>* mask = nullptr) {
  Poly p;
  double den = 0;
  std::vector<int> used;
  for (int ei : inst.incident(u)) {
    int v = inst.other(ei, u);
    if (mask && !((*mask)[u] && (*mask)[v])) continue;
    den += inst.uniform() ? 1.0 : inst.edges()[ei].w;
    used.push_back(ei);
  }
  for (int ei : used) {
    const double w = (inst.uniform() ? 1.0 : inst.edges()[ei].w) / den;
    for (auto& t : edge_poly(inst, vs, ei, copy).terms) p.terms.push_back({t.first, w * t.second});
  }
  p.normalize();
  return p;
}

// Z_{u,s} = 1[X_u - X'_u = s] = sum_a X_{u,a} X'_{u,a-s}.
inline Poly z_poly(const VarSpace& vs, int u, int s) {
  Poly p;
  for (int a = 0; a < vs.q; ++a) {
    Mono m;
    m.push(vs.id(0, u, a));
    m.push(vs.id(1, u, mod(a - s, vs.q)));
    canonical(m, vs);
    p.terms.push_back({m, 1.0});
  }
  p.normalize();
  return p;
}

// Nonnegative event. The polynomial (when representable within budget) drives
// moment-backed conditioning; the pointwise evaluator is exact on integral inputs.
struct EventPoly {
  Poly poly;
  bool has_poly = true;
  bool truncated = false;
  std::string provenance;
  std::function<double(const Assignment&, const Assignment*)> exact;

  double eval(const VarSpace& vs, const Assignment& x, const Assignment* xp = nullptr) const {
    return exact ? exact(x, xp) : evaluate(poly, vs, x, xp);
  }
  static EventPoly from(Poly p, std::string why) {
    EventPoly e;
    e.poly = std::move(p);
    e.provenance = std::move(why);
    return e;
  }
};

inline std::string mono_key(const Mono& m, const VarSpace& vs) {
  std::string s;
  for (int i = 0; i < m.size(); ++i) {
    if (i) s += '|';
    s += vs.copy(m[i]) ? "Xp:" : "X:";
    s += std::to_string(vs.vertex(m[i])) + ":" + std::to_string(vs.label(m[i]));
  }
  return s;
}

inline Mono parse_mono_key(const std::string& key, const VarSpace& vs) {
  Mono m;
  if (key.empty()) return m;
  std::size_t pos = 0;
  while (pos <= key.size()) {
    std::size_t bar = key.find('|', pos);
    std::string tok = key.substr(pos, bar == std::string::npos ? std::string::npos : bar - pos);
    int copy = 0;
    std::size_t c1 = tok.find(':');
    std::string head = tok.substr(0, c1);
    if (head == "Xp") copy = 1;
    else if (head != "X") throw ParameterError("bad monomial key: " + key);
    std::size_t c2 = tok.find(':', c1 + 1);
    int u = std::stoi(tok.substr(c1 + 1, c2 - c1 - 1));
    int a = std::stoi(tok.substr(c2 + 1));
    if (u < 0 || u >= vs.n || a < 0 || a >= vs.q) throw ParameterError("monomial key out of range: " + key);
    m.push(vs.id(copy, u, a));
    if (bar == std::string::npos) break;
    pos = bar + 1;
  }
  if (!canonical(m, vs)) throw ParameterError("monomial key is identically zero: " + key);
  return m;
}

}  // namespace ughc
