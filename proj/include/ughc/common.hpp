#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ughc {

using Rng = std::mt19937_64;

struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct BudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NearZeroEvent : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegreeExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Procedure: uniform_below
// Portable (library independent) uniform draw in [0, m).
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t m) {
  if (m <= 1) return 0;
  const std::uint64_t lim = std::numeric_limits<std::uint64_t>::max() -
                            std::numeric_limits<std::uint64_t>::max() % m;
  std::uint64_t x;
  do { x = rng(); } while (x >= lim);
  return x % m;
}

// Procedure: uniform01
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Procedure: shuffle_det
template <typename T>
void shuffle_det(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = uniform_below(rng, i);
    std::swap(v[i - 1], v[j]);
  }
}

// Procedure: binom
inline std::uint64_t binom(long n, long k) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (long i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

inline double binomd(long n, long k) { return static_cast<double>(binom(n, k)); }

inline std::uint64_t ipow(std::uint64_t b, unsigned e) {
  std::uint64_t r = 1;
  while (e--) r *= b;
  return r;
}

inline int mod(long a, int q) {
  long r = a % q;
  return static_cast<int>(r < 0 ? r + q : r);
}

// Procedure: for_each_subset
// Visits every k-subset of {0..n-1} in lexicographic order.
template <typename F>
void for_each_subset(int n, int k, F&& f) {
  if (k < 0 || k > n) return;
  std::vector<int> c(k);
  std::iota(c.begin(), c.end(), 0);
  while (true) {
    f(static_cast<const std::vector<int>&>(c));
    int i = k - 1;
    while (i >= 0 && c[i] == n - k + i) --i;
    if (i < 0) return;
    ++c[i];
    for (int j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
  }
}

}  // namespace ughc
