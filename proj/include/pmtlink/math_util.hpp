#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <utility>

namespace pmtlink {

inline constexpr double kLn2 = 0.69314718055994530942;

// Upper tail of the standard normal, Q(x) = P(N(0,1) > x).
inline double q_function(double x) {
  return 0.5 * std::erfc(x * 0.70710678118654752440);
}

// log(e^a + e^b), safe for -inf operands and widely separated magnitudes.
inline double log_sum_exp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (std::isinf(a) && a < 0.0) return a;  // both -inf
  return a + std::log1p(std::exp(b - a));
}

// log C(n, k) via lgamma; exact enough for pmf work up to huge n.
inline double log_binomial(std::uint64_t n, std::uint64_t k) {
  return std::lgamma(double(n) + 1.0) - std::lgamma(double(k) + 1.0) -
         std::lgamma(double(n - k) + 1.0);
}

// log P(Binomial(n, p) = k); p in [0,1], 0*log0 handled as 0.
inline double log_binomial_pmf(std::uint64_t n, std::uint64_t k, double p) {
  double lp = (k == 0) ? 0.0 : double(k) * std::log(p);
  double lq = (k == n) ? 0.0 : double(n - k) * std::log1p(-p);
  return log_binomial(n, k) + lp + lq;
}

// Wilson 95% score interval for k successes out of n.
inline std::pair<double, double> wilson_ci95(std::uint64_t k, std::uint64_t n) {
  if (n == 0) return {0.0, 1.0};
  const double z = 1.959963984540054;
  double nn = double(n), ph = double(k) / nn, z2 = z * z;
  double denom = 1.0 + z2 / nn;
  double center = (ph + z2 / (2.0 * nn)) / denom;
  double half = z * std::sqrt(ph * (1.0 - ph) / nn + z2 / (4.0 * nn * nn)) / denom;
  // The score interval hits the boundary exactly at k = 0 and k = n.
  double lo = (k == 0) ? 0.0 : center - half;
  double hi = (k == n) ? 1.0 : center + half;
  return {lo < 0.0 ? 0.0 : lo, hi > 1.0 ? 1.0 : hi};
}

// SplitMix64 step; also the basis of per-chunk seed derivation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Deterministic per-chunk seed: digest of (master_seed, chunk_index).
// Independent of worker count by construction.
inline std::uint64_t chunk_seed(std::uint64_t master_seed, std::uint64_t chunk_index) {
  std::uint64_t s = master_seed ^ (0x9e3779b97f4a7c15ull * (chunk_index + 1));
  std::uint64_t a = splitmix64(s);
  std::uint64_t b = splitmix64(s);
  return a ^ (b << 1);
}

// FNV-1a 64-bit content hash, used for config provenance.
inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace pmtlink
