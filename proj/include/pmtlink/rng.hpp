#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace pmtlink {

// All sampling goes through mt19937_64 plus the explicit transforms below,
// so that a (seed -> sample stream) mapping is pinned by this code alone.
using RngState = std::mt19937_64;

// Uniform on (0, 1]; never returns 0 so log() is safe.
inline double uniform01(RngState& rng) {
  return (double((rng() >> 11)) + 1.0) * 0x1.0p-53;
}

// Box-Muller; two uniforms per variate, no cached spare.
inline double sample_gaussian(RngState& rng) {
  double u1 = uniform01(rng);
  double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(6.28318530717958647692 * u2);
}

// Knuth product-of-uniforms sampler; adequate for the desk-scale means here.
inline int sample_poisson(RngState& rng, double mean) {
  if (mean <= 0.0) return 0;
  const double limit = std::exp(-mean);
  int n = 0;
  double prod = uniform01(rng);
  while (prod > limit) {
    ++n;
    prod *= uniform01(rng);
  }
  return n;
}

}  // namespace pmtlink
