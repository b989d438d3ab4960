#pragma once

#include "pmtlink/channel.hpp"

namespace pmtlink {

// Crossover probabilities of a binary asymmetric channel:
// p01 = P(output 1 | input 0), p11 = P(output 1 | input 1).
struct CrossoverPair {
  double p01 = 0.0;
  double p11 = 0.0;
};

enum class PdfModel { single_photon, poisson };

struct RateApproximation {
  double poisson_bits = 0.0;        // true mixture law
  double single_photon_bits = 0.0;  // Bernoulli approximation
  double relative_gap() const;
};

struct RateBoundsReport {
  double lower_bits = 0.0;      // thresholded-count channel rate
  double upper_bits = 0.0;      // photon-count channel rate
  double gap_bound_bits = 0.0;  // M * per-interval residual count entropy
  bool has_exact = false;       // exact rate only computed for M = 1
  double exact_bits = 0.0;
};

// Shannon binary entropy in bits; H(0) = H(1) = 0.
double binary_entropy(double p);

// Mutual information of one use of the binary asymmetric channel, bits.
double binary_channel_rate(const CrossoverPair& pair, double prior_one);

// Mutual information of M iid uses with shared binary input, bits per symbol.
// Weight-grouped entropy: O(M) in log domain.
double repeated_channel_rate(const CrossoverPair& pair, double prior_one,
                             int intervals);

// Crossovers of the per-interval photoelectron-count channel (exact counts).
// Requires gamma_t <= 1 (Bernoulli regime).
CrossoverPair count_crossovers(const ChannelConfig& config);

// Crossovers of the per-interval hard-decision channel with threshold z_th,
// per-window thermal variance sigma0^2/M.
CrossoverPair threshold_crossovers(double z_th, const ChannelConfig& config,
                                   const PmtParams& pmt);

// Per-interval mutual information I(X; Z_1) in bits by adaptive quadrature.
// Uses the per-window thermal variance sigma0^2/M; with M = 1 this is the
// full symbol rate.
double mutual_information_quadrature(const ChannelConfig& config,
                                     const PmtParams& pmt, PdfModel model,
                                     double abs_tol = 1e-9);

// Residual entropy H(count | thresholded decision) of one interval, bits.
// Bounds the per-interval rate loss of hard thresholding.
double thresholded_count_entropy(double z_th, const ChannelConfig& config,
                                 const PmtParams& pmt);

// Per-interval rate under the true Poisson law vs the Bernoulli approximation.
RateApproximation rate_approximation_pair(const ChannelConfig& config,
                                          const PmtParams& pmt,
                                          double abs_tol = 1e-9);

// Lower/upper bounds on the symbol rate, the thresholding-gap bound, and the
// exact quadrature rate when M = 1.
RateBoundsReport transmission_rate_bounds(const ChannelConfig& config,
                                          const PmtParams& pmt, double z_th);

}  // namespace pmtlink
