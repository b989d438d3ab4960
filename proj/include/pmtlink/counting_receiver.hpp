#pragma once

#include <span>
#include <vector>

#include "pmtlink/channel.hpp"
#include "pmtlink/rate_bounds.hpp"

namespace pmtlink {

// Log-domain binomial tails; the smaller side of the mean is summed directly
// and the other side taken as its complement.
double log_binomial_cdf(int k, int trials, double p);  // log P(B <= k)
double log_binomial_sf(int k, int trials, double p);   // log P(B > k)

// Per-interval fire probabilities of the hard decision z > z_th:
// p_i = (1-gamma_i) Q(z_th/sqrt(tv)) + gamma_i Q((z_th-Ae)/sqrt(tv+sigma^2)).
// Returned as {p01 = fire rate under bit 0, p11 = fire rate under bit 1}.
CrossoverPair hard_decision_rates(double z_th, double gamma_t, double gamma_b,
                                  const PmtParams& pmt, double thermal_var);

struct HardDecisionModel {
  double z_th = 0.0;
  double p0 = 0.0, p1 = 0.0;
  int intervals = 1;
  double prior_one = 0.5;
};

HardDecisionModel hard_decision_model(double z_th, const ChannelConfig& config,
                                      const PmtParams& pmt, double thermal_var);

// Count threshold of the likelihood-ratio test on the fired-interval count:
// decide 1 iff count > b_th. Clamped to [-1, intervals]; -1 always decides 1.
int count_threshold(double p0, double p1, int intervals, double eta);

struct CountErrorProbs {
  double log_pe01 = 0.0;  // log P(decide 0 | bit 1)
  double log_pe10 = 0.0;  // log P(decide 1 | bit 0)
  double pe01() const;
  double pe10() const;
  double total_error(double prior_one) const;
};

CountErrorProbs count_error_probs(double p0, double p1, int intervals,
                                  int b_th);

struct CountDetector {
  HardDecisionModel hard;
  int b_th = 0;
  CountErrorProbs errors;

  double total_error() const { return errors.total_error(hard.prior_one); }
  int detect(std::span<const double> outputs) const;
};

CountDetector make_count_detector(double z_th, const ChannelConfig& config,
                                  const PmtParams& pmt, double thermal_var);

// Relative entropy of Bernoulli(p) from Bernoulli(q), in nats. Degenerate q
// with p != q yields +infinity (representable, not an error).
double kl_bernoulli(double p, double q);

// min{D(p0||p1), D(p1||p0)} of the hard-decision channel at z_th, in nats.
double min_kl_objective(double z_th, const ChannelConfig& config,
                        const PmtParams& pmt, double thermal_var);

struct KlProfile {
  std::vector<double> z_grid;
  std::vector<double> d01_nats;  // D(p0||p1)
  std::vector<double> d10_nats;  // D(p1||p0)
  std::vector<double> min_kl_nats;
  double argmax_z = 0.0;
  double max_min_kl = 0.0;
  double plateau_fraction = 0.95;
  double plateau_width = 0.0;  // grid measure of {z: min_kl >= fraction*max}
};

KlProfile kl_profile(const ChannelConfig& config, const PmtParams& pmt,
                     double thermal_var, std::span<const double> z_grid,
                     double plateau_fraction = 0.95);

KlProfile sensitivity_profile(const ChannelConfig& config,
                              const PmtParams& pmt, double thermal_var,
                              int grid_points = 1000,
                              double plateau_fraction = 0.95);

struct ThresholdSearch {
  double z_th = 0.0;
  double objective = 0.0;  // minimized total error, or maximized min-KL (nats)
  bool flat_objective = false;
};

// Coarse uniform grid on (0, Ae) followed by golden-section refinement of the
// best bracket; the refined point is kept only if it beats the grid optimum.
ThresholdSearch optimize_threshold_by_error(const ChannelConfig& config,
                                            const PmtParams& pmt,
                                            double thermal_var,
                                            int grid_points = 1000);
ThresholdSearch optimize_threshold_by_kl(const ChannelConfig& config,
                                         const PmtParams& pmt,
                                         double thermal_var,
                                         int grid_points = 1000);

// Threshold at which the no-pulse/one-pulse density ratio
// G(z; 0, tv) / G(z; Ae, tv + sigma^2) equals C; decreasing in C. At xi = 0
// the quadratic degenerates and the linear equation is solved instead.
double threshold_for_density_ratio(double ratio, const PmtParams& pmt,
                                   double thermal_var);

struct KlThresholdBounds {
  double z_lower = 0.0;
  double z_upper = 0.0;
  double c_lower = 0.0;  // density-ratio constant giving z_lower
  double c_upper = 0.0;  // density-ratio constant giving z_upper
  bool lower_valid = false;
  bool upper_valid = false;
};

// Analytic bracket for the max-min-KL threshold, from the stationarity of
// both directed divergences mapped through the fire-rate derivative ratio.
// A side is left invalid when every candidate constant maps outside the
// admissible density-ratio range.
KlThresholdBounds kl_threshold_bounds(const ChannelConfig& config,
                                      const PmtParams& pmt,
                                      double thermal_var);

}  // namespace pmtlink
