#include "pmtlink/counting_receiver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pmtlink/errors.hpp"
#include "pmtlink/map_detector.hpp"
#include "pmtlink/math_util.hpp"

namespace pmtlink {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(1 - e^x) for x <= 0, stable near both ends.
double log1m_exp(double x) {
  if (x >= 0.0) return kNegInf;
  if (x > -kLn2) return std::log(-std::expm1(x));
  return std::log1p(-std::exp(x));
}

// log sum_{k=lo..hi} C(m,k) p^k (1-p)^(m-k), accumulated in log domain.
double log_pmf_range(int lo, int hi, int m, double p) {
  double acc = kNegInf;
  for (int k = lo; k <= hi; ++k)
    acc = log_sum_exp(acc, log_binomial_pmf(std::uint64_t(m), std::uint64_t(k), p));
  return std::min(acc, 0.0);
}

}  // namespace

double log_binomial_cdf(int k, int trials, double p) {
  if (trials < 1) throw NumericError("binomial cdf: trials must be >= 1");
  if (!(p >= 0.0 && p <= 1.0))
    throw NumericError("binomial cdf: p must lie in [0,1]");
  if (k < 0) return kNegInf;
  if (k >= trials) return 0.0;
  if (p == 0.0) return 0.0;
  if (p == 1.0) return kNegInf;
  // Sum the side of the mean the cut falls on; complement the other.
  if (k <= trials * p) return log_pmf_range(0, k, trials, p);
  return log1m_exp(log_pmf_range(k + 1, trials, trials, p));
}

double log_binomial_sf(int k, int trials, double p) {
  if (trials < 1) throw NumericError("binomial sf: trials must be >= 1");
  if (!(p >= 0.0 && p <= 1.0))
    throw NumericError("binomial sf: p must lie in [0,1]");
  if (k < 0) return 0.0;
  if (k >= trials) return kNegInf;
  if (p == 0.0) return kNegInf;
  if (p == 1.0) return 0.0;
  if (k + 1 >= trials * p) return log_pmf_range(k + 1, trials, trials, p);
  return log1m_exp(log_pmf_range(0, k, trials, p));
}

CrossoverPair hard_decision_rates(double z_th, double gamma_t, double gamma_b,
                                  const PmtParams& pmt, double thermal_var) {
  pmt.validate();
  if (!(thermal_var > 0.0)) throw NumericError("thermal_var must be positive");
  if (!(gamma_b >= 0.0 && gamma_t >= gamma_b && gamma_t <= 1.0))
    throw NumericError("fire rates need 0 <= gamma_b <= gamma_t <= 1");
  const double ae = pmt.pulse_amplitude();
  const double s0 = std::sqrt(thermal_var);
  const double s1 = std::sqrt(thermal_var + pmt.shot_var());
  auto fire = [&](double gamma) {
    return (1.0 - gamma) * q_function(z_th / s0) +
           gamma * q_function((z_th - ae) / s1);
  };
  return {fire(gamma_b), fire(gamma_t)};
}

HardDecisionModel hard_decision_model(double z_th, const ChannelConfig& config,
                                      const PmtParams& pmt,
                                      double thermal_var) {
  config.validate();
  const CrossoverPair pair = hard_decision_rates(
      z_th, config.gamma_t(), config.gamma_b(), pmt, thermal_var);
  HardDecisionModel model;
  model.z_th = z_th;
  model.p0 = pair.p01;
  model.p1 = pair.p11;
  model.intervals = config.intervals;
  model.prior_one = config.prior_one;
  return model;
}

int count_threshold(double p0, double p1, int intervals, double eta) {
  if (intervals < 1) throw NumericError("count threshold: intervals >= 1");
  if (!(p0 > 0.0 && p1 < 1.0 && p0 < p1))
    throw NumericError("count threshold needs 0 < p0 < p1 < 1");
  const double log_ratio_fire = std::log(p1) - std::log(p0);
  const double log_ratio_idle = std::log1p(-p1) - std::log1p(-p0);
  const double num = eta - intervals * log_ratio_idle;
  const double den = log_ratio_fire - log_ratio_idle;
  const double raw = std::floor(num / den);
  if (std::isnan(raw)) throw NumericError("count threshold: invalid ratio");
  if (raw < -1.0) return -1;
  if (raw > static_cast<double>(intervals)) return intervals;
  return static_cast<int>(raw);
}

double CountErrorProbs::pe01() const { return std::exp(log_pe01); }
double CountErrorProbs::pe10() const { return std::exp(log_pe10); }
double CountErrorProbs::total_error(double prior_one) const {
  return prior_one * pe01() + (1.0 - prior_one) * pe10();
}

CountErrorProbs count_error_probs(double p0, double p1, int intervals,
                                  int b_th) {
  if (b_th < -1 || b_th > intervals)
    throw NumericError("count error probs: b_th outside [-1, intervals]");
  CountErrorProbs probs;
  probs.log_pe01 = log_binomial_cdf(b_th, intervals, p1);
  probs.log_pe10 = log_binomial_sf(b_th, intervals, p0);
  return probs;
}

int CountDetector::detect(std::span<const double> outputs) const {
  int fired = 0;
  for (double z : outputs) fired += (z >= hard.z_th) ? 1 : 0;
  return fired > b_th ? 1 : 0;
}

CountDetector make_count_detector(double z_th, const ChannelConfig& config,
                                  const PmtParams& pmt, double thermal_var) {
  CountDetector detector;
  detector.hard = hard_decision_model(z_th, config, pmt, thermal_var);
  detector.b_th = count_threshold(detector.hard.p0, detector.hard.p1,
                                  detector.hard.intervals, config.eta());
  detector.errors = count_error_probs(detector.hard.p0, detector.hard.p1,
                                      detector.hard.intervals, detector.b_th);
  return detector;
}

double kl_bernoulli(double p, double q) {
  if (!(p >= 0.0 && p <= 1.0 && q >= 0.0 && q <= 1.0))
    throw NumericError("kl_bernoulli needs probabilities in [0,1]");
  if (p == q) return 0.0;
  double kl = 0.0;
  if (p > 0.0) {
    if (q == 0.0) return std::numeric_limits<double>::infinity();
    kl += p * (std::log(p) - std::log(q));
  }
  if (p < 1.0) {
    if (q == 1.0) return std::numeric_limits<double>::infinity();
    kl += (1.0 - p) * (std::log1p(-p) - std::log1p(-q));
  }
  return std::max(kl, 0.0);
}

double min_kl_objective(double z_th, const ChannelConfig& config,
                        const PmtParams& pmt, double thermal_var) {
  const CrossoverPair pair = hard_decision_rates(
      z_th, config.gamma_t(), config.gamma_b(), pmt, thermal_var);
  return std::min(kl_bernoulli(pair.p01, pair.p11),
                  kl_bernoulli(pair.p11, pair.p01));
}

KlProfile kl_profile(const ChannelConfig& config, const PmtParams& pmt,
                     double thermal_var, std::span<const double> z_grid,
                     double plateau_fraction) {
  if (z_grid.size() < 2) throw UsageError("kl profile needs >= 2 grid points");
  if (!(plateau_fraction > 0.0 && plateau_fraction <= 1.0))
    throw UsageError("plateau fraction must lie in (0,1]");
  KlProfile profile;
  profile.plateau_fraction = plateau_fraction;
  profile.z_grid.assign(z_grid.begin(), z_grid.end());
  const std::size_t n = profile.z_grid.size();
  profile.d01_nats.resize(n);
  profile.d10_nats.resize(n);
  profile.min_kl_nats.resize(n);
  const double gt = config.gamma_t();
  const double gb = config.gamma_b();
  for (std::size_t i = 0; i < n; ++i) {
    const CrossoverPair pair =
        hard_decision_rates(profile.z_grid[i], gt, gb, pmt, thermal_var);
    profile.d01_nats[i] = kl_bernoulli(pair.p01, pair.p11);
    profile.d10_nats[i] = kl_bernoulli(pair.p11, pair.p01);
    profile.min_kl_nats[i] =
        std::min(profile.d01_nats[i], profile.d10_nats[i]);
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (profile.min_kl_nats[i] > profile.min_kl_nats[best]) best = i;
  profile.argmax_z = profile.z_grid[best];
  profile.max_min_kl = profile.min_kl_nats[best];
  // Grid measure of the super-level set, each point owning half-cells.
  const double level = plateau_fraction * profile.max_min_kl;
  double width = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (profile.min_kl_nats[i] < level) continue;
    const double left = (i == 0) ? 0.0 : 0.5 * (profile.z_grid[i] - profile.z_grid[i - 1]);
    const double right =
        (i + 1 == n) ? 0.0 : 0.5 * (profile.z_grid[i + 1] - profile.z_grid[i]);
    width += left + right;
  }
  profile.plateau_width = width;
  return profile;
}

namespace {

std::vector<double> open_threshold_grid(double pulse_amplitude, int points) {
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i)
    grid[static_cast<std::size_t>(i)] =
        pulse_amplitude * (i + 1) / static_cast<double>(points + 1);
  return grid;
}

// Golden-section minimization on [lo, hi] down to |hi-lo| < tol.
template <typename F>
double golden_section_min(F&& f, double lo, double hi, double tol) {
  const double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

// Shared grid + refinement scheme; minimizes `objective`.
template <typename F>
ThresholdSearch minimize_threshold(F&& objective, double pulse_amplitude,
                                   int grid_points) {
  if (grid_points < 100)
    throw UsageError("threshold search needs >= 100 grid points");
  const std::vector<double> grid =
      open_threshold_grid(pulse_amplitude, grid_points);
  std::vector<double> values(grid.size());
  std::size_t best = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    values[i] = objective(grid[i]);
    if (values[i] < values[best]) best = i;
  }
  const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
  ThresholdSearch result;
  const double spread = *max_it - *min_it;
  if (!(spread > 1e-14 * std::max(1.0, std::abs(*max_it)))) {
    result.z_th = 0.5 * pulse_amplitude;
    result.objective = objective(result.z_th);
    result.flat_objective = true;
    return result;
  }
  const double lo = (best == 0) ? grid.front() : grid[best - 1];
  const double hi = (best + 1 == grid.size()) ? grid.back() : grid[best + 1];
  const double refined =
      golden_section_min(objective, lo, hi, 1e-6 * pulse_amplitude);
  const double refined_value = objective(refined);
  if (refined_value <= values[best]) {
    result.z_th = refined;
    result.objective = refined_value;
  } else {
    result.z_th = grid[best];
    result.objective = values[best];
  }
  return result;
}

}  // namespace

ThresholdSearch optimize_threshold_by_error(const ChannelConfig& config,
                                            const PmtParams& pmt,
                                            double thermal_var,
                                            int grid_points) {
  config.validate();
  pmt.validate();
  auto objective = [&](double z_th) {
    return make_count_detector(z_th, config, pmt, thermal_var).total_error();
  };
  return minimize_threshold(objective, pmt.pulse_amplitude(), grid_points);
}

ThresholdSearch optimize_threshold_by_kl(const ChannelConfig& config,
                                         const PmtParams& pmt,
                                         double thermal_var, int grid_points) {
  config.validate();
  pmt.validate();
  auto objective = [&](double z_th) {
    return -min_kl_objective(z_th, config, pmt, thermal_var);
  };
  ThresholdSearch search =
      minimize_threshold(objective, pmt.pulse_amplitude(), grid_points);
  search.objective = -search.objective;
  return search;
}

KlProfile sensitivity_profile(const ChannelConfig& config,
                              const PmtParams& pmt, double thermal_var,
                              int grid_points, double plateau_fraction) {
  const std::vector<double> grid =
      open_threshold_grid(pmt.pulse_amplitude(), grid_points);
  return kl_profile(config, pmt, thermal_var, grid, plateau_fraction);
}

double threshold_for_density_ratio(double ratio, const PmtParams& pmt,
                                   double thermal_var) {
  if (!(ratio > 0.0))
    throw NumericError("density ratio threshold needs ratio > 0");
  const LlrCoefficients c = gaussian_ratio_coefficients(pmt, thermal_var);
  // Solve a2 z^2 + a1 z + a0 = -log(ratio), larger root.
  const double target = -std::log(ratio);
  if (c.a2 == 0.0) return (target - c.a0) / c.a1;
  const double disc = c.a1 * c.a1 - 4.0 * c.a2 * (c.a0 - target);
  if (!(disc >= 0.0))
    throw NumericError("density ratio outside the admissible range");
  return (-c.a1 + std::sqrt(disc)) / (2.0 * c.a2);
}

KlThresholdBounds kl_threshold_bounds(const ChannelConfig& config,
                                      const PmtParams& pmt,
                                      double thermal_var) {
  config.validate();
  const double gt = config.gamma_t();
  const double gb = config.gamma_b();
  if (!(gb > 0.0 && gt < 1.0 && gb < gt))
    throw NumericError("kl threshold bounds need 0 < gamma_b < gamma_t < 1");

  // Maps a fire-rate derivative ratio c to the density-ratio constant of the
  // stationarity equation; non-positive results carry no constraint.
  auto ratio_map = [&](double c) {
    return (gt - c * gb) / (c * (1.0 - gb) + gt - 1.0);
  };
  const double slope_hi = (1.0 - std::log(gb / gt)) / (1.0 - gb / gt);
  const double idle_ratio = (1.0 - gb) / (1.0 - gt);
  const double slope_lo = std::log(idle_ratio) / (idle_ratio - 1.0);
  // Mirrored pair from the swapped divergence, via the reciprocal ratio.
  const double idle_ratio_sw = (1.0 - gt) / (1.0 - gb);
  const double slope_hi_sw =
      (1.0 - std::log(idle_ratio_sw)) / (1.0 - idle_ratio_sw);
  const double fire_ratio_sw = gt / gb;
  const double slope_lo_sw = std::log(fire_ratio_sw) / (fire_ratio_sw - 1.0);

  const double lower_candidates[2] = {ratio_map(slope_lo),
                                      ratio_map(1.0 / slope_hi_sw)};
  const double upper_candidates[2] = {ratio_map(slope_hi),
                                      ratio_map(1.0 / slope_lo_sw)};

  KlThresholdBounds bounds;
  auto consider = [&](double c, bool lower_side) {
    if (!(c > 0.0) || !std::isfinite(c)) return;
    double z = 0.0;
    try {
      z = threshold_for_density_ratio(c, pmt, thermal_var);
    } catch (const NumericError&) {
      return;  // constant outside the admissible ratio range: no constraint
    }
    if (lower_side) {
      if (!bounds.lower_valid || z < bounds.z_lower) {
        bounds.z_lower = z;
        bounds.c_lower = c;
      }
      bounds.lower_valid = true;
    } else {
      if (!bounds.upper_valid || z > bounds.z_upper) {
        bounds.z_upper = z;
        bounds.c_upper = c;
      }
      bounds.upper_valid = true;
    }
  };
  for (double c : lower_candidates) consider(c, true);
  for (double c : upper_candidates) consider(c, false);
  return bounds;
}

}  // namespace pmtlink
