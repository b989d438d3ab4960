#include "pmtlink/rate_bounds.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "pmtlink/math_util.hpp"
#include "pmtlink/quadrature.hpp"

namespace pmtlink {

namespace {

void check_pair(const CrossoverPair& pair) {
  if (!(pair.p01 >= 0.0) || !(pair.p01 <= 1.0) || !(pair.p11 >= 0.0) ||
      !(pair.p11 <= 1.0))
    throw std::domain_error("crossover probabilities must be in [0, 1]");
}

void check_prior(double w) {
  if (!(w > 0.0) || !(w < 1.0))
    throw std::domain_error("prior must satisfy 0 < w < 1");
}

}  // namespace

double RateApproximation::relative_gap() const {
  if (poisson_bits == 0.0) return 0.0;
  return std::abs(poisson_bits - single_photon_bits) / poisson_bits;
}

double binary_entropy(double p) {
  if (!(p >= 0.0) || !(p <= 1.0))
    throw std::domain_error("entropy argument must be in [0, 1]");
  if (p == 0.0 || p == 1.0) return 0.0;
  return -(p * std::log(p) + (1.0 - p) * std::log1p(-p)) / kLn2;
}

double binary_channel_rate(const CrossoverPair& pair, double prior_one) {
  check_pair(pair);
  check_prior(prior_one);
  double py1 = prior_one * pair.p11 + (1.0 - prior_one) * pair.p01;
  return binary_entropy(py1) - prior_one * binary_entropy(pair.p11) -
         (1.0 - prior_one) * binary_entropy(pair.p01);
}

double repeated_channel_rate(const CrossoverPair& pair, double prior_one,
                             int intervals) {
  check_pair(pair);
  check_prior(prior_one);
  if (intervals < 1) throw std::domain_error("intervals must be >= 1");
  const int m = intervals;
  const double lw1 = std::log(prior_one), lw0 = std::log1p(-prior_one);
  // Output sequences group by weight k; q_k is the probability of any single
  // sequence of weight k.
  auto log_seq = [m](double p, int k) {
    double lp = (k == 0) ? 0.0 : double(k) * std::log(p);
    double lq = (k == m) ? 0.0 : double(m - k) * std::log1p(-p);
    return lp + lq;  // -inf when p degenerate against k
  };
  double joint_entropy = 0.0;  // H(Y) in bits
  for (int k = 0; k <= m; ++k) {
    double l0 = lw0 + log_seq(pair.p01, k);
    double l1 = lw1 + log_seq(pair.p11, k);
    double lq = log_sum_exp(l0, l1);
    if (std::isinf(lq)) continue;  // q_k = 0 contributes nothing
    double lterm = log_binomial(std::uint64_t(m), std::uint64_t(k)) + lq;
    joint_entropy -= std::exp(lterm) * (lq / kLn2);
  }
  double cond = double(m) * (prior_one * binary_entropy(pair.p11) +
                             (1.0 - prior_one) * binary_entropy(pair.p01));
  return joint_entropy - cond;
}

CrossoverPair count_crossovers(const ChannelConfig& config) {
  config.validate();
  CrossoverPair pair{config.gamma_b(), config.gamma_t()};
  if (pair.p11 > 1.0)
    throw std::domain_error(
        "gamma_t > 1: per-interval rates outside the single-photon regime");
  return pair;
}

CrossoverPair threshold_crossovers(double z_th, const ChannelConfig& config,
                                   const PmtParams& pmt) {
  config.validate();
  pmt.validate();
  const double ae = pmt.pulse_amplitude();
  const double sigma0 = pmt.thermal_std_symbol;
  const double m = double(config.intervals);
  const double mixed_std = std::sqrt(pmt.thermal_var_symbol() / m + pmt.shot_var());
  auto t = [&](double gamma) {
    return (1.0 - gamma) * q_function(std::sqrt(m) * z_th / sigma0) +
           gamma * q_function((z_th - ae) / mixed_std);
  };
  CrossoverPair counts = count_crossovers(config);
  return CrossoverPair{t(counts.p01), t(counts.p11)};
}

namespace {

struct WindowDensities {
  std::vector<double> w0, w1;  // mixture weights under X=0 / X=1
  double ae, sv, tv;
  double lo, hi;  // integration range
};

WindowDensities window_densities(const ChannelConfig& config,
                                 const PmtParams& pmt, PdfModel model) {
  config.validate();
  pmt.validate();
  WindowDensities d;
  d.ae = pmt.pulse_amplitude();
  d.sv = pmt.shot_var();
  d.tv = pmt.interval_thermal_var(config.intervals);
  const double gb = config.gamma_b(), gt = config.gamma_t();
  if (model == PdfModel::single_photon) {
    if (gt > 1.0)
      throw std::domain_error("gamma_t > 1 outside the single-photon regime");
    d.w0 = {1.0 - gb, gb};
    d.w1 = {1.0 - gt, gt};
  } else {
    int n0 = poisson_truncation_count(gb), n1 = poisson_truncation_count(gt);
    int n = n0 > n1 ? n0 : n1;
    d.w0.resize(std::size_t(n) + 1);
    d.w1.resize(std::size_t(n) + 1);
    for (int k = 0; k <= n; ++k) {
      d.w0[std::size_t(k)] = poisson_pmf(gb, k);
      d.w1[std::size_t(k)] = poisson_pmf(gt, k);
    }
  }
  double n_top = double(d.w1.size() - 1);
  d.lo = -12.0 * std::sqrt(d.tv);
  d.hi = n_top * d.ae + 12.0 * std::sqrt(n_top * d.sv + d.tv);
  return d;
}

// Differential entropy of the density f over [lo, hi], in bits.
template <class F>
double entropy_bits(F&& f, double lo, double hi, double abs_tol) {
  auto integrand = [&](double z) {
    double p = f(z);
    if (p < 1e-300) return 0.0;
    return -p * std::log(p) / kLn2;
  };
  return integrate_or_throw(integrand, lo, hi, abs_tol);
}

double mi_from_densities(const WindowDensities& d, double prior_one,
                         double abs_tol) {
  auto pdf = [&](const std::vector<double>& w, double z) {
    double sum = 0.0;
    for (std::size_t n = 0; n < w.size(); ++n) {
      if (w[n] == 0.0) continue;
      double var = double(n) * d.sv + d.tv;
      double diff = z - double(n) * d.ae;
      sum += w[n] * std::exp(-0.5 * diff * diff / var) /
             std::sqrt(6.28318530717958647692 * var);
    }
    return sum;
  };
  auto p0 = [&](double z) { return pdf(d.w0, z); };
  auto p1 = [&](double z) { return pdf(d.w1, z); };
  auto pm = [&](double z) {
    return (1.0 - prior_one) * p0(z) + prior_one * p1(z);
  };
  double h_mix = entropy_bits(pm, d.lo, d.hi, abs_tol);
  double h0 = entropy_bits(p0, d.lo, d.hi, abs_tol);
  double h1 = entropy_bits(p1, d.lo, d.hi, abs_tol);
  return h_mix - (1.0 - prior_one) * h0 - prior_one * h1;
}

}  // namespace

double mutual_information_quadrature(const ChannelConfig& config,
                                     const PmtParams& pmt, PdfModel model,
                                     double abs_tol) {
  auto d = window_densities(config, pmt, model);
  return mi_from_densities(d, config.prior_one, abs_tol);
}

double thresholded_count_entropy(double z_th, const ChannelConfig& config,
                                 const PmtParams& pmt) {
  config.validate();
  pmt.validate();
  CrossoverPair counts = count_crossovers(config);
  const double w = config.prior_one;
  const double r1 = w * counts.p11 + (1.0 - w) * counts.p01;  // P(N_1 = 1)
  if (r1 <= 0.0) return 0.0;
  const double r0 = 1.0 - r1;
  const double m = double(config.intervals);
  const double ae = pmt.pulse_amplitude();
  // Detection probabilities of the per-interval threshold test.
  const double hit = q_function(
      (z_th - ae) / std::sqrt(pmt.shot_var() + pmt.thermal_var_symbol() / m));
  const double false_hit =
      q_function(std::sqrt(m) * z_th / pmt.thermal_std_symbol);
  const double p_pos = r1 * hit + r0 * false_hit;
  const double p_neg = 1.0 - p_pos;
  double h = 0.0;
  if (p_pos > 0.0) h += p_pos * binary_entropy(r1 * hit / p_pos);
  if (p_neg > 0.0) h += p_neg * binary_entropy(r1 * (1.0 - hit) / p_neg);
  return h;
}

RateApproximation rate_approximation_pair(const ChannelConfig& config,
                                          const PmtParams& pmt,
                                          double abs_tol) {
  RateApproximation out;
  out.poisson_bits =
      mutual_information_quadrature(config, pmt, PdfModel::poisson, abs_tol);
  out.single_photon_bits = mutual_information_quadrature(
      config, pmt, PdfModel::single_photon, abs_tol);
  return out;
}

RateBoundsReport transmission_rate_bounds(const ChannelConfig& config,
                                          const PmtParams& pmt, double z_th) {
  RateBoundsReport r;
  CrossoverPair counts = count_crossovers(config);
  CrossoverPair thresh = threshold_crossovers(z_th, config, pmt);
  r.upper_bits = repeated_channel_rate(counts, config.prior_one, config.intervals);
  r.lower_bits = repeated_channel_rate(thresh, config.prior_one, config.intervals);
  r.gap_bound_bits = double(config.intervals) *
                     thresholded_count_entropy(z_th, config, pmt);
  if (config.intervals == 1) {
    r.has_exact = true;
    r.exact_bits =
        mutual_information_quadrature(config, pmt, PdfModel::single_photon);
  }
  return r;
}

}  // namespace pmtlink
