#include "pmtlink/channel.hpp"

#include <cmath>
#include <stdexcept>

#include "pmtlink/math_util.hpp"

namespace pmtlink {

PmtParams PmtParams::normalized(double xi, double sigma0_over_ae) {
  PmtParams p;
  p.amplification = 1.0;
  p.electron_charge = 1.0;
  p.spreading_factor = xi;
  p.thermal_std_symbol = sigma0_over_ae;
  p.validate();
  return p;
}

PmtParams PmtParams::with_interval_thermal_std(double xi, double sigma0_interval,
                                               int intervals) {
  if (intervals < 1) throw std::domain_error("intervals must be >= 1");
  // Per-window variance sigma0_interval^2 corresponds to a per-symbol std of
  // sigma0_interval * sqrt(M) under white-noise scaling.
  return normalized(xi, sigma0_interval * std::sqrt(double(intervals)));
}

double PmtParams::thermal_std_from_circuit(double boltzmann, double temperature,
                                           double window_duration,
                                           double load_resistance) {
  if (boltzmann <= 0.0 || temperature <= 0.0 || window_duration <= 0.0 ||
      load_resistance <= 0.0)
    throw std::domain_error("circuit thermal-noise inputs must be positive");
  return std::sqrt(2.0 * boltzmann * temperature * window_duration /
                   load_resistance);
}

void PmtParams::validate() const {
  if (!(amplification > 0.0) || !(electron_charge > 0.0))
    throw std::domain_error("pulse amplitude factors must be positive");
  if (!(spreading_factor >= 0.0))
    throw std::domain_error("spreading factor must be >= 0");
  if (!(thermal_std_symbol > 0.0))
    throw std::domain_error("thermal noise std must be positive");
}

double ChannelConfig::eta() const {
  return std::log((1.0 - prior_one) / prior_one);
}

double ChannelConfig::snr_db() const {
  if (!(lambda_b > 0.0) || !(lambda_s > 0.0))
    throw std::domain_error("snr undefined unless lambda_s, lambda_b > 0");
  return 10.0 * std::log10(lambda_s / lambda_b);
}

ChannelConfig ChannelConfig::from_interval_rates(double gamma_t, double gamma_b,
                                                 int intervals,
                                                 double prior_one) {
  if (!(gamma_b >= 0.0) || !(gamma_t >= gamma_b))
    throw std::domain_error("need 0 <= gamma_b <= gamma_t");
  ChannelConfig c;
  c.intervals = intervals;
  c.lambda_b = gamma_b * double(intervals);
  c.lambda_s = (gamma_t - gamma_b) * double(intervals);
  c.prior_one = prior_one;
  c.validate();
  return c;
}

ChannelConfig ChannelConfig::from_snr_db(double gamma_t, double snr_db,
                                         int intervals, double prior_one) {
  // gamma_s / gamma_b = 10^(snr/10); gamma_t = gamma_s + gamma_b.
  double ratio = std::pow(10.0, snr_db / 10.0);
  double gamma_b = gamma_t / (1.0 + ratio);
  return from_interval_rates(gamma_t, gamma_b, intervals, prior_one);
}

void ChannelConfig::validate() const {
  if (!(lambda_s >= 0.0) || !(lambda_b >= 0.0))
    throw std::domain_error("photoelectron rates must be >= 0");
  if (intervals < 1) throw std::domain_error("intervals must be >= 1");
  if (!(prior_one > 0.0) || !(prior_one < 1.0))
    throw std::domain_error("prior must satisfy 0 < w < 1");
}

double mean_signal_photoelectrons(double optical_power, double link_gain,
                                  double quantum_efficiency,
                                  double symbol_duration,
                                  double photon_energy) {
  if (!(photon_energy > 0.0))
    throw std::domain_error("photon energy must be positive");
  if (optical_power < 0.0 || link_gain < 0.0 || quantum_efficiency < 0.0 ||
      symbol_duration < 0.0)
    throw std::domain_error("rate factors must be >= 0");
  return optical_power * link_gain * quantum_efficiency * symbol_duration /
         photon_energy;
}

double poisson_pmf(double mean, int n) {
  if (n < 0) return 0.0;
  if (!(mean >= 0.0)) throw std::domain_error("poisson mean must be >= 0");
  if (mean == 0.0) return n == 0 ? 1.0 : 0.0;
  if (n <= 20) {
    double p = std::exp(-mean);
    for (int i = 1; i <= n; ++i) p *= mean / double(i);
    return p;
  }
  return std::exp(double(n) * std::log(mean) - mean -
                  std::lgamma(double(n) + 1.0));
}

double gaussian_pdf(double z, double mean, double variance) {
  if (!(variance > 0.0))
    throw std::domain_error("gaussian variance must be positive");
  double d = z - mean;
  return std::exp(-0.5 * d * d / variance) /
         std::sqrt(6.28318530717958647692 * variance);
}

int poisson_truncation_count(double mean) {
  constexpr double kTailMass = 1e-12;
  int n = 0;
  double cum = poisson_pmf(mean, 0);
  while (n < 3 || cum < 1.0 - kTailMass) {
    ++n;
    cum += poisson_pmf(mean, n);
    if (n > 2000)
      throw std::domain_error("poisson mean too large for truncation search");
  }
  return n;
}

double mixture_output_pdf(double z, std::span<const double> weights,
                          const PmtParams& pmt, double thermal_var) {
  pmt.validate();
  if (!(thermal_var > 0.0))
    throw std::domain_error("thermal variance must be positive");
  const double ae = pmt.pulse_amplitude(), sv = pmt.shot_var();
  double sum = 0.0;
  for (std::size_t n = 0; n < weights.size(); ++n) {
    if (weights[n] == 0.0) continue;
    sum += weights[n] *
           gaussian_pdf(z, double(n) * ae, double(n) * sv + thermal_var);
  }
  return sum;
}

double pmt_output_pdf(double z, double mean_photons, const PmtParams& pmt,
                      double thermal_var) {
  int n_max = poisson_truncation_count(mean_photons);
  std::vector<double> w(std::size_t(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) w[std::size_t(n)] = poisson_pmf(mean_photons, n);
  return mixture_output_pdf(z, w, pmt, thermal_var);
}

double interval_output_pdf(double z, double gamma, const PmtParams& pmt,
                           int intervals) {
  if (intervals < 1) throw std::domain_error("intervals must be >= 1");
  return pmt_output_pdf(z, gamma, pmt, pmt.interval_thermal_var(intervals));
}

double single_photon_pdf(double z, double gamma, const PmtParams& pmt,
                         double thermal_var) {
  if (!(gamma >= 0.0) || !(gamma <= 1.0))
    throw std::domain_error("bernoulli rate must be in [0, 1]");
  const double w[2] = {1.0 - gamma, gamma};
  return mixture_output_pdf(z, w, pmt, thermal_var);
}

void sample_symbol_into(int bit, const ChannelConfig& config,
                        const PmtParams& pmt, RngState& rng,
                        SymbolSample& sample) {
  config.validate();
  pmt.validate();
  if (bit != 0 && bit != 1) throw std::domain_error("bit must be 0 or 1");
  const int m = config.intervals;
  const double gamma = bit ? config.gamma_t() : config.gamma_b();
  const double ae = pmt.pulse_amplitude(), sv = pmt.shot_var();
  const double tv = pmt.interval_thermal_var(m);
  sample.bit = bit;
  sample.counts.resize(std::size_t(m));
  sample.outputs.resize(std::size_t(m));
  for (int i = 0; i < m; ++i) {
    int n = sample_poisson(rng, gamma);
    double noise_std = std::sqrt(double(n) * sv + tv);
    sample.counts[std::size_t(i)] = n;
    sample.outputs[std::size_t(i)] =
        double(n) * ae + noise_std * sample_gaussian(rng);
  }
}

SymbolSample sample_symbol(int bit, const ChannelConfig& config,
                           const PmtParams& pmt, RngState& rng) {
  SymbolSample s;
  sample_symbol_into(bit, config, pmt, rng, s);
  return s;
}

}  // namespace pmtlink
