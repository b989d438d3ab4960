#pragma once

#include <span>
#include <vector>

#include "pmtlink/rng.hpp"

namespace pmtlink {

// PMT front-end parameters. thermal_std_symbol is the thermal noise standard
// deviation accumulated over one whole symbol; a window of 1/M of the symbol
// sees variance thermal_var_symbol()/M (white-noise scaling).
struct PmtParams {
  double amplification = 1.0;       // A, electron multiplier gain
  double electron_charge = 1.0;     // e, charge per photoelectron (signal units)
  double spreading_factor = 0.1;    // xi, shot noise std per photoelectron / Ae
  double thermal_std_symbol = 0.1;  // sigma0 over a full symbol

  double pulse_amplitude() const { return amplification * electron_charge; }
  double shot_std() const { return spreading_factor * pulse_amplitude(); }
  double shot_var() const { return shot_std() * shot_std(); }
  double thermal_var_symbol() const { return thermal_std_symbol * thermal_std_symbol; }
  double interval_thermal_var(int intervals) const {
    return thermal_var_symbol() / double(intervals);
  }

  // Unit-amplitude parameterization: Ae = 1, so sigma0 is given relative to Ae.
  static PmtParams normalized(double xi, double sigma0_over_ae);
  // Same, but sigma0 names the thermal std of one of `intervals` windows.
  static PmtParams with_interval_thermal_std(double xi, double sigma0_interval,
                                             int intervals);
  // sigma0 = sqrt(2 k T tau / R) for a window of duration tau.
  static double thermal_std_from_circuit(double boltzmann, double temperature,
                                         double window_duration,
                                         double load_resistance);

  void validate() const;  // throws std::domain_error
};

// Binary-input channel: per symbol, lambda_s signal photoelectrons on top of
// lambda_b background, observed over `intervals` equal windows.
struct ChannelConfig {
  double lambda_s = 9.9009900990099;    // mean signal photoelectrons (X=1)
  double lambda_b = 0.099009900990099;  // mean background photoelectrons
  int intervals = 1000;                 // M
  double prior_one = 0.5;               // w = P(X=1)

  double gamma_t() const { return (lambda_s + lambda_b) / double(intervals); }
  double gamma_b() const { return lambda_b / double(intervals); }
  double eta() const;  // MAP decision offset log((1-w)/w), nats
  double snr_db() const;

  static ChannelConfig from_interval_rates(double gamma_t, double gamma_b,
                                           int intervals, double prior_one);
  // gamma_t per interval plus SNR = 10 log10(lambda_s/lambda_b).
  static ChannelConfig from_snr_db(double gamma_t, double snr_db, int intervals,
                                   double prior_one);

  void validate() const;  // throws std::domain_error
};

struct SymbolSample {
  int bit = 0;
  std::vector<int> counts;      // photoelectrons per interval
  std::vector<double> outputs;  // PMT output per interval
};

// Mean detected photoelectrons per symbol: P g eta tau / E_photon.
double mean_signal_photoelectrons(double optical_power, double link_gain,
                                  double quantum_efficiency,
                                  double symbol_duration, double photon_energy);

double poisson_pmf(double mean, int n);
double gaussian_pdf(double z, double mean, double variance);

// Smallest truncation order with Poisson upper tail < 1e-12, floored at 3.
int poisson_truncation_count(double mean);

// Mixture density with explicit component weights: component n is
// N(n*Ae, n*sigma^2 + thermal_var).
double mixture_output_pdf(double z, std::span<const double> weights,
                          const PmtParams& pmt, double thermal_var);

// PMT output density for Poisson(mean_photons) input over one window.
double pmt_output_pdf(double z, double mean_photons, const PmtParams& pmt,
                      double thermal_var);

// Density of one of M intervals given the per-interval pulse rate gamma.
double interval_output_pdf(double z, double gamma, const PmtParams& pmt,
                           int intervals);

// Bernoulli (at most one photoelectron) approximation of the window density.
double single_photon_pdf(double z, double gamma, const PmtParams& pmt,
                         double thermal_var);

// Draws counts and outputs for all M intervals of one symbol; true Poisson law.
SymbolSample sample_symbol(int bit, const ChannelConfig& config,
                           const PmtParams& pmt, RngState& rng);
// Allocation-free variant reusing the sample's buffers.
void sample_symbol_into(int bit, const ChannelConfig& config,
                        const PmtParams& pmt, RngState& rng,
                        SymbolSample& sample);

}  // namespace pmtlink
