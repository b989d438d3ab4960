#include <cmath>
#include <vector>

#include <doctest.h>

#include "pmtlink/channel.hpp"
#include "pmtlink/quadrature.hpp"

using namespace pmtlink;

TEST_CASE("poisson_pmf closed-form values") {
  CHECK(poisson_pmf(0.01, 0) == doctest::Approx(std::exp(-0.01)).epsilon(1e-15));
  CHECK(poisson_pmf(0.01, 2) ==
        doctest::Approx(std::exp(-0.01) * 0.01 * 0.01 / 2.0).epsilon(1e-14));
  CHECK(poisson_pmf(2.5, 3) ==
        doctest::Approx(std::exp(-2.5) * 2.5 * 2.5 * 2.5 / 6.0).epsilon(1e-14));
  CHECK(poisson_pmf(0.0, 0) == 1.0);
  CHECK(poisson_pmf(0.0, 1) == 0.0);
}

TEST_CASE("poisson_truncation_count keeps the tail below 1e-12") {
  for (double mean : {1e-4, 0.01, 0.1, 1.0, 5.0, 20.0}) {
    const int n = poisson_truncation_count(mean);
    CHECK(n >= 3);
    // Components 0..n are kept inclusive.
    double head = 0.0;
    for (int k = 0; k <= n; ++k) head += poisson_pmf(mean, k);
    CHECK(1.0 - head < 1e-12);
    // One order fewer must not already satisfy the bound (minimality), except
    // at the floor where minimality is overridden.
    if (n > 3) {
      double head1 = head - poisson_pmf(mean, n);
      CHECK(1.0 - head1 >= 1e-12);
    }
  }
}

TEST_CASE("gaussian_pdf matches the explicit formula") {
  for (double z : {-1.0, 0.0, 0.3, 2.0}) {
    const double mean = 0.25, var = 0.04;
    const double ref = std::exp(-(z - mean) * (z - mean) / (2.0 * var)) /
                       std::sqrt(2.0 * M_PI * var);
    CHECK(gaussian_pdf(z, mean, var) == doctest::Approx(ref).epsilon(1e-14));
  }
}

TEST_CASE("pmt_output_pdf equals the explicit truncated mixture") {
  const PmtParams pmt = PmtParams::normalized(0.1, 0.1);
  const double tv = pmt.thermal_var_symbol();
  const double mean = 0.7;
  const int n_max = poisson_truncation_count(mean);
  for (double z : {-0.5, 0.0, 0.4, 1.0, 2.3}) {
    double ref = 0.0;
    for (int n = 0; n < n_max; ++n)
      ref += poisson_pmf(mean, n) *
             gaussian_pdf(z, n * pmt.pulse_amplitude(),
                          n * pmt.shot_var() + tv);
    CHECK(pmt_output_pdf(z, mean, pmt, tv) ==
          doctest::Approx(ref).epsilon(1e-12));
  }
}

TEST_CASE("single_photon_pdf is the two-component Bernoulli mixture") {
  const PmtParams pmt = PmtParams::normalized(0.1, 0.05);
  const double tv = pmt.thermal_var_symbol();
  const double gamma = 0.02;
  for (double z : {-0.2, 0.0, 0.5, 1.0}) {
    const double ref =
        (1.0 - gamma) * gaussian_pdf(z, 0.0, tv) +
        gamma * gaussian_pdf(z, pmt.pulse_amplitude(), tv + pmt.shot_var());
    CHECK(single_photon_pdf(z, gamma, pmt, tv) ==
          doctest::Approx(ref).epsilon(1e-14));
  }
}

TEST_CASE("window pdfs integrate to one") {
  const PmtParams pmt = PmtParams::normalized(0.1, 0.1);
  const int m = 10;
  const double tv = pmt.interval_thermal_var(m);
  const double gamma = 0.3;
  // Cover every kept mixture component with an 8-sigma margin.
  const int n_max = poisson_truncation_count(gamma);
  const double lo = -1.0;
  const double hi = n_max * pmt.pulse_amplitude() +
                    8.0 * std::sqrt(n_max * pmt.shot_var() + tv);
  const double total_poisson = integrate_or_throw(
      [&](double z) { return interval_output_pdf(z, gamma, pmt, m); }, lo, hi,
      1e-10);
  CHECK(std::fabs(total_poisson - 1.0) < 1e-8);
  const double total_single = integrate_or_throw(
      [&](double z) { return single_photon_pdf(z, 0.02, pmt, tv); }, lo, hi,
      1e-10);
  CHECK(std::fabs(total_single - 1.0) < 1e-8);
}

TEST_CASE("interval_output_pdf is pmt_output_pdf at per-window scale") {
  const PmtParams pmt = PmtParams::normalized(0.1, 0.1);
  const int m = 100;
  const double gamma = 0.01;
  for (double z : {-0.05, 0.0, 0.5, 1.0})
    CHECK(interval_output_pdf(z, gamma, pmt, m) ==
          doctest::Approx(pmt_output_pdf(z, gamma, pmt,
                                         pmt.interval_thermal_var(m)))
              .epsilon(1e-14));
}

TEST_CASE("channel config constructors and invariants") {
  const ChannelConfig c = ChannelConfig::from_snr_db(0.01, 20.0, 1000, 0.5);
  CHECK(c.gamma_t() == doctest::Approx(0.01).epsilon(1e-14));
  CHECK(c.snr_db() == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(c.lambda_s / c.lambda_b == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(c.gamma_b() == doctest::Approx(0.01 / 101.0).epsilon(1e-12));
  CHECK(c.eta() == doctest::Approx(0.0));

  const ChannelConfig d =
      ChannelConfig::from_interval_rates(0.05, 0.002, 50, 0.25);
  CHECK(d.gamma_t() == doctest::Approx(0.05).epsilon(1e-14));
  CHECK(d.gamma_b() == doctest::Approx(0.002).epsilon(1e-14));
  CHECK(d.eta() == doctest::Approx(std::log(3.0)).epsilon(1e-14));

  CHECK_THROWS_AS(ChannelConfig::from_interval_rates(0.002, 0.05, 50, 0.5),
                  std::domain_error);
  ChannelConfig bad = c;
  bad.prior_one = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
  bad = c;
  bad.intervals = 0;
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
}

TEST_CASE("pmt parameter constructors") {
  const PmtParams a = PmtParams::normalized(0.1, 0.2);
  CHECK(a.pulse_amplitude() == 1.0);
  CHECK(a.shot_std() == doctest::Approx(0.1));
  CHECK(a.thermal_std_symbol == doctest::Approx(0.2));

  // Interval convention: sigma0 names one of M windows.
  const PmtParams b = PmtParams::with_interval_thermal_std(0.1, 0.2, 1000);
  CHECK(b.interval_thermal_var(1000) == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(b.thermal_var_symbol() == doctest::Approx(40.0).epsilon(1e-12));

  CHECK(PmtParams::thermal_std_from_circuit(2.0, 3.0, 5.0, 4.0) ==
        doctest::Approx(std::sqrt(2.0 * 2.0 * 3.0 * 5.0 / 4.0)));

  PmtParams bad = a;
  bad.thermal_std_symbol = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
}

TEST_CASE("mean_signal_photoelectrons formula") {
  CHECK(mean_signal_photoelectrons(2.0, 0.5, 0.25, 4.0, 0.125) ==
        doctest::Approx(2.0 * 0.5 * 0.25 * 4.0 / 0.125));
}

TEST_CASE("sample_symbol moments track the channel law") {
  const ChannelConfig config = ChannelConfig::from_snr_db(0.05, 17.0, 50, 0.5);
  const PmtParams pmt = PmtParams::normalized(0.1, 0.1);
  RngState rng(77);
  const int symbols = 4000;
  double count_sum_1 = 0.0, output_sum_1 = 0.0;
  long draws_1 = 0;
  for (int i = 0; i < symbols; ++i) {
    const SymbolSample s = sample_symbol(1, config, pmt, rng);
    REQUIRE(s.counts.size() == std::size_t(config.intervals));
    REQUIRE(s.outputs.size() == std::size_t(config.intervals));
    for (int c : s.counts) count_sum_1 += c;
    for (double z : s.outputs) output_sum_1 += z;
    draws_1 += config.intervals;
  }
  // Per-window photoelectron mean gamma_t, output mean gamma_t * Ae.
  const double mean_count = count_sum_1 / double(draws_1);
  const double se_count = std::sqrt(config.gamma_t() / double(draws_1));
  CHECK(std::fabs(mean_count - config.gamma_t()) < 4.0 * se_count);
  const double mean_out = output_sum_1 / double(draws_1);
  CHECK(std::fabs(mean_out - config.gamma_t() * pmt.pulse_amplitude()) <
        4.0 * se_count * pmt.pulse_amplitude() + 4.0 * 0.1 / std::sqrt(double(draws_1)));

  // Bit 0 windows carry only the background rate.
  double count_sum_0 = 0.0;
  for (int i = 0; i < symbols; ++i) {
    const SymbolSample s = sample_symbol(0, config, pmt, rng);
    for (int c : s.counts) count_sum_0 += c;
  }
  const double mean_count_0 = count_sum_0 / double(draws_1);
  const double se_count_0 = std::sqrt(config.gamma_b() / double(draws_1));
  CHECK(std::fabs(mean_count_0 - config.gamma_b()) < 4.0 * se_count_0);
}

TEST_CASE("sample_symbol_into reproduces sample_symbol exactly") {
  const ChannelConfig config = ChannelConfig::from_snr_db(0.02, 14.0, 25, 0.5);
  const PmtParams pmt = PmtParams::normalized(0.1, 0.15);
  RngState rng_a(5), rng_b(5);
  SymbolSample reused;
  for (int i = 0; i < 50; ++i) {
    const int bit = i & 1;
    const SymbolSample fresh = sample_symbol(bit, config, pmt, rng_a);
    sample_symbol_into(bit, config, pmt, rng_b, reused);
    REQUIRE(fresh.counts == reused.counts);
    REQUIRE(fresh.outputs == reused.outputs);
    CHECK(fresh.bit == reused.bit);
  }
}
