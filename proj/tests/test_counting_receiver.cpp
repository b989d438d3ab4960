#include <cmath>
#include <limits>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <doctest.h>

#include "pmtlink/channel.hpp"
#include "pmtlink/counting_receiver.hpp"
#include "pmtlink/errors.hpp"
#include "pmtlink/math_util.hpp"

using namespace pmtlink;
using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

namespace {

// Exact rational binomial lower tail P(B <= b), B ~ Binomial(m, p).
cpp_rational rational_binomial_cdf(int m, int b, const cpp_rational& p) {
  cpp_rational total = 0;
  const cpp_rational q = 1 - p;
  for (int k = 0; k <= b; ++k) {
    cpp_int comb = 1;
    for (int i = 0; i < k; ++i) {
      comb *= (m - i);
      comb /= (i + 1);
    }
    cpp_rational term = comb;
    for (int i = 0; i < k; ++i) term *= p;
    for (int i = 0; i < m - k; ++i) term *= q;
    total += term;
  }
  return total;
}

}  // namespace

TEST_CASE("log-domain binomial tails against direct summation") {
  const int m = 30;
  const double p = 0.23;
  for (int k : {0, 3, 7, 15, 29, 30}) {
    double direct = 0.0;
    for (int i = 0; i <= k; ++i)
      direct += std::exp(log_binomial_pmf(m, i, p));
    CHECK(std::exp(log_binomial_cdf(k, m, p)) ==
          doctest::Approx(direct).epsilon(1e-12));
    CHECK(std::exp(log_binomial_cdf(k, m, p)) +
              std::exp(log_binomial_sf(k, m, p)) ==
          doctest::Approx(1.0).epsilon(1e-13));
  }
  CHECK(log_binomial_cdf(m, m, p) == 0.0);
  CHECK(std::exp(log_binomial_sf(m, m, p)) == 0.0);
}

TEST_CASE("count_threshold: closed-form example and MAP optimality") {
  CHECK(count_threshold(0.1, 0.9, 10, 0.0) == 5);

  // The returned threshold minimizes the prior-weighted error over all
  // achievable count cuts.
  for (const auto& [p0, p1, w] :
       {std::tuple{0.05, 0.3, 0.5}, std::tuple{0.01, 0.2, 0.25},
        std::tuple{0.2, 0.8, 0.7}}) {
    const int m = 12;
    const double eta = std::log((1.0 - w) / w);
    const int b_star = count_threshold(p0, p1, m, eta);
    const double best =
        count_error_probs(p0, p1, m, b_star).total_error(w);
    for (int b = -1; b <= m; ++b) {
      const double err = count_error_probs(p0, p1, m, b).total_error(w);
      CHECK(best <= err + 1e-15);
    }
  }

  // Extreme priors clamp to the always-0 / always-1 rules.
  CHECK(count_threshold(0.4, 0.6, 10, 50.0) == 10);
  CHECK(count_threshold(0.4, 0.6, 10, -50.0) == -1);
}

TEST_CASE("count_error_probs: closed forms and degenerate thresholds") {
  // P(decide 0 | 1) with b_th = 0 is the no-fire probability (1-p1)^m.
  const CountErrorProbs two = count_error_probs(0.1, 0.5, 2, 0);
  CHECK(two.pe01() == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(two.pe10() == doctest::Approx(1.0 - 0.81).epsilon(1e-12));

  const CountErrorProbs always_one = count_error_probs(0.1, 0.5, 4, -1);
  CHECK(always_one.pe01() == 0.0);
  CHECK(always_one.pe10() == 1.0);
  const CountErrorProbs always_zero = count_error_probs(0.1, 0.5, 4, 4);
  CHECK(always_zero.pe01() == 1.0);
  CHECK(always_zero.pe10() == 0.0);
  CHECK(count_error_probs(0.1, 0.5, 4, 1).total_error(0.5) ==
        doctest::Approx(0.5 * count_error_probs(0.1, 0.5, 4, 1).pe01() +
                        0.5 * count_error_probs(0.1, 0.5, 4, 1).pe10()));
}

TEST_CASE("count_error_probs equals the exact rational oracle at M = 20") {
  const int m = 20;
  const cpp_rational p0(1, 8), p1(3, 8);
  for (int b : {0, 3, 10, 16, 19}) {
    const CountErrorProbs probs =
        count_error_probs(1.0 / 8.0, 3.0 / 8.0, m, b);
    const double pe01_exact =
        rational_binomial_cdf(m, b, p1).convert_to<double>();
    // Complement in exact arithmetic; converting first loses the far tail.
    const double pe10_exact =
        cpp_rational(1 - rational_binomial_cdf(m, b, p0)).convert_to<double>();
    CHECK(std::fabs(probs.pe01() - pe01_exact) <= 1e-12 * pe01_exact);
    CHECK(std::fabs(probs.pe10() - pe10_exact) <= 1e-12 * pe10_exact);
  }
}

TEST_CASE("log-domain tails stay accurate far below double underflow range") {
  // P(B <= 10), B ~ Binomial(200, 1/2): a ~1e-44 tail, exact as a rational.
  const int m = 200, b = 10;
  const cpp_rational tail = rational_binomial_cdf(m, b, cpp_rational(1, 2));
  const double log_exact = std::log(tail.convert_to<double>());
  const CountErrorProbs probs = count_error_probs(0.01, 0.5, m, b);
  CHECK(std::fabs(probs.log_pe01 - log_exact) < 1e-10 * std::fabs(log_exact));
}

TEST_CASE("kl_bernoulli values and edge cases") {
  CHECK(kl_bernoulli(0.5, 0.25) ==
        doctest::Approx(0.1438410362258904637).epsilon(1e-14));
  CHECK(kl_bernoulli(0.05, 0.1) ==
        doctest::Approx(0.01670650117876471394).epsilon(1e-13));
  CHECK(kl_bernoulli(0.3, 0.3) == 0.0);
  CHECK(kl_bernoulli(0.0, 0.2) ==
        doctest::Approx(-std::log(0.8)).epsilon(1e-14));
  CHECK(std::isinf(kl_bernoulli(0.3, 0.0)));
  CHECK(std::isinf(kl_bernoulli(0.3, 1.0)));
  CHECK(kl_bernoulli(0.0, 0.0) == 0.0);
  CHECK(kl_bernoulli(1.0, 1.0) == 0.0);
  CHECK(kl_bernoulli(0.2, 0.6) >= 0.0);
}

TEST_CASE("Stein exponent: the 0->1 tail decays at the divergence rate") {
  const double p0 = 0.05, p1 = 0.1;
  const int m = 5000;
  const int b = int(std::floor(m * p0));
  const CountErrorProbs probs = count_error_probs(p0, p1, m, b);
  const double exponent = -probs.log_pe01 / double(m);
  const double d = 0.01670650117876471394;  // D(p0 || p1) in nats
  CHECK(std::fabs(exponent - d) < 0.1 * d);
}

TEST_CASE("hard_decision_rates matches the erfc oracle") {
  const PmtParams pmt = PmtParams::normalized(0.1, 0.1);
  const CrossoverPair pair =
      hard_decision_rates(0.5, 0.1, 0.01, pmt, pmt.thermal_var_symbol());
  CHECK(pair.p01 == doctest::Approx(0.009998249024968935607).epsilon(1e-12));
  CHECK(pair.p11 == doctest::Approx(0.09997991038554244333).epsilon(1e-12));

  const ChannelConfig config =
      ChannelConfig::from_interval_rates(0.1, 0.01, 1, 0.5);
  const HardDecisionModel model =
      hard_decision_model(0.5, config, pmt, pmt.thermal_var_symbol());
  CHECK(model.p0 == doctest::Approx(pair.p01));
  CHECK(model.p1 == doctest::Approx(pair.p11));
  CHECK(model.intervals == 1);
  CHECK(model.p0 < model.p1);
}

TEST_CASE("small-noise fire rates converge to the pulse rates") {
  const ChannelConfig config = ChannelConfig::from_snr_db(0.01, 20.0, 1000, 0.5);
  const PmtParams pmt = PmtParams::with_interval_thermal_std(0.02, 0.02, 1000);
  const double tv = pmt.interval_thermal_var(1000);
  for (double z = 0.45; z <= 0.901; z += 0.05) {
    const CrossoverPair pair =
        hard_decision_rates(z, config.gamma_t(), config.gamma_b(), pmt, tv);
    CHECK(std::fabs(pair.p01 - config.gamma_b()) < 1e-3);
    CHECK(std::fabs(pair.p11 - config.gamma_t()) < 1e-3);
  }
}

TEST_CASE("threshold_for_density_ratio satisfies its defining relation") {
  const PmtParams pmt = PmtParams::with_interval_thermal_std(0.1, 0.1, 1000);
  const double tv = pmt.interval_thermal_var(1000);
  double prev = std::numeric_limits<double>::infinity();
  for (double c : {0.05, 0.2, 0.5, 1.0, 2.0, 5.0, 20.0}) {
    const double z = threshold_for_density_ratio(c, pmt, tv);
    const double ratio = gaussian_pdf(z, 0.0, tv) /
                         gaussian_pdf(z, 1.0, tv + pmt.shot_var());
    CHECK(std::fabs(ratio - c) <= 1e-8 * c);
    CHECK(z < prev);  // decreasing in the ratio constant
    prev = z;
  }

  // Zero shot noise: the quadratic degenerates to a linear equation.
  const PmtParams no_shot = PmtParams::with_interval_thermal_std(0.0, 0.1, 1000);
  const double tv0 = no_shot.interval_thermal_var(1000);
  for (double c : {0.3, 1.0, 3.0}) {
    const double z = threshold_for_density_ratio(c, no_shot, tv0);
    const double ratio =
        gaussian_pdf(z, 0.0, tv0) / gaussian_pdf(z, 1.0, tv0);
    CHECK(std::fabs(ratio - c) <= 1e-8 * c);
  }
}

TEST_CASE("min_kl_objective is the smaller directed divergence") {
  const ChannelConfig config = ChannelConfig::from_snr_db(0.01, 17.0, 1000, 0.5);
  const PmtParams pmt = PmtParams::with_interval_thermal_std(0.1, 0.1, 1000);
  const double tv = pmt.interval_thermal_var(1000);
  for (double z : {0.3, 0.5, 0.7}) {
    const HardDecisionModel model = hard_decision_model(z, config, pmt, tv);
    const double ref = std::min(kl_bernoulli(model.p0, model.p1),
                                kl_bernoulli(model.p1, model.p0));
    CHECK(min_kl_objective(z, config, pmt, tv) ==
          doctest::Approx(ref).epsilon(1e-14));
  }
}

TEST_CASE("threshold searches beat a fresh grid scan") {
  const ChannelConfig config = ChannelConfig::from_snr_db(0.01, 20.0, 1000, 0.5);
  const PmtParams pmt = PmtParams::with_interval_thermal_std(0.1, 0.1, 1000);
  const double tv = pmt.interval_thermal_var(1000);

  const ThresholdSearch by_error = optimize_threshold_by_error(config, pmt, tv);
  CHECK(by_error.z_th > 0.0);
  CHECK(by_error.z_th < pmt.pulse_amplitude());
  CHECK_FALSE(by_error.flat_objective);
  const ThresholdSearch by_kl = optimize_threshold_by_kl(config, pmt, tv);
  CHECK(by_kl.objective ==
        doctest::Approx(min_kl_objective(by_kl.z_th, config, pmt, tv)));
  for (int i = 1; i <= 200; ++i) {
    const double z = pmt.pulse_amplitude() * i / 201.0;
    CHECK(by_error.objective <=
          make_count_detector(z, config, pmt, tv).total_error() + 1e-15);
    CHECK(by_kl.objective >= min_kl_objective(z, config, pmt, tv) - 1e-12);
  }

  CHECK_THROWS_AS(optimize_threshold_by_error(config, pmt, tv, 50), UsageError);
  CHECK_THROWS_AS(optimize_threshold_by_kl(config, pmt, tv, 50), UsageError);
}

TEST_CASE("kl profile: grid layout, argmax bookkeeping, plateau measure") {
  const ChannelConfig config = ChannelConfig::from_snr_db(0.01, 20.0, 1000, 0.5);
  const PmtParams pmt = PmtParams::with_interval_thermal_std(0.05, 0.05, 1000);
  const double tv = pmt.interval_thermal_var(1000);
  const KlProfile profile = sensitivity_profile(config, pmt, tv, 500, 0.95);
  REQUIRE(profile.z_grid.size() == 500);
  REQUIRE(profile.min_kl_nats.size() == 500);
  double max_seen = 0.0;
  for (std::size_t i = 0; i < profile.z_grid.size(); ++i) {
    CHECK(profile.min_kl_nats[i] ==
          doctest::Approx(std::min(profile.d01_nats[i], profile.d10_nats[i])));
    max_seen = std::max(max_seen, profile.min_kl_nats[i]);
  }
  CHECK(profile.max_min_kl == doctest::Approx(max_seen));
  CHECK(profile.argmax_z > 0.0);
  CHECK(profile.argmax_z < 1.0);
  CHECK(profile.plateau_width > 0.0);
  CHECK(profile.plateau_width <= 1.0);
  CHECK(profile.plateau_fraction == 0.95);
}

TEST_CASE("kl_threshold_bounds bracket the grid-search optimum") {
  const PmtParams pmt = PmtParams::with_interval_thermal_std(0.1, 0.1, 1000);
  const double tv = pmt.interval_thermal_var(1000);
  for (double snr : {10.0, 14.0, 20.0}) {
    const ChannelConfig config = ChannelConfig::from_snr_db(0.01, snr, 1000, 0.5);
    const KlThresholdBounds bounds = kl_threshold_bounds(config, pmt, tv);
    REQUIRE(bounds.lower_valid);
    REQUIRE(bounds.upper_valid);
    CHECK(bounds.z_lower < bounds.z_upper);
    const ThresholdSearch best = optimize_threshold_by_kl(config, pmt, tv);
    CHECK(best.z_th >= bounds.z_lower - 1e-9);
    CHECK(best.z_th <= bounds.z_upper + 1e-9);
  }
}

TEST_CASE("make_count_detector wires the pieces together") {
  const ChannelConfig config =
      ChannelConfig::from_interval_rates(0.1, 0.01, 10, 0.5);
  const PmtParams pmt = PmtParams::with_interval_thermal_std(0.1, 0.1, 10);
  const double tv = pmt.interval_thermal_var(10);
  const CountDetector det = make_count_detector(0.5, config, pmt, tv);
  CHECK(det.hard.z_th == 0.5);
  CHECK(det.b_th >= -1);
  CHECK(det.b_th <= 10);
  CHECK(det.total_error() > 0.0);
  CHECK(det.total_error() < 0.5);

  const std::vector<double> none(10, 0.0);
  const std::vector<double> all(10, 1.0);
  CHECK(det.detect(none) == 0);
  CHECK(det.detect(all) == 1);
}
