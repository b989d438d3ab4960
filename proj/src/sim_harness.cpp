#include "pmtlink/sim_harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <sstream>
#include <thread>

#include "pmtlink/errors.hpp"
#include "pmtlink/math_util.hpp"

namespace pmtlink {

namespace {

const char* kind_name(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::exact_llr: return "exact";
    case DetectorKind::piecewise_linear: return "linear";
    case DetectorKind::piecewise_cubic: return "cubic";
    case DetectorKind::counting: return "counting";
  }
  return "unknown";
}

const char* rule_name(ThresholdRule rule) {
  switch (rule) {
    case ThresholdRule::fixed: return "fixed";
    case ThresholdRule::error_optimal: return "error-optimal";
    case ThresholdRule::kl_optimal: return "kl-optimal";
  }
  return "unknown";
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

}  // namespace

void TrialConfig::validate() const {
  channel.validate();
  pmt.validate();
  if (num_symbols < 1) throw UsageError("num_symbols must be >= 1");
  if (chunk_size < 1) throw UsageError("chunk_size must be >= 1");
  if (detectors.empty()) throw UsageError("at least one detector is required");
  for (const DetectorSpec& spec : detectors) {
    if (spec.kind == DetectorKind::counting &&
        spec.rule == ThresholdRule::fixed && !(spec.z_th > 0.0))
      throw UsageError("fixed counting detector needs z_th > 0");
  }
}

std::string TrialConfig::canonical_text() const {
  std::ostringstream out;
  out << "trial-config v1\n";
  out << "lambda_s = " << format_double(channel.lambda_s) << '\n';
  out << "lambda_b = " << format_double(channel.lambda_b) << '\n';
  out << "intervals = " << channel.intervals << '\n';
  out << "prior_one = " << format_double(channel.prior_one) << '\n';
  out << "amplification = " << format_double(pmt.amplification) << '\n';
  out << "electron_charge = " << format_double(pmt.electron_charge) << '\n';
  out << "spreading_factor = " << format_double(pmt.spreading_factor) << '\n';
  out << "thermal_std_symbol = " << format_double(pmt.thermal_std_symbol) << '\n';
  out << "num_symbols = " << num_symbols << '\n';
  out << "master_seed = " << master_seed << '\n';
  out << "chunk_size = " << chunk_size << '\n';
  for (const DetectorSpec& spec : detectors) {
    out << "detector = " << kind_name(spec.kind) << ' ' << rule_name(spec.rule)
        << ' ' << format_double(spec.z_th) << ' ' << spec.label << '\n';
  }
  return out.str();
}

std::uint64_t TrialConfig::config_hash() const {
  return fnv1a64(canonical_text());
}

namespace {

struct BuiltDetector {
  DetectorSpec spec;
  std::string label;
  PiecewiseDetector piecewise;
  CountDetector counter;
  double resolved_z_th = 0.0;
};

std::vector<BuiltDetector> build_detectors(const TrialConfig& config) {
  const double tv =
      config.pmt.interval_thermal_var(config.channel.intervals);
  std::vector<BuiltDetector> built;
  built.reserve(config.detectors.size());
  for (const DetectorSpec& spec : config.detectors) {
    BuiltDetector d;
    d.spec = spec;
    d.label = spec.label.empty() ? kind_name(spec.kind) : spec.label;
    switch (spec.kind) {
      case DetectorKind::exact_llr:
        break;
      case DetectorKind::piecewise_linear:
        d.piecewise = fit_linear_detector(config.channel, config.pmt);
        break;
      case DetectorKind::piecewise_cubic:
        d.piecewise = fit_cubic_detector(config.channel, config.pmt);
        break;
      case DetectorKind::counting: {
        double z_th = spec.z_th;
        if (spec.rule == ThresholdRule::error_optimal)
          z_th = optimize_threshold_by_error(config.channel, config.pmt, tv).z_th;
        else if (spec.rule == ThresholdRule::kl_optimal)
          z_th = optimize_threshold_by_kl(config.channel, config.pmt, tv).z_th;
        d.counter = make_count_detector(z_th, config.channel, config.pmt, tv);
        d.resolved_z_th = z_th;
        break;
      }
    }
    built.push_back(std::move(d));
  }
  return built;
}

struct Tally {
  std::vector<std::int64_t> errors;
  std::vector<std::int64_t> disc_a_wrong;  // per pair: a errs, b correct
  std::vector<std::int64_t> disc_b_wrong;

  Tally(std::size_t detectors, std::size_t pairs)
      : errors(detectors, 0), disc_a_wrong(pairs, 0), disc_b_wrong(pairs, 0) {}

  void merge(const Tally& other) {
    for (std::size_t i = 0; i < errors.size(); ++i)
      errors[i] += other.errors[i];
    for (std::size_t i = 0; i < disc_a_wrong.size(); ++i) {
      disc_a_wrong[i] += other.disc_a_wrong[i];
      disc_b_wrong[i] += other.disc_b_wrong[i];
    }
  }
};

}  // namespace

TrialReport run_trials(const TrialConfig& config, int workers) {
  config.validate();
  if (workers < 1) throw UsageError("workers must be >= 1");
  const auto start = std::chrono::steady_clock::now();

  const std::vector<BuiltDetector> bank = build_detectors(config);
  const std::size_t num_detectors = bank.size();
  std::vector<std::pair<std::size_t, std::size_t>> pair_index;
  for (std::size_t a = 0; a < num_detectors; ++a)
    for (std::size_t b = a + 1; b < num_detectors; ++b)
      pair_index.emplace_back(a, b);

  const std::int64_t chunks =
      (config.num_symbols + config.chunk_size - 1) / config.chunk_size;

  std::atomic<std::int64_t> next_chunk{0};
  std::mutex merge_mutex;
  Tally total(num_detectors, pair_index.size());

  auto worker_loop = [&]() {
    Tally local(num_detectors, pair_index.size());
    SymbolSample sample;
    std::vector<int> wrong(num_detectors, 0);
    for (;;) {
      const std::int64_t chunk = next_chunk.fetch_add(1);
      if (chunk >= chunks) break;
      RngState rng(chunk_seed(config.master_seed,
                              static_cast<std::uint64_t>(chunk)));
      const std::int64_t first = chunk * config.chunk_size;
      const std::int64_t last =
          std::min<std::int64_t>(first + config.chunk_size, config.num_symbols);
      for (std::int64_t s = first; s < last; ++s) {
        const int bit =
            (uniform01(rng) <= config.channel.prior_one) ? 1 : 0;
        sample_symbol_into(bit, config.channel, config.pmt, rng, sample);
        for (std::size_t d = 0; d < num_detectors; ++d) {
          int decision = 0;
          const BuiltDetector& det = bank[d];
          switch (det.spec.kind) {
            case DetectorKind::exact_llr:
              decision = detect_exact(sample.outputs, config.channel, config.pmt);
              break;
            case DetectorKind::piecewise_linear:
            case DetectorKind::piecewise_cubic:
              decision = detect_piecewise(sample.outputs, det.piecewise,
                                          config.channel, config.pmt);
              break;
            case DetectorKind::counting:
              decision = det.counter.detect(sample.outputs);
              break;
          }
          wrong[d] = (decision != bit) ? 1 : 0;
          local.errors[d] += wrong[d];
        }
        for (std::size_t p = 0; p < pair_index.size(); ++p) {
          const auto [a, b] = pair_index[p];
          local.disc_a_wrong[p] += (wrong[a] && !wrong[b]) ? 1 : 0;
          local.disc_b_wrong[p] += (!wrong[a] && wrong[b]) ? 1 : 0;
        }
      }
    }
    const std::lock_guard<std::mutex> lock(merge_mutex);
    total.merge(local);
  };

  const int spawn = static_cast<int>(
      std::min<std::int64_t>(workers, std::max<std::int64_t>(chunks, 1)));
  if (spawn <= 1) {
    worker_loop();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(spawn));
    for (int t = 0; t < spawn; ++t) pool.emplace_back(worker_loop);
    for (std::thread& t : pool) t.join();
  }

  TrialReport report;
  report.num_symbols = config.num_symbols;
  report.master_seed = config.master_seed;
  report.config_hash = config.config_hash();
  const double n = static_cast<double>(config.num_symbols);
  for (std::size_t d = 0; d < num_detectors; ++d) {
    DetectorResult r;
    r.label = bank[d].label;
    r.error_count = total.errors[d];
    r.error_rate = static_cast<double>(total.errors[d]) / n;
    const auto [lo, hi] = wilson_ci95(total.errors[d], config.num_symbols);
    r.ci_lo = lo;
    r.ci_hi = hi;
    r.resolved_z_th = bank[d].resolved_z_th;
    report.detectors.push_back(std::move(r));
  }
  for (std::size_t p = 0; p < pair_index.size(); ++p) {
    PairComparison cmp;
    cmp.index_a = pair_index[p].first;
    cmp.index_b = pair_index[p].second;
    cmp.discordant_a_wrong = total.disc_a_wrong[p];
    cmp.discordant_b_wrong = total.disc_b_wrong[p];
    const double diff_count = static_cast<double>(cmp.discordant_a_wrong -
                                                  cmp.discordant_b_wrong);
    cmp.error_diff = diff_count / n;
    const double disc = static_cast<double>(cmp.discordant_a_wrong +
                                            cmp.discordant_b_wrong);
    const double var = disc - diff_count * diff_count / n;
    cmp.paired_z = (var > 0.0) ? diff_count / std::sqrt(var) : 0.0;
    cmp.significant_3se = std::abs(cmp.paired_z) > 3.0;
    report.pairs.push_back(cmp);
  }
  report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

std::string TrialReport::to_record() const {
  std::ostringstream out;
  out << "trial-report v1\n";
  out << "num_symbols " << num_symbols << '\n';
  out << "master_seed " << master_seed << '\n';
  out << "config_hash " << config_hash << '\n';
  for (const DetectorResult& d : detectors) {
    out << "detector " << d.label << " errors " << d.error_count << " rate "
        << format_double(d.error_rate) << " ci95 ["
        << format_double(d.ci_lo) << ", " << format_double(d.ci_hi) << ']';
    if (d.resolved_z_th > 0.0)
      out << " z_th " << format_double(d.resolved_z_th);
    out << '\n';
  }
  for (const PairComparison& p : pairs) {
    out << "pair " << detectors[p.index_a].label << '/'
        << detectors[p.index_b].label << " diff "
        << format_double(p.error_diff) << " paired_z "
        << format_double(p.paired_z) << " discordant "
        << p.discordant_a_wrong << '+' << p.discordant_b_wrong
        << (p.significant_3se ? " significant" : " not-significant") << '\n';
  }
  return out.str();
}

std::string compare_detectors(const TrialReport& report) {
  if (report.detectors.size() < 2)
    throw UsageError("comparison needs at least two detectors");
  std::vector<std::size_t> order(report.detectors.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return report.detectors[a].error_rate < report.detectors[b].error_rate;
  });
  std::ostringstream out;
  out << "detectors by error rate:\n";
  for (std::size_t i : order) {
    const DetectorResult& d = report.detectors[i];
    out << "  " << d.label << "  rate " << format_double(d.error_rate)
        << "  ci95 [" << format_double(d.ci_lo) << ", "
        << format_double(d.ci_hi) << "]\n";
  }
  out << "paired differences (same noise realizations):\n";
  for (const PairComparison& p : report.pairs) {
    out << "  " << report.detectors[p.index_a].label << " vs "
        << report.detectors[p.index_b].label << "  diff "
        << format_double(p.error_diff) << "  z "
        << format_double(p.paired_z)
        << (p.significant_3se ? "  significant at 3se" : "  within 3se")
        << '\n';
  }
  return out.str();
}

}  // namespace pmtlink
