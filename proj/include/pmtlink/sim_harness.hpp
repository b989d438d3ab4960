#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pmtlink/channel.hpp"
#include "pmtlink/counting_receiver.hpp"
#include "pmtlink/map_detector.hpp"

namespace pmtlink {

enum class DetectorKind { exact_llr, piecewise_linear, piecewise_cubic, counting };

enum class ThresholdRule { fixed, error_optimal, kl_optimal };

struct DetectorSpec {
  DetectorKind kind = DetectorKind::exact_llr;
  std::string label;
  // Counting receivers only: how the per-interval threshold is chosen.
  ThresholdRule rule = ThresholdRule::fixed;
  double z_th = 0.0;  // signal units; used when rule == fixed
};

struct TrialConfig {
  ChannelConfig channel;
  PmtParams pmt;
  std::vector<DetectorSpec> detectors;
  std::int64_t num_symbols = 0;
  std::uint64_t master_seed = 1;
  int chunk_size = 4096;

  void validate() const;
  // Canonical key=value text; identical configs serialize identically.
  std::string canonical_text() const;
  std::uint64_t config_hash() const;
};

struct DetectorResult {
  std::string label;
  std::int64_t error_count = 0;
  double error_rate = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;  // Wilson 95%
  double resolved_z_th = 0.0;       // counting detectors; 0 otherwise
};

// Paired-sample comparison on identical noise realizations.
struct PairComparison {
  std::size_t index_a = 0, index_b = 0;
  std::int64_t discordant_a_wrong = 0;  // a errs, b correct
  std::int64_t discordant_b_wrong = 0;  // b errs, a correct
  double error_diff = 0.0;              // rate_a - rate_b
  double paired_z = 0.0;                // McNemar-style z for the difference
  bool significant_3se = false;         // |paired_z| > 3
};

struct TrialReport {
  std::vector<DetectorResult> detectors;
  std::vector<PairComparison> pairs;
  std::int64_t num_symbols = 0;
  std::uint64_t master_seed = 0;
  std::uint64_t config_hash = 0;
  double elapsed_seconds = 0.0;  // informational; absent from to_record()

  std::string to_record() const;
};

// Paired Monte Carlo over all detectors: every detector sees the same symbol
// samples. Symbols are generated in fixed-size chunks with counter-derived
// seeds, so the report is identical for any worker count.
TrialReport run_trials(const TrialConfig& config, int workers = 1);

// Human-readable pairwise ordering summary of an existing report.
std::string compare_detectors(const TrialReport& report);

}  // namespace pmtlink
