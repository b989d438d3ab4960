#include "pmtlink/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "pmtlink/channel.hpp"
#include "pmtlink/counting_receiver.hpp"
#include "pmtlink/errors.hpp"
#include "pmtlink/map_detector.hpp"
#include "pmtlink/math_util.hpp"
#include "pmtlink/rate_bounds.hpp"
#include "pmtlink/sim_harness.hpp"

namespace pmtlink {

ResolvedParams::ResolvedParams(const std::vector<ParamSpec>& schema,
                               const KvConfig& overrides) {
  resolved_.reserve(schema.size());
  for (const ParamSpec& spec : schema)
    resolved_.emplace_back(spec.key, spec.default_value);
  for (const auto& [key, value] : overrides.entries()) {
    bool known = false;
    for (auto& [k, v] : resolved_) {
      if (k == key) {
        v = value;
        known = true;
        break;
      }
    }
    if (!known) {
      std::string known_keys;
      for (const ParamSpec& spec : schema) {
        if (!known_keys.empty()) known_keys += ", ";
        known_keys += spec.key;
      }
      throw UsageError("unknown parameter '" + key + "' (expected one of: " +
                       known_keys + ")");
    }
  }
}

const std::string& ResolvedParams::text(const std::string& key) const {
  for (const auto& [k, v] : resolved_)
    if (k == key) return v;
  throw UsageError("parameter '" + key + "' is not in this experiment's schema");
}

double ResolvedParams::number(const std::string& key) const {
  return parse_double(text(key));
}

long long ResolvedParams::integer(const std::string& key) const {
  return parse_int(text(key));
}

std::uint64_t ResolvedParams::seed(const std::string& key) const {
  return parse_u64(text(key));
}

std::vector<double> ResolvedParams::number_list(const std::string& key) const {
  return parse_double_list(text(key));
}

std::string ResolvedParams::canonical_text(
    const std::string& experiment_name) const {
  std::ostringstream out;
  out << "experiment = " << experiment_name << '\n';
  for (const auto& [key, value] : resolved_) out << key << " = " << value << '\n';
  return out.str();
}

ExperimentSink::ExperimentSink(std::filesystem::path out_dir, int workers)
    : out_dir_(std::move(out_dir)), workers_(workers) {
  if (workers_ < 1) throw UsageError("workers must be >= 1");
}

void ExperimentSink::write(const std::string& filename,
                           const std::string& content) {
  write_text_file(out_dir_ / filename, content);
  files_.push_back(filename);
}

namespace {

PmtParams pmt_from(double xi, double sigma0, const std::string& thermal_mode,
                   int intervals) {
  if (thermal_mode == "symbol") return PmtParams::normalized(xi, sigma0);
  if (thermal_mode == "interval")
    return PmtParams::with_interval_thermal_std(xi, sigma0, intervals);
  throw UsageError("thermal must be 'interval' or 'symbol', got '" +
                   thermal_mode + "'");
}

double bits_from_nats(double nats) { return nats / kLn2; }

std::string hex_u64(std::uint64_t value) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(value));
  return buf;
}

// ---------------------------------------------------------------------------
// rate-approx: true-mixture vs single-photon per-window rate.

void run_rate_approx(const ResolvedParams& p, ExperimentSink& sink) {
  const double snr = p.number("snr_db");
  const double w = p.number("prior_one");
  const double xi = p.number("xi");
  const std::string& mode = p.text("thermal");
  CsvTable table({"gamma_t", "sigma0", "poisson_bits", "single_photon_bits",
                  "relative_gap"});
  for (double gt : p.number_list("gamma_t_list")) {
    for (double s0 : p.number_list("sigma0_list")) {
      const ChannelConfig config = ChannelConfig::from_snr_db(gt, snr, 1, w);
      const PmtParams pmt = pmt_from(xi, s0, mode, 1);
      const RateApproximation pair = rate_approximation_pair(config, pmt);
      table.add_row({format_float(gt), format_float(s0),
                     format_float(pair.poisson_bits),
                     format_float(pair.single_photon_bits),
                     format_float(pair.relative_gap())});
    }
  }
  sink.write("rate_approx.csv", table.serialize());
  sink.write("plot.py", R"PY(#!/usr/bin/env python3
"""Plots rate_approx.csv: per-window rate, true mixture vs single-photon."""
import collections
import csv

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("rate_approx.csv")))
by_gt = collections.defaultdict(list)
for r in rows:
    by_gt[float(r["gamma_t"])].append(
        (float(r["sigma0"]), float(r["poisson_bits"]),
         float(r["single_photon_bits"])))
fig, ax = plt.subplots(figsize=(6, 4))
for gt, pts in sorted(by_gt.items()):
    pts.sort()
    xs = [a for a, _, _ in pts]
    ax.plot(xs, [b for _, b, _ in pts], marker="o",
            label=f"true mixture, gamma_t={gt:g}")
    ax.plot(xs, [c for _, _, c in pts], marker="x", linestyle="--",
            label=f"single photon, gamma_t={gt:g}")
ax.set_xlabel("sigma0 / Ae")
ax.set_ylabel("rate (bits per window)")
ax.grid(True, alpha=0.4)
ax.legend()
fig.tight_layout()
fig.savefig("rate_approx.png", dpi=150)
)PY");
}

// ---------------------------------------------------------------------------
// rate-bounds-snr: single-window bounds and exact rate across SNR.

void run_rate_bounds_snr(const ResolvedParams& p, ExperimentSink& sink) {
  const double gt = p.number("gamma_t");
  const double w = p.number("prior_one");
  const double xi = p.number("xi");
  const double z_frac = p.number("z_th_fraction");
  const std::string& mode = p.text("thermal");
  CsvTable table({"snr_db", "sigma0", "lower_bits", "upper_bits", "exact_bits",
                  "gap_bound_bits", "relative_gap"});
  for (double snr : p.number_list("snr_list")) {
    for (double s0 : p.number_list("sigma0_list")) {
      const ChannelConfig config = ChannelConfig::from_snr_db(gt, snr, 1, w);
      const PmtParams pmt = pmt_from(xi, s0, mode, 1);
      const RateBoundsReport report = transmission_rate_bounds(
          config, pmt, z_frac * pmt.pulse_amplitude());
      const double rel_gap =
          (report.upper_bits > 0.0)
              ? (report.upper_bits - report.lower_bits) / report.upper_bits
              : 0.0;
      table.add_row({format_float(snr), format_float(s0),
                     format_float(report.lower_bits),
                     format_float(report.upper_bits),
                     format_float(report.exact_bits),
                     format_float(report.gap_bound_bits),
                     format_float(rel_gap)});
    }
  }
  sink.write("rate_bounds_snr.csv", table.serialize());
  sink.write("plot.py", R"PY(#!/usr/bin/env python3
"""Plots rate_bounds_snr.csv: bound sandwich across SNR per sigma0."""
import collections
import csv

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("rate_bounds_snr.csv")))
by_s0 = collections.defaultdict(list)
for r in rows:
    by_s0[float(r["sigma0"])].append(
        (float(r["snr_db"]), float(r["lower_bits"]), float(r["upper_bits"]),
         float(r["exact_bits"])))
fig, ax = plt.subplots(figsize=(6, 4))
for s0, pts in sorted(by_s0.items()):
    pts.sort()
    xs = [a for a, _, _, _ in pts]
    ax.plot(xs, [b for _, b, _, _ in pts], marker="v",
            label=f"lower, sigma0={s0:g}")
    ax.plot(xs, [c for _, _, c, _ in pts], marker="^",
            label=f"upper, sigma0={s0:g}")
    ax.plot(xs, [d for _, _, _, d in pts], linestyle=":",
            label=f"exact, sigma0={s0:g}")
ax.set_xlabel("SNR (dB)")
ax.set_ylabel("rate (bits per window)")
ax.grid(True, alpha=0.4)
ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig("rate_bounds_snr.png", dpi=150)
)PY");
}

// ---------------------------------------------------------------------------
// rate-bounds-M: bounds vs window count at a fixed photon budget per symbol.

void run_rate_bounds_m(const ResolvedParams& p, ExperimentSink& sink) {
  const double snr = p.number("snr_db");
  const double total = p.number("photons_per_symbol");
  const double w = p.number("prior_one");
  const double xi = p.number("xi");
  const double s0 = p.number("sigma0");
  const double z_frac = p.number("z_th_fraction");
  const std::string& mode = p.text("thermal");
  const double ratio = std::pow(10.0, snr / 10.0);
  CsvTable table({"intervals", "gamma_t", "gamma_b", "lower_bits",
                  "upper_bits", "gap_bound_bits", "exact_bits"});
  for (double m_raw : p.number_list("interval_list")) {
    const int m = static_cast<int>(m_raw);
    ChannelConfig config;
    config.lambda_b = total / (1.0 + ratio);
    config.lambda_s = total - config.lambda_b;
    config.intervals = m;
    config.prior_one = w;
    const PmtParams pmt = pmt_from(xi, s0, mode, m);
    const RateBoundsReport report =
        transmission_rate_bounds(config, pmt, z_frac * pmt.pulse_amplitude());
    table.add_row({format_int(m), format_float(config.gamma_t()),
                   format_float(config.gamma_b()),
                   format_float(report.lower_bits),
                   format_float(report.upper_bits),
                   format_float(report.gap_bound_bits),
                   report.has_exact ? format_float(report.exact_bits) : "nan"});
  }
  sink.write("rate_bounds_m.csv", table.serialize());
  sink.write("plot.py", R"PY(#!/usr/bin/env python3
"""Plots rate_bounds_m.csv: symbol-rate bounds vs window count."""
import csv

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("rate_bounds_m.csv")))
rows.sort(key=lambda r: int(r["intervals"]))
ms = [int(r["intervals"]) for r in rows]
fig, ax = plt.subplots(figsize=(6, 4))
ax.plot(ms, [float(r["lower_bits"]) for r in rows], marker="v", label="lower")
ax.plot(ms, [float(r["upper_bits"]) for r in rows], marker="^", label="upper")
ax.set_xscale("log")
ax.set_xlabel("windows per symbol M")
ax.set_ylabel("rate (bits per symbol)")
ax.grid(True, alpha=0.4)
ax.legend()
fig.tight_layout()
fig.savefig("rate_bounds_m.png", dpi=150)
)PY");
}

// ---------------------------------------------------------------------------
// fx-fit: the window LLR link function and its piecewise approximations.

void run_fx_fit(const ResolvedParams& p, ExperimentSink& sink) {
  const double gt = p.number("gamma_t");
  const double snr = p.number("snr_db");
  const double s0 = p.number("sigma0");
  const double xi = p.number("xi");
  const int m = static_cast<int>(p.integer("intervals"));
  const double w = p.number("prior_one");
  const int nodes = static_cast<int>(p.integer("nodes_per_segment"));
  const int points = static_cast<int>(p.integer("curve_points"));
  const std::string& mode = p.text("thermal");

  const ChannelConfig config = ChannelConfig::from_snr_db(gt, snr, m, w);
  const PmtParams pmt = pmt_from(xi, s0, mode, m);
  const double tv = pmt.interval_thermal_var(m);
  const PiecewiseDetector linear = fit_linear_detector(config, pmt);
  const PiecewiseDetector cubic = fit_cubic_detector(config, pmt, nodes);
  sink.write("detector_linear.txt", linear.to_record());
  sink.write("detector_cubic.txt", cubic.to_record());

  const double gb = config.gamma_b();
  const double x0 = interval_llr_center(gt, gb);
  const double lo = -3.0 * x0, hi = 5.0 * x0;
  CsvTable table({"x", "f", "f_slope", "linear", "cubic", "weight_marginal"});
  for (int i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * i / static_cast<double>(points - 1);
    const double weight =
        config.prior_one * statistic_pdf(x, gt, pmt, tv) +
        (1.0 - config.prior_one) * statistic_pdf(x, gb, pmt, tv);
    table.add_row({format_float(x), format_float(interval_llr(x, gt, gb)),
                   format_float(interval_llr_slope(x, gt, gb)),
                   format_float(linear.evaluate(x)),
                   format_float(cubic.evaluate(x)), format_float(weight)});
  }
  sink.write("fx_curve.csv", table.serialize());
  sink.write("plot.py", R"PY(#!/usr/bin/env python3
"""Plots fx_curve.csv: window LLR vs its piecewise approximations."""
import csv

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("fx_curve.csv")))
xs = [float(r["x"]) for r in rows]
fig, (ax, ax2) = plt.subplots(2, 1, figsize=(6, 7), sharex=True)
ax.plot(xs, [float(r["f"]) for r in rows], label="F(x)")
ax.plot(xs, [float(r["linear"]) for r in rows], "--", label="piecewise linear")
ax.plot(xs, [float(r["cubic"]) for r in rows], ":", label="piecewise cubic")
ax.set_ylabel("window LLR")
ax.grid(True, alpha=0.4)
ax.legend()
ax2.plot(xs, [float(r["weight_marginal"]) for r in rows], color="gray")
ax2.set_yscale("log")
ax2.set_xlabel("x")
ax2.set_ylabel("statistic density")
ax2.grid(True, alpha=0.4)
fig.tight_layout()
fig.savefig("fx_curve.png", dpi=150)
)PY");
}

// ---------------------------------------------------------------------------
// approx-error: paired Monte Carlo of exact vs piecewise detectors.

void run_approx_error(const ResolvedParams& p, ExperimentSink& sink) {
  const double gt = p.number("gamma_t");
  const double snr = p.number("snr_db");
  const double xi = p.number("xi");
  const int m = static_cast<int>(p.integer("intervals"));
  const double w = p.number("prior_one");
  const std::string& mode = p.text("thermal");

  CsvTable errors({"sigma0", "detector", "errors", "error_rate", "ci_lo",
                   "ci_hi"});
  CsvTable pairs({"sigma0", "detector_a", "detector_b", "a_wrong_b_right",
                  "b_wrong_a_right", "error_diff", "paired_z",
                  "significant_3se"});
  for (double s0 : p.number_list("sigma0_list")) {
    TrialConfig trial;
    trial.channel = ChannelConfig::from_snr_db(gt, snr, m, w);
    trial.pmt = pmt_from(xi, s0, mode, m);
    trial.detectors = {
        {DetectorKind::exact_llr, "exact", ThresholdRule::fixed, 0.0},
        {DetectorKind::piecewise_linear, "linear", ThresholdRule::fixed, 0.0},
        {DetectorKind::piecewise_cubic, "cubic", ThresholdRule::fixed, 0.0}};
    trial.num_symbols = p.integer("symbols");
    trial.master_seed = p.seed("seed");
    trial.chunk_size = static_cast<int>(p.integer("chunk_size"));
    const TrialReport report = run_trials(trial, sink.workers());
    for (const DetectorResult& d : report.detectors)
      errors.add_row({format_float(s0), d.label, format_int(d.error_count),
                      format_float(d.error_rate), format_float(d.ci_lo),
                      format_float(d.ci_hi)});
    for (const PairComparison& pc : report.pairs)
      pairs.add_row({format_float(s0), report.detectors[pc.index_a].label,
                     report.detectors[pc.index_b].label,
                     format_int(pc.discordant_a_wrong),
                     format_int(pc.discordant_b_wrong),
                     format_float(pc.error_diff), format_float(pc.paired_z),
                     pc.significant_3se ? "1" : "0"});
  }
  sink.write("detector_errors.csv", errors.serialize());
  sink.write("detector_pairs.csv", pairs.serialize());
  sink.write("plot.py", R"PY(#!/usr/bin/env python3
"""Plots detector_errors.csv: Monte Carlo error rates per detector."""
import collections
import csv

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("detector_errors.csv")))
by_det = collections.defaultdict(list)
for r in rows:
    by_det[r["detector"]].append(
        (float(r["sigma0"]), float(r["error_rate"]), float(r["ci_lo"]),
         float(r["ci_hi"])))
fig, ax = plt.subplots(figsize=(6, 4))
for det, pts in sorted(by_det.items()):
    pts.sort()
    xs = [a for a, _, _, _ in pts]
    ys = [b for _, b, _, _ in pts]
    lo = [b - l for _, b, l, _ in pts]
    hi = [h - b for _, b, _, h in pts]
    ax.errorbar(xs, ys, yerr=[lo, hi], marker="o", capsize=3, label=det)
ax.set_yscale("log")
ax.set_xlabel("sigma0 / Ae")
ax.set_ylabel("symbol error rate")
ax.grid(True, alpha=0.4)
ax.legend()
fig.tight_layout()
fig.savefig("detector_errors.png", dpi=150)
)PY");
}

// ---------------------------------------------------------------------------
// threshold-compare: error-optimal vs KL-optimal window thresholds.

void run_threshold_compare(const ResolvedParams& p, ExperimentSink& sink) {
  const double gt = p.number("gamma_t");
  const double s0 = p.number("sigma0");
  const double xi = p.number("xi");
  const int m = static_cast<int>(p.integer("intervals"));
  const double w = p.number("prior_one");
  const int grid = static_cast<int>(p.integer("grid_points"));
  const std::string& mode = p.text("thermal");

  CsvTable table({"snr_db", "z_error_opt", "error_at_error_opt", "z_kl_opt",
                  "min_kl_nats", "min_kl_bits", "error_at_kl_opt",
                  "error_ratio", "z_lower", "z_upper"});
  for (double snr : p.number_list("snr_list")) {
    const ChannelConfig config = ChannelConfig::from_snr_db(gt, snr, m, w);
    const PmtParams pmt = pmt_from(xi, s0, mode, m);
    const double tv = pmt.interval_thermal_var(m);
    const ThresholdSearch by_error =
        optimize_threshold_by_error(config, pmt, tv, grid);
    const ThresholdSearch by_kl =
        optimize_threshold_by_kl(config, pmt, tv, grid);
    const double err_at_kl =
        make_count_detector(by_kl.z_th, config, pmt, tv).total_error();
    const KlThresholdBounds bounds = kl_threshold_bounds(config, pmt, tv);
    table.add_row(
        {format_float(snr), format_float(by_error.z_th),
         format_float(by_error.objective), format_float(by_kl.z_th),
         format_float(by_kl.objective),
         format_float(bits_from_nats(by_kl.objective)),
         format_float(err_at_kl),
         format_float(err_at_kl / by_error.objective),
         format_float(bounds.lower_valid
                          ? bounds.z_lower
                          : std::numeric_limits<double>::quiet_NaN()),
         format_float(bounds.upper_valid
                          ? bounds.z_upper
                          : std::numeric_limits<double>::quiet_NaN())});
  }
  sink.write("threshold_compare.csv", table.serialize());
  sink.write("plot.py", R"PY(#!/usr/bin/env python3
"""Plots threshold_compare.csv: optimal thresholds and error penalty."""
import csv

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("threshold_compare.csv")))
rows.sort(key=lambda r: float(r["snr_db"]))
xs = [float(r["snr_db"]) for r in rows]
fig, (ax, ax2) = plt.subplots(2, 1, figsize=(6, 7), sharex=True)
ax.plot(xs, [float(r["z_error_opt"]) for r in rows], marker="o",
        label="error-optimal")
ax.plot(xs, [float(r["z_kl_opt"]) for r in rows], marker="x",
        label="KL-optimal")
ax.fill_between(xs, [float(r["z_lower"]) for r in rows],
                [float(r["z_upper"]) for r in rows], alpha=0.2,
                label="analytic bracket")
ax.set_ylabel("window threshold / Ae")
ax.grid(True, alpha=0.4)
ax.legend()
ax2.plot(xs, [float(r["error_ratio"]) for r in rows], marker="s")
ax2.axhline(1.0, color="gray", linestyle=":")
ax2.set_xlabel("SNR (dB)")
ax2.set_ylabel("error(KL-opt) / error(error-opt)")
ax2.grid(True, alpha=0.4)
fig.tight_layout()
fig.savefig("threshold_compare.png", dpi=150)
)PY");
}

// ---------------------------------------------------------------------------
// error-compare: Monte Carlo of MAP vs counting receivers.

void run_error_compare(const ResolvedParams& p, ExperimentSink& sink) {
  const double gt = p.number("gamma_t");
  const double s0 = p.number("sigma0");
  const double xi = p.number("xi");
  const int m = static_cast<int>(p.integer("intervals"));
  const double w = p.number("prior_one");
  const std::string& mode = p.text("thermal");

  CsvTable table({"snr_db", "detector", "z_th", "errors", "error_rate",
                  "ci_lo", "ci_hi", "analytic_error"});
  for (double snr : p.number_list("snr_list")) {
    TrialConfig trial;
    trial.channel = ChannelConfig::from_snr_db(gt, snr, m, w);
    trial.pmt = pmt_from(xi, s0, mode, m);
    trial.detectors = {
        {DetectorKind::exact_llr, "map-exact", ThresholdRule::fixed, 0.0},
        {DetectorKind::counting, "count-error-opt",
         ThresholdRule::error_optimal, 0.0},
        {DetectorKind::counting, "count-kl-opt", ThresholdRule::kl_optimal,
         0.0}};
    trial.num_symbols = p.integer("symbols");
    trial.master_seed = p.seed("seed");
    trial.chunk_size = static_cast<int>(p.integer("chunk_size"));
    const TrialReport report = run_trials(trial, sink.workers());
    const double tv = trial.pmt.interval_thermal_var(m);
    for (const DetectorResult& d : report.detectors) {
      double analytic = std::numeric_limits<double>::quiet_NaN();
      if (d.resolved_z_th > 0.0)
        analytic = make_count_detector(d.resolved_z_th, trial.channel,
                                       trial.pmt, tv)
                       .total_error();
      table.add_row({format_float(snr), d.label,
                     format_float(d.resolved_z_th), format_int(d.error_count),
                     format_float(d.error_rate), format_float(d.ci_lo),
                     format_float(d.ci_hi), format_float(analytic)});
    }
  }
  sink.write("error_compare.csv", table.serialize());
  sink.write("plot.py", R"PY(#!/usr/bin/env python3
"""Plots error_compare.csv: MAP vs counting receiver error rates."""
import collections
import csv

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("error_compare.csv")))
by_det = collections.defaultdict(list)
for r in rows:
    by_det[r["detector"]].append((float(r["snr_db"]), float(r["error_rate"])))
fig, ax = plt.subplots(figsize=(6, 4))
for det, pts in sorted(by_det.items()):
    pts.sort()
    ax.plot([a for a, _ in pts], [b for _, b in pts], marker="o", label=det)
ax.set_yscale("log")
ax.set_xlabel("SNR (dB)")
ax.set_ylabel("symbol error rate")
ax.grid(True, alpha=0.4)
ax.legend()
fig.tight_layout()
fig.savefig("error_compare.png", dpi=150)
)PY");
}

// ---------------------------------------------------------------------------
// kl-profile: threshold sensitivity of the min-KL objective.

void run_kl_profile(const ResolvedParams& p, ExperimentSink& sink) {
  const double gt = p.number("gamma_t");
  const double snr = p.number("snr_db");
  const int m = static_cast<int>(p.integer("intervals"));
  const double w = p.number("prior_one");
  const int grid = static_cast<int>(p.integer("grid_points"));
  const double fraction = p.number("plateau_fraction");

  CsvTable profile_table({"noise_scale", "z_th", "d01_nats", "d10_nats",
                          "min_kl_nats", "min_kl_bits"});
  CsvTable summary({"noise_scale", "argmax_z", "max_min_kl_nats",
                    "plateau_width", "z_lower", "z_upper"});
  const ChannelConfig config = ChannelConfig::from_snr_db(gt, snr, m, w);
  for (double scale : p.number_list("noise_list")) {
    // sigma0 and sigma shrink together: xi = sigma0 = scale (units of Ae).
    const PmtParams pmt =
        PmtParams::with_interval_thermal_std(scale, scale, m);
    const double tv = pmt.interval_thermal_var(m);
    const KlProfile profile =
        sensitivity_profile(config, pmt, tv, grid, fraction);
    for (std::size_t i = 0; i < profile.z_grid.size(); ++i)
      profile_table.add_row({format_float(scale),
                             format_float(profile.z_grid[i]),
                             format_float(profile.d01_nats[i]),
                             format_float(profile.d10_nats[i]),
                             format_float(profile.min_kl_nats[i]),
                             format_float(bits_from_nats(
                                 profile.min_kl_nats[i]))});
    const KlThresholdBounds bounds = kl_threshold_bounds(config, pmt, tv);
    summary.add_row(
        {format_float(scale), format_float(profile.argmax_z),
         format_float(profile.max_min_kl),
         format_float(profile.plateau_width),
         format_float(bounds.lower_valid
                          ? bounds.z_lower
                          : std::numeric_limits<double>::quiet_NaN()),
         format_float(bounds.upper_valid
                          ? bounds.z_upper
                          : std::numeric_limits<double>::quiet_NaN())});
  }
  sink.write("kl_profile.csv", profile_table.serialize());
  sink.write("kl_summary.csv", summary.serialize());
  sink.write("plot.py", R"PY(#!/usr/bin/env python3
"""Plots kl_profile.csv: min-KL vs threshold for shrinking noise."""
import collections
import csv

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("kl_profile.csv")))
by_scale = collections.defaultdict(list)
for r in rows:
    by_scale[float(r["noise_scale"])].append(
        (float(r["z_th"]), float(r["min_kl_nats"])))
fig, ax = plt.subplots(figsize=(6, 4))
for scale, pts in sorted(by_scale.items(), reverse=True):
    pts.sort()
    ax.plot([a for a, _ in pts], [b for _, b in pts],
            label=f"sigma0=sigma={scale:g} Ae")
ax.set_xlabel("window threshold / Ae")
ax.set_ylabel("min KL distance (nats)")
ax.grid(True, alpha=0.4)
ax.legend()
fig.tight_layout()
fig.savefig("kl_profile.png", dpi=150)
)PY");
}

const char* kDefaultSeed = "12345";
const char* kDefaultChunk = "4096";

}  // namespace

const std::vector<ExperimentDef>& experiment_registry() {
  static const std::vector<ExperimentDef> registry = {
      {"rate-approx",
       "per-window rate: true Poisson mixture vs single-photon approximation",
       {{"gamma_t_list", "0.01,0.05", "pulse rates per window"},
        {"snr_db", "20", "signal-to-background ratio, dB"},
        {"sigma0_list", "0.05,0.075,0.1,0.125,0.15,0.175,0.2",
         "thermal std grid, units of Ae"},
        {"xi", "0.1", "shot noise spread per pulse"},
        {"prior_one", "0.5", "P(bit = 1)"},
        {"thermal", "symbol", "sigma0 convention: interval|symbol"},
        {"seed", kDefaultSeed, "unused (analytic experiment)"}},
       run_rate_approx},
      {"rate-bounds-snr",
       "single-window rate bounds and exact rate across SNR",
       {{"gamma_t", "0.01", "pulse rate per window"},
        {"snr_list", "10,11,12,13,14,15,16,17,18,19,20", "SNR grid, dB"},
        {"sigma0_list", "0.05,0.1,0.15,0.2", "thermal std grid, units of Ae"},
        {"xi", "0.1", "shot noise spread per pulse"},
        {"prior_one", "0.5", "P(bit = 1)"},
        {"z_th_fraction", "0.5", "hard threshold as a fraction of Ae"},
        {"thermal", "symbol", "sigma0 convention: interval|symbol"},
        {"seed", kDefaultSeed, "unused (analytic experiment)"}},
       run_rate_bounds_snr},
      {"rate-bounds-M",
       "symbol rate bounds vs window count at a fixed photon budget",
       {{"snr_db", "20", "signal-to-background ratio, dB"},
        {"photons_per_symbol", "1.0", "lambda_s + lambda_b per symbol"},
        {"interval_list", "1,2,5,10,20,50,100,200,500,1000", "window counts"},
        {"sigma0", "0.1", "thermal std, units of Ae"},
        {"xi", "0.1", "shot noise spread per pulse"},
        {"prior_one", "0.5", "P(bit = 1)"},
        {"z_th_fraction", "0.5", "hard threshold as a fraction of Ae"},
        {"thermal", "symbol", "sigma0 convention: interval|symbol"},
        {"seed", kDefaultSeed, "unused (analytic experiment)"}},
       run_rate_bounds_m},
      {"fx-fit",
       "window LLR link function with piecewise linear/cubic fits",
       {{"gamma_t", "0.01", "pulse rate per window"},
        {"snr_db", "20", "signal-to-background ratio, dB"},
        {"sigma0", "0.1", "thermal std, units of Ae"},
        {"xi", "0.1", "shot noise spread per pulse"},
        {"intervals", "1000", "windows per symbol"},
        {"prior_one", "0.5", "P(bit = 1)"},
        {"nodes_per_segment", "201", "least-squares nodes per fit segment"},
        {"curve_points", "400", "points in the exported curve"},
        {"thermal", "interval", "sigma0 convention: interval|symbol"},
        {"seed", kDefaultSeed, "unused (analytic experiment)"}},
       run_fx_fit},
      {"approx-error",
       "paired Monte Carlo: exact MAP vs piecewise detectors",
       {{"gamma_t", "0.005", "pulse rate per window"},
        {"snr_db", "20", "signal-to-background ratio, dB"},
        {"sigma0_list", "0.1,0.15,0.2", "thermal std grid, units of Ae"},
        {"xi", "0.1", "shot noise spread per pulse"},
        {"intervals", "1000", "windows per symbol"},
        {"prior_one", "0.5", "P(bit = 1)"},
        {"symbols", "100000", "Monte Carlo symbols per configuration"},
        {"chunk_size", kDefaultChunk, "symbols per seeded chunk"},
        {"thermal", "interval", "sigma0 convention: interval|symbol"},
        {"seed", kDefaultSeed, "master seed"}},
       run_approx_error},
      {"threshold-compare",
       "error-optimal vs KL-optimal window thresholds with analytic bracket",
       {{"gamma_t", "0.01", "pulse rate per window"},
        {"snr_list", "14,17,20", "SNR grid, dB"},
        {"sigma0", "0.1", "thermal std, units of Ae"},
        {"xi", "0.1", "shot noise spread per pulse"},
        {"intervals", "1000", "windows per symbol"},
        {"prior_one", "0.5", "P(bit = 1)"},
        {"grid_points", "1000", "threshold search grid"},
        {"thermal", "interval", "sigma0 convention: interval|symbol"},
        {"seed", kDefaultSeed, "unused (analytic experiment)"}},
       run_threshold_compare},
      {"error-compare",
       "Monte Carlo: exact MAP vs counting receivers at optimized thresholds",
       {{"gamma_t", "0.01", "pulse rate per window"},
        {"snr_list", "14,17,20", "SNR grid, dB"},
        {"sigma0", "0.1", "thermal std, units of Ae"},
        {"xi", "0.1", "shot noise spread per pulse"},
        {"intervals", "1000", "windows per symbol"},
        {"prior_one", "0.5", "P(bit = 1)"},
        {"symbols", "100000", "Monte Carlo symbols per configuration"},
        {"chunk_size", kDefaultChunk, "symbols per seeded chunk"},
        {"thermal", "interval", "sigma0 convention: interval|symbol"},
        {"seed", kDefaultSeed, "master seed"}},
       run_error_compare},
      {"kl-profile",
       "threshold sensitivity of the min-KL objective as noise shrinks",
       {{"gamma_t", "0.01", "pulse rate per window"},
        {"snr_db", "20", "signal-to-background ratio, dB"},
        {"noise_list", "0.1,0.05,0.02",
         "joint sigma0 = sigma scales, units of Ae"},
        {"intervals", "1000", "windows per symbol"},
        {"prior_one", "0.5", "P(bit = 1)"},
        {"grid_points", "1000", "threshold grid"},
        {"plateau_fraction", "0.95", "level defining the plateau"},
        {"thermal", "interval", "sigma0 convention: interval|symbol"},
        {"seed", kDefaultSeed, "unused (analytic experiment)"}},
       run_kl_profile},
  };
  return registry;
}

const ExperimentDef* find_experiment(const std::string& name) {
  for (const ExperimentDef& def : experiment_registry())
    if (def.name == name) return &def;
  return nullptr;
}

std::vector<std::string> run_experiment(const std::string& name,
                                        const KvConfig& overrides,
                                        const std::string& out_dir,
                                        int workers) {
  const ExperimentDef* def = find_experiment(name);
  if (!def) {
    std::string names;
    for (const ExperimentDef& e : experiment_registry()) {
      if (!names.empty()) names += ", ";
      names += e.name;
    }
    throw UsageError("unknown experiment '" + name + "' (available: " + names +
                     ")");
  }
  const ResolvedParams params(def->params, overrides);
  ExperimentSink sink(out_dir, workers);
  const std::string canonical = params.canonical_text(def->name);
  std::string manifest;
  manifest += "# re-run with: pmtlink experiment --config manifest.txt\n";
  manifest += canonical;
  manifest += "config_hash = " + hex_u64(fnv1a64(canonical)) + '\n';
  sink.write("manifest.txt", manifest);
  def->run(params, sink);
  return sink.files_written();
}

}  // namespace pmtlink
