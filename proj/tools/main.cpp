#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pmtlink/channel.hpp"
#include "pmtlink/counting_receiver.hpp"
#include "pmtlink/errors.hpp"
#include "pmtlink/experiments.hpp"
#include "pmtlink/io.hpp"
#include "pmtlink/map_detector.hpp"
#include "pmtlink/math_util.hpp"
#include "pmtlink/rate_bounds.hpp"

namespace {

using namespace pmtlink;

// Channel and PMT flags shared by the analysis subcommands.
struct ChannelFlags {
  double gamma_t = 0.01;
  double snr_db = 20.0;
  int intervals = 1000;
  double prior_one = 0.5;
  double sigma0 = 0.1;
  double xi = 0.1;
  std::string thermal = "interval";

  ChannelConfig channel() const {
    return ChannelConfig::from_snr_db(gamma_t, snr_db, intervals, prior_one);
  }

  PmtParams pmt() const {
    if (thermal == "symbol") return PmtParams::normalized(xi, sigma0);
    if (thermal == "interval")
      return PmtParams::with_interval_thermal_std(xi, sigma0, intervals);
    throw UsageError("--thermal must be 'interval' or 'symbol'");
  }
};

void add_channel_flags(CLI::App* cmd, ChannelFlags& flags,
                       const std::string& default_thermal) {
  flags.thermal = default_thermal;
  cmd->add_option("--gamma-t", flags.gamma_t,
                  "total pulse rate per window (signal + background)")
      ->capture_default_str();
  cmd->add_option("--snr-db", flags.snr_db,
                  "signal-to-background ratio, 10 log10(lambda_s/lambda_b)")
      ->capture_default_str();
  cmd->add_option("--intervals", flags.intervals, "windows per symbol M")
      ->capture_default_str();
  cmd->add_option("--prior", flags.prior_one, "P(bit = 1)")
      ->capture_default_str();
  cmd->add_option("--sigma0", flags.sigma0, "thermal noise std, units of Ae")
      ->capture_default_str();
  cmd->add_option("--xi", flags.xi, "shot noise spread per pulse")
      ->capture_default_str();
  cmd->add_option("--thermal", flags.thermal,
                  "whether --sigma0 names one window or the whole symbol")
      ->check(CLI::IsMember({"interval", "symbol"}))
      ->capture_default_str();
}

// One symbol per line: M whitespace-separated window outputs.
std::vector<std::vector<double>> read_symbols(const std::string& path,
                                              int intervals) {
  const std::string text = read_text_file(path);
  std::vector<std::vector<double>> symbols;
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::vector<double> outputs;
    double value = 0.0;
    while (fields >> value) outputs.push_back(value);
    if (outputs.empty()) continue;
    if (static_cast<int>(outputs.size()) != intervals)
      throw UsageError(path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(intervals) + " window outputs, got " +
                       std::to_string(outputs.size()));
    symbols.push_back(std::move(outputs));
  }
  return symbols;
}

int run_list() {
  for (const ExperimentDef& def : experiment_registry()) {
    std::printf("%s\n    %s\n", def.name.c_str(), def.summary.c_str());
    for (const ParamSpec& spec : def.params)
      std::printf("    %-18s = %-12s %s\n", spec.key.c_str(),
                  spec.default_value.c_str(), spec.help.c_str());
  }
  return 0;
}

int run_experiment_cmd(const std::string& name_arg,
                       const std::string& config_path,
                       const std::vector<std::string>& override_args,
                       const std::string& seed_arg, std::string out_dir,
                       int workers) {
  std::string name = name_arg;
  KvConfig overrides;
  if (!config_path.empty()) {
    overrides = KvConfig::load(config_path);
    if (overrides.has("experiment")) {
      if (name.empty()) name = overrides.at("experiment");
      overrides.erase("experiment");
    }
    overrides.erase("config_hash");
  }
  for (const std::string& arg : override_args) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos || eq == 0)
      throw UsageError("override must look like key=value, got '" + arg + "'");
    overrides.set(arg.substr(0, eq), arg.substr(eq + 1));
  }
  if (!seed_arg.empty()) overrides.set("seed", seed_arg);
  if (name.empty())
    throw UsageError(
        "experiment name required (positional, or 'experiment =' in --config)");
  if (out_dir.empty()) out_dir = "out/" + name;
  const std::vector<std::string> files =
      run_experiment(name, overrides, out_dir, workers);
  for (const std::string& file : files)
    std::printf("wrote %s/%s\n", out_dir.c_str(), file.c_str());
  return 0;
}

int run_detect(const ChannelFlags& flags, const std::string& kind,
               const std::string& input_path, const std::string& import_path,
               const std::string& export_path, double z_th, int nodes) {
  const ChannelConfig config = flags.channel();
  const PmtParams pmt = flags.pmt();
  const double tv = pmt.interval_thermal_var(config.intervals);

  PiecewiseDetector piecewise;
  bool have_piecewise = false;
  if (!import_path.empty()) {
    piecewise = PiecewiseDetector::from_record(read_text_file(import_path));
    have_piecewise = true;
    if (kind != "exact" && kind != "counting") {
      // The record carries its own kind; --kind must not contradict it.
      const bool is_linear = piecewise.kind == PiecewiseDetector::Kind::linear;
      if ((kind == "linear") != is_linear)
        throw UsageError("--import record is a " +
                         std::string(is_linear ? "linear" : "cubic") +
                         " detector but --kind is " + kind);
    }
  } else if (kind == "linear") {
    piecewise = fit_linear_detector(config, pmt);
    have_piecewise = true;
  } else if (kind == "cubic") {
    piecewise = fit_cubic_detector(config, pmt, nodes);
    have_piecewise = true;
  }

  if (!export_path.empty()) {
    if (!have_piecewise)
      throw UsageError("--export applies to --kind linear or cubic only");
    write_text_file(export_path, piecewise.to_record());
    std::fprintf(stderr, "wrote %s\n", export_path.c_str());
  }

  if (input_path.empty()) {
    if (export_path.empty())
      throw UsageError("nothing to do: give --input and/or --export");
    return 0;
  }

  CountDetector counter;
  if (kind == "counting") {
    double threshold = z_th;
    if (threshold <= 0.0)
      threshold = optimize_threshold_by_error(config, pmt, tv).z_th;
    counter = make_count_detector(threshold, config, pmt, tv);
    std::fprintf(stderr, "counting threshold z_th = %.17g\n",
                 counter.hard.z_th);
  }

  const std::vector<std::vector<double>> symbols =
      read_symbols(input_path, config.intervals);
  for (const std::vector<double>& outputs : symbols) {
    int bit = 0;
    if (kind == "exact")
      bit = detect_exact(outputs, config, pmt);
    else if (kind == "counting")
      bit = counter.detect(outputs);
    else
      bit = detect_piecewise(outputs, piecewise, config, pmt);
    std::printf("%d\n", bit);
  }
  return 0;
}

int run_optimize(const ChannelFlags& flags, const std::string& objective,
                 int grid_points) {
  const ChannelConfig config = flags.channel();
  const PmtParams pmt = flags.pmt();
  const double tv = pmt.interval_thermal_var(config.intervals);
  if (objective == "error") {
    const ThresholdSearch best =
        optimize_threshold_by_error(config, pmt, tv, grid_points);
    std::printf("z_th = %.17g\n", best.z_th);
    std::printf("total_error = %.17g\n", best.objective);
    std::printf("flat_objective = %d\n", best.flat_objective ? 1 : 0);
    return 0;
  }
  const ThresholdSearch best =
      optimize_threshold_by_kl(config, pmt, tv, grid_points);
  std::printf("z_th = %.17g\n", best.z_th);
  std::printf("min_kl_nats = %.17g\n", best.objective);
  std::printf("min_kl_bits = %.17g\n", best.objective / kLn2);
  std::printf("flat_objective = %d\n", best.flat_objective ? 1 : 0);
  const KlThresholdBounds bounds = kl_threshold_bounds(config, pmt, tv);
  if (bounds.lower_valid) std::printf("z_lower = %.17g\n", bounds.z_lower);
  if (bounds.upper_valid) std::printf("z_upper = %.17g\n", bounds.z_upper);
  return 0;
}

int run_rate_bounds_cmd(const ChannelFlags& flags, double z_th_fraction) {
  const ChannelConfig config = flags.channel();
  const PmtParams pmt = flags.pmt();
  const RateBoundsReport report = transmission_rate_bounds(
      config, pmt, z_th_fraction * pmt.pulse_amplitude());
  std::printf("lower_bits = %.17g\n", report.lower_bits);
  std::printf("upper_bits = %.17g\n", report.upper_bits);
  std::printf("gap_bound_bits = %.17g\n", report.gap_bound_bits);
  if (report.has_exact) std::printf("exact_bits = %.17g\n", report.exact_bits);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optical scattering link: PMT receiver design and simulation"};
  app.require_subcommand(1);

  CLI::App* list_cmd =
      app.add_subcommand("list", "List experiments and their parameters");

  CLI::App* exp_cmd = app.add_subcommand(
      "experiment", "Run a named experiment and write its output files");
  std::string exp_name, exp_config, exp_seed, exp_out;
  std::vector<std::string> exp_overrides;
  int exp_workers = 1;
  exp_cmd->add_option("name", exp_name, "experiment name (see 'list')");
  exp_cmd->add_option("--config", exp_config,
                      "key = value parameter file (e.g. a manifest.txt)");
  exp_cmd->add_option("--override,-O", exp_overrides,
                      "parameter override, key=value (repeatable)");
  exp_cmd->add_option("--seed", exp_seed, "shorthand for -O seed=...");
  exp_cmd->add_option("--out", exp_out, "output directory (default out/<name>)");
  exp_cmd->add_option("--workers", exp_workers, "simulation worker threads")
      ->capture_default_str();

  CLI::App* detect_cmd = app.add_subcommand(
      "detect", "Decode symbols from a file of window outputs");
  ChannelFlags detect_flags;
  std::string detect_kind = "exact", detect_input, detect_import, detect_export;
  double detect_z_th = 0.0;
  int detect_nodes = 201;
  add_channel_flags(detect_cmd, detect_flags, "interval");
  detect_cmd->add_option("--kind", detect_kind, "detector family")
      ->check(CLI::IsMember({"exact", "linear", "cubic", "counting"}))
      ->capture_default_str();
  detect_cmd->add_option("--input", detect_input,
                         "symbols file, one line of M outputs per symbol");
  detect_cmd->add_option("--import", detect_import,
                         "load a piecewise detector record");
  detect_cmd->add_option("--export", detect_export,
                         "write the fitted piecewise detector record");
  detect_cmd->add_option("--z-th", detect_z_th,
                         "counting threshold (default: error-optimal)");
  detect_cmd->add_option("--nodes", detect_nodes,
                         "least-squares nodes per cubic segment")
      ->capture_default_str();

  CLI::App* opt_cmd = app.add_subcommand(
      "optimize-threshold", "Optimize the counting receiver window threshold");
  ChannelFlags opt_flags;
  std::string opt_objective = "error";
  int opt_grid = 1000;
  add_channel_flags(opt_cmd, opt_flags, "interval");
  opt_cmd->add_option("--objective", opt_objective, "error | kl")
      ->check(CLI::IsMember({"error", "kl"}))
      ->capture_default_str();
  opt_cmd->add_option("--grid", opt_grid, "threshold grid points")
      ->capture_default_str();

  CLI::App* rate_cmd = app.add_subcommand(
      "rate-bounds", "Transmission rate bounds for the thresholded channel");
  ChannelFlags rate_flags;
  double rate_z_fraction = 0.5;
  add_channel_flags(rate_cmd, rate_flags, "symbol");
  rate_cmd->add_option("--z-th-fraction", rate_z_fraction,
                       "hard threshold as a fraction of Ae")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (list_cmd->parsed()) return run_list();
    if (exp_cmd->parsed())
      return run_experiment_cmd(exp_name, exp_config, exp_overrides, exp_seed,
                                exp_out, exp_workers);
    if (detect_cmd->parsed())
      return run_detect(detect_flags, detect_kind, detect_input, detect_import,
                        detect_export, detect_z_th, detect_nodes);
    if (opt_cmd->parsed()) return run_optimize(opt_flags, opt_objective, opt_grid);
    if (rate_cmd->parsed())
      return run_rate_bounds_cmd(rate_flags, rate_z_fraction);
    return 2;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  }
}
