#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pmtlink/io.hpp"

namespace pmtlink {

struct ParamSpec {
  std::string key;
  std::string default_value;
  std::string help;
};

// Parameter set resolved against an experiment's schema; unknown keys are
// rejected so typos cannot silently fall back to defaults.
class ResolvedParams {
 public:
  ResolvedParams(const std::vector<ParamSpec>& schema,
                 const KvConfig& overrides);

  double number(const std::string& key) const;
  long long integer(const std::string& key) const;
  std::uint64_t seed(const std::string& key) const;
  const std::string& text(const std::string& key) const;
  std::vector<double> number_list(const std::string& key) const;

  // Manifest body: experiment name plus every parameter in schema order.
  std::string canonical_text(const std::string& experiment_name) const;

 private:
  std::vector<std::pair<std::string, std::string>> resolved_;
};

struct ExperimentDef {
  std::string name;
  std::string summary;
  std::vector<ParamSpec> params;
  void (*run)(const ResolvedParams& params, class ExperimentSink& sink);
};

const std::vector<ExperimentDef>& experiment_registry();
const ExperimentDef* find_experiment(const std::string& name);

// Collects an experiment's output files under one directory.
class ExperimentSink {
 public:
  ExperimentSink(std::filesystem::path out_dir, int workers);

  void write(const std::string& filename, const std::string& content);
  int workers() const { return workers_; }
  const std::vector<std::string>& files_written() const { return files_; }

 private:
  std::filesystem::path out_dir_;
  int workers_ = 1;
  std::vector<std::string> files_;
};

// Resolves parameters, writes manifest.txt and plot.py, runs the experiment,
// and returns the list of files written. The manifest alone re-runs the
// experiment: its keys are this function's `overrides`.
std::vector<std::string> run_experiment(const std::string& name,
                                        const KvConfig& overrides,
                                        const std::string& out_dir,
                                        int workers);

}  // namespace pmtlink
