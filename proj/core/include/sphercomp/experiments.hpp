#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "sphercomp/prior.hpp"

namespace sphercomp {

/// Seeded Monte Carlo experiment specification; the root seed fully
/// determines every random draw, with per-trial sub-streams so trials are
/// order-independent and parallelizable.
struct ExperimentConfig {
  std::string experiment;
  int n = 1024;
  int d = 0;  // linear-model width; 0 derives it from delta
  std::vector<double> rates{1.0};
  int trials = 100;
  std::uint64_t seed = 1;
  double eps = 0.5;
  double kappa = 1.0;
  double sparsity = 0.05;
  double delta = 0.5;
  int amp_iterations = 10;
  std::string prior = "gaussian";  // gaussian | rademacher | bernoulli-gaussian
  std::string out_path;
  bool explicit_codebook = false;
  std::string index_dump_path;

  void validate() const;
};

constexpr double kNa = std::numeric_limits<double>::quiet_NaN();

struct TrialRow {
  int n = -1;
  int d = -1;
  double rate = kNa;
  double eps = kNa;
  double kappa = kNa;
  double sparsity = kNa;
  double delta = kNa;
  int iter = -1;
  std::string branch;
  int trial = -1;
  double sq_error_per_coord = kNa;
};

struct SummaryRow {
  int n = -1;
  int d = -1;
  double rate = kNa;
  double eps = kNa;
  double kappa = kNa;
  double sparsity = kNa;
  double delta = kNa;
  int iter = -1;
  std::string branch;
  std::string metric;
  double mean = kNa;
  double stderr_of_mean = kNa;
  double analytic_ref = kNa;
  std::string verdict;  // PASS / FAIL / empty when no rule applies
};

struct ExperimentResult {
  std::string experiment;
  std::vector<TrialRow> trials;
  std::vector<SummaryRow> summary;
  std::string index_dump;  // "(seed) (index)" lines, explicit-codebook runs
};

ExperimentResult run_gaussian_location(const ExperimentConfig& config);
ExperimentResult run_sparse_threshold(const ExperimentConfig& config);
ExperimentResult run_amp_experiment(const ExperimentConfig& config);
ExperimentResult run_indirect_coding(const ExperimentConfig& config);
ExperimentResult run_coupling_tails(const ExperimentConfig& config);
ExperimentResult run_wasserstein_bound(const ExperimentConfig& config);
ExperimentResult run_rd_curves(const ExperimentConfig& config);

/// Dispatch by config.experiment.
ExperimentResult run_experiment(const ExperimentConfig& config);

const std::vector<std::string>& experiment_names();

/// Deterministic CSV serialization: UTF-8, header row, '.' decimal,
/// shortest round-trip doubles, '\n' newlines.
std::string trials_csv(const ExperimentResult& result);
std::string summary_csv(const ExperimentResult& result);

/// Writes the per-trial CSV to out_path and the summary CSV next to it.
void write_result_files(const ExperimentResult& result,
                        const std::string& out_path);
std::string summary_path_for(const std::string& out_path);

ScalarPrior make_prior(const ExperimentConfig& config);

/// Worker pool size: SPHERCOMP_THREADS caps it, unset means machine
/// parallelism.
int worker_pool_size();

/// Runs fn(0..count-1) on the pool; output must depend only on the index.
void parallel_for(int count, const std::function<void(int)>& fn);

struct MeanStderr {
  double mean;
  double stderr_of_mean;  // sample stddev / sqrt(count)
};
MeanStderr summarize(const std::vector<double>& values);

}  // namespace sphercomp
