// sphercomp: seeded Monte Carlo experiments for random spherical
// compression and its AWGN-channel surrogate. Each experiment writes a
// per-trial CSV plus a summary CSV with analytic references and advisory
// PASS/FAIL verdicts.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sphercomp/experiments.hpp"

namespace {

void print_summary(const sphercomp::ExperimentResult& result) {
  int pass = 0, fail = 0;
  for (const auto& row : result.summary) {
    if (row.verdict.empty()) continue;
    if (row.verdict == "PASS") {
      ++pass;
    } else {
      ++fail;
      std::printf("FAIL  %s n=%d rate=%g branch=%s metric=%s mean=%.6g ref=%.6g\n",
                  result.experiment.c_str(), row.n, row.rate,
                  row.branch.c_str(), row.metric.c_str(), row.mean,
                  row.analytic_ref);
    }
  }
  std::printf("%s: %d verdict rows pass, %d fail (%zu summary rows, %zu trial rows)\n",
              result.experiment.c_str(), pass, fail, result.summary.size(),
              result.trials.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random spherical compression experiments"};
  app.set_config("--config", "", "flat key=value config file; flags win");
  app.allow_config_extras(CLI::config_extras_mode::error);

  sphercomp::ExperimentConfig config;
  std::string experiment;
  app.add_option("experiment", experiment, "experiment name")
      ->required()
      ->check(CLI::IsMember(sphercomp::experiment_names()));
  app.add_option("--n", config.n, "problem dimension");
  app.add_option("--d", config.d, "parameter dimension (amp)");
  app.add_option("--rates", config.rates, "rate grid, bits per coordinate")
      ->delimiter(',');
  app.add_option("--trials", config.trials, "Monte Carlo trials per point");
  app.add_option("--seed", config.seed, "root seed");
  app.add_option("--eps", config.eps, "observation noise level");
  app.add_option("--kappa", config.kappa, "signal scale");
  app.add_option("--sparsity", config.sparsity, "sparse fraction k/n");
  app.add_option("--delta", config.delta, "sampling ratio n/d (amp)");
  app.add_option("--iters", config.amp_iterations, "AMP iterations");
  app.add_option("--prior", config.prior, "signal prior")
      ->check(CLI::IsMember({"gaussian", "rademacher", "bernoulli-gaussian"}));
  app.add_option("--out", config.out_path, "per-trial CSV path");
  app.add_flag("--explicit-codebook", config.explicit_codebook,
               "audit with brute-force codebooks (nR <= 24 bits)");
  app.add_option("--index-dump", config.index_dump_path,
                 "write (seed, index) pairs of explicit encodings");

  CLI11_PARSE(app, argc, argv);
  config.experiment = experiment;

  try {
    config.validate();
    std::printf("experiment=%s n=%d trials=%d seed=%llu threads=%d\n",
                config.experiment.c_str(), config.n, config.trials,
                static_cast<unsigned long long>(config.seed),
                sphercomp::worker_pool_size());
    const auto result = sphercomp::run_experiment(config);
    if (!config.out_path.empty()) {
      sphercomp::write_result_files(result, config.out_path);
      std::printf("wrote %s and %s\n", config.out_path.c_str(),
                  sphercomp::summary_path_for(config.out_path).c_str());
    }
    if (!config.index_dump_path.empty()) {
      std::ofstream dump(config.index_dump_path, std::ios::binary);
      if (!dump) throw std::runtime_error("cannot open " + config.index_dump_path);
      dump << result.index_dump;
    }
    print_summary(result);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;  // verdicts are advisory; only config/runtime errors fail
}
