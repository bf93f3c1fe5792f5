// Command line front end.
//
//   bamc run      --config cfg.json [--out DIR] [--jobs N] [--seed S]
//   bamc analyze  --instance inst.json [--delta D]
//   bamc validate --instance inst.json
//
// Exit codes: 0 success, 2 configuration or validation error, 3 runtime
// failure (I/O, solver breakdown).

#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bamc/bamc.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::optional<std::string>& out_dir, int jobs,
            const std::optional<std::uint64_t>& seed) {
  bamc::ExperimentConfig cfg = bamc::load_config(config_path);
  if (out_dir) cfg.output.dir = *out_dir;
  if (seed) cfg.base_seed = *seed;
  const bamc::ProblemInstance instance = bamc::resolve_instance(cfg);
  const bamc::ExperimentResult result = bamc::run_experiment(cfg, instance, jobs);
  bamc::emit_report(result, cfg, instance);
  std::printf("wrote %zu runs over %zu cells to %s\n", result.runs.size(), result.cells.size(),
              cfg.output.dir.c_str());
  return 0;
}

int cmd_analyze(const std::string& instance_path, double delta) {
  const bamc::ProblemInstance instance =
      bamc::load_instance_file(instance_path, bamc::ChainValidation::AllowNonErgodic);
  std::printf("chains: %d  states: %d\n", instance.num_chains(), instance.num_states());
  for (int k = 0; k < instance.num_chains(); ++k) {
    const auto& chain = instance.chain(k);
    std::printf("chain %d:\n", k + 1);
    std::printf("  gini_sum: %.12g  eta: %.12g\n", instance.gini_sum(k), instance.eta(k));
    if (chain.analysis) {
      const auto& a = *chain.analysis;
      std::printf("  stationary:");
      for (int x = 0; x < instance.num_states(); ++x) std::printf(" %.12g", a.stationary(x));
      std::printf("\n");
      std::printf("  min_stationary: %.12g  inv_stationary_sum: %.12g\n", a.min_stationary,
                  a.inv_stationary_sum);
      std::printf("  reversible: %s\n", a.reversible ? "yes" : "no");
      if (a.spectral_gap)
        std::printf("  spectral_gap: %.12g\n", *a.spectral_gap);
      else
        std::printf("  spectral_gap: n/a (not reversible)\n");
      std::printf("  pseudo_spectral_gap: %.12g\n", a.pseudo_spectral_gap);
    } else {
      std::printf("  not ergodic: mixing statistics unavailable\n");
    }
  }
  std::printf("lambda_total: %.12g\n", instance.lambda_total());
  if (instance.fully_analyzed()) {
    std::printf("budget_cutoff(delta=%g): %lld\n", delta,
                static_cast<long long>(bamc::budget_cutoff(instance, delta)));
  } else {
    std::printf("budget_cutoff: n/a (instance not fully analyzed)\n");
  }
  return 0;
}

int cmd_validate(const std::string& instance_path) {
  try {
    const bamc::ProblemInstance instance = bamc::load_instance_file(instance_path);
    std::printf("ok: %d ergodic chains on %d states\n", instance.num_chains(),
                instance.num_states());
    return 0;
  } catch (const bamc::IoError&) {
    throw;
  } catch (const bamc::Error& e) {
    std::printf("invalid: %s\n", e.what());
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"active learning of Markov chain transition matrices"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  CLI::App* run = app.add_subcommand("run", "run a configured experiment");
  run->add_option("--config", config_path, "experiment config JSON")->required();
  run->add_option("--out", out_dir, "output directory (overrides config)");
  run->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "base seed (overrides config)");

  std::string instance_path;
  double delta = 0.05;
  CLI::App* analyze = app.add_subcommand("analyze", "print instance statistics");
  analyze->add_option("--instance", instance_path, "instance JSON")->required();
  analyze->add_option("--delta", delta, "confidence level for the budget cutoff")
      ->check(CLI::Range(1e-12, 1.0));

  std::string validate_path;
  CLI::App* validate = app.add_subcommand("validate", "check an instance file");
  validate->add_option("--instance", validate_path, "instance JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, out_dir, jobs, seed);
    if (analyze->parsed()) return cmd_analyze(instance_path, delta);
    return cmd_validate(validate_path);
  } catch (const bamc::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const bamc::SchemaError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const bamc::InvalidConfig& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const bamc::NotStochastic& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const bamc::NotErgodic& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
