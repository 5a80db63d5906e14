// Command line front end.  Subcommands:
//   qthermo run --config <path> [--out <dir>] [--seed <int>]
//   qthermo presets
//
// Exit codes for `run`: 0 every identity check passed, 1 at least one
// failed, 2 bad config, 3 could not read or write a file, 4 a numerical
// routine rejected the problem (the manifest still records the message).

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "qthermo/cli_lab.hpp"

namespace {

void apply_thread_env() {
#ifdef _OPENMP
  const char* raw = std::getenv("QTHERMO_THREADS");
  if (raw == nullptr || *raw == '\0') {
    return;
  }
  char* end = nullptr;
  const long n = std::strtol(raw, &end, 10);
  if (end != nullptr && *end == '\0' && n > 0) {
    omp_set_num_threads(static_cast<int>(n));
  } else {
    std::fprintf(stderr,
                 "warning: ignoring QTHERMO_THREADS='%s' (want a positive "
                 "integer)\n",
                 raw);
  }
#endif
}

void print_summary(const qthermo::RunManifest& man) {
  std::printf("experiment: %s\n", man.experiment.c_str());
  for (const auto& row : man.identities) {
    std::printf("  [%s] %-28s residual %.3e (tol %.1e)\n",
                row.pass ? "ok" : "FAIL", row.name.c_str(), row.residual,
                row.tolerance);
  }
  for (const auto& [name, value] : man.quantities) {
    std::printf("  %-34s %.12g\n", name.c_str(), value);
  }
  std::printf("%s in %.2f s\n", man.all_pass ? "all checks passed" : "CHECKS FAILED",
              man.wall_seconds);
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_env();

  CLI::App app{"work extraction from correlated quantum states"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;

  CLI::App* run = app.add_subcommand("run", "run an experiment from a JSON config");
  run->add_option("--config", config_path, "path to the JSON config file")
      ->required();
  run->add_option("--out", out_dir, "output directory (overrides the config)");
  run->add_option("--seed", seed, "seed override for the run")
      ->check(CLI::NonNegativeNumber);

  CLI::App* presets =
      app.add_subcommand("presets", "list the built-in state presets");

  CLI11_PARSE(app, argc, argv);
  seed_given = run->count("--seed") > 0;

  if (presets->parsed()) {
    for (const auto& [name, blurb] : qthermo::preset_catalog()) {
      std::printf("%-18s %s\n", name.c_str(), blurb.c_str());
    }
    return 0;
  }

  try {
    qthermo::ExperimentConfig cfg = qthermo::load_config_file(config_path);
    if (!out_dir.empty()) {
      cfg.output_dir = out_dir;
    }
    if (seed_given) {
      cfg.seed = seed;
      if (!cfg.state.seed_pinned) {
        cfg.state.seed = seed;
      }
    }
    const qthermo::RunManifest man = qthermo::run_experiment(cfg);
    print_summary(man);
    return man.all_pass ? 0 : 1;
  } catch (const qthermo::config_parse_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const qthermo::config_validation_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const qthermo::io_error& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 3;
  } catch (const qthermo::error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
}
