#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <qsync/errors.hpp>

#include "config.hpp"
#include "runs.hpp"

int main(int argc, char** argv) {
  using namespace qsync::tools;

  CLI::App app{"Coupled-oscillator synchronization cost simulator"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  unsigned workers = 1;
  app.add_option("--config", config_path, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Master random seed");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--workers", workers, "Worker threads")->check(CLI::Range(1u, 1024u));

  auto* simulate = app.add_subcommand("simulate", "Quantum trajectory with per-sample metrics");
  auto* sweep = app.add_subcommand("sweep", "Final-time distance over a (k, w2 - w1) grid");
  auto* classical = app.add_subcommand("classical", "Stuart-Landau ensemble trajectory");
  auto* sample = app.add_subcommand("sample-gaussian", "Random two-mode Gaussian states against the bounds");
  auto* bounds = app.add_subcommand("bounds", "Tabulate the synchronization cost bounds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    const RunConfig cfg = config_path.empty() ? default_config() : load_config(config_path);
    const RunOptions opts{out_dir, seed, workers};
    RunStatus status = RunStatus::Fatal;
    if (simulate->parsed()) {
      status = run_simulate(cfg, opts);
    } else if (sweep->parsed()) {
      status = run_sweep(cfg, opts);
    } else if (classical->parsed()) {
      status = run_classical(cfg, opts);
    } else if (sample->parsed()) {
      status = run_sample_gaussian(cfg, opts);
    } else if (bounds->parsed()) {
      status = run_bounds(cfg, opts);
    }
    if (status != RunStatus::Ok) std::cerr << "qsync: run finished with failures; see manifest.txt\n";
    return static_cast<int>(status);
  } catch (const qsync::Error& e) {
    std::cerr << "qsync: " << qsync::to_string(e.code()) << ": " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "qsync: " << e.what() << '\n';
  }
  return 1;
}
