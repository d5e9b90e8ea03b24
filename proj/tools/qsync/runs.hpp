#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <qsync/metrics.hpp>

#include "config.hpp"

namespace qsync::tools {

struct RunOptions {
  std::filesystem::path out_dir = ".";
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

/// Exit status of a run.
enum class RunStatus { Ok = 0, Fatal = 1, Partial = 2 };

struct FailureInfo {
  std::string code;
  std::string message;
  std::optional<double> time;
};

/// Quantum trajectory with one record per sample. Stops at the first integration
/// error and keeps the samples taken so far.
struct QuantumTrajectory {
  std::vector<MetricsRecord> records;
  std::optional<FailureInfo> failure;
};

/// ldot_fd is a centered difference of L over one step either side of each sample.
QuantumTrajectory simulate_trajectory(const SystemSpec& spec, const IntegratorConfig& cfg,
                                      const BlockMatrix& rho0, bool finite_difference = true);

struct ClassicalSample {
  double t = 0.0;
  ClassicalMetrics metrics;
  double circ_var = 1.0;
  CslTerms csl;
};

struct ClassicalTrajectory {
  std::vector<ClassicalSample> samples;
  std::optional<FailureInfo> failure;
};

ClassicalTrajectory simulate_classical(const SLConfig& cfg);

struct SweepPoint {
  double k = 0.0;
  double delta_omega = 0.0;
  double d = 0.0;
  double chi = 0.0;
  std::string status = "ok";
};

/// Raise each mode's level count until the top-two-level thermal weight passes the guard.
ModeDims guarded_dims(const std::vector<double>& freqs, double temperature, double tail_target);

/// The sweep's system at (k, w1 + dw).
SystemSpec sweep_system(const RunConfig& cfg, double k, double delta_omega);
SweepPoint sweep_quantum_point(const RunConfig& cfg, double k, double delta_omega);
SweepPoint sweep_classical_point(const RunConfig& cfg, double k, double delta_omega, std::uint64_t subseed);
std::uint64_t sweep_subseed(std::uint64_t seed, std::size_t i, std::size_t j);

struct SweepResult {
  std::vector<SweepPoint> quantum;    // row-major over (k, dw)
  std::vector<SweepPoint> classical;
};

SweepResult compute_sweep(const RunConfig& cfg, std::uint64_t seed, unsigned workers, bool quantum = true,
                          bool classical = true);

/// Runs f(i) for i in [0, n) on `workers` threads pulling from a shared counter.
template <class F>
void parallel_for(std::size_t n, unsigned workers, F&& f) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const unsigned count = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  pool.reserve(count);
  for (unsigned w = 0; w < count; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) f(i);
    });
  }
  for (auto& t : pool) t.join();
}

// Each writes its CSVs and a manifest.txt into opts.out_dir.
RunStatus run_simulate(const RunConfig& cfg, const RunOptions& opts);
RunStatus run_sweep(const RunConfig& cfg, const RunOptions& opts);
RunStatus run_classical(const RunConfig& cfg, const RunOptions& opts);
RunStatus run_sample_gaussian(const RunConfig& cfg, const RunOptions& opts);
RunStatus run_bounds(const RunConfig& cfg, const RunOptions& opts);

/// CSV bodies, exposed for tests.
std::string trajectory_csv(const std::vector<MetricsRecord>& records);
std::string classical_csv(const std::vector<ClassicalSample>& samples);
std::string bounds_csv(const BoundsGrid& grid);

}  // namespace qsync::tools
