#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <qsync/classical_sl.hpp>
#include <qsync/dynamics.hpp>
#include <qsync/fock.hpp>
#include <qsync/gaussian.hpp>

namespace qsync::tools {

struct SweepGrid {
  double k_min = -6.0;
  double k_max = 6.0;
  int k_count = 21;
  /// Offsets w2 - w1 with w1 fixed at system.freqs[0].
  double dw_min = 0.0;
  double dw_max = 6.283185307179586;
  int dw_count = 21;
  double t_obs = 10.0;
  double dt = 2.5e-3;
  double tail_target = 1e-4;
  std::size_t classical_members = 1000;
  double classical_dt = 1e-3;

  std::vector<double> k_values() const;
  std::vector<double> dw_values() const;
};

struct BoundsGrid {
  std::vector<int> n_modes{2, 3, 10, 100, 1000};
  std::vector<double> kappas{1.0};
  double d_min = 0.01;
  double d_max = 2.0;
  int d_count = 400;
  double temperature = 1.0;
};

struct RunConfig {
  SystemSpec system;
  bool dims_auto = true;
  double tail_target = 1e-9;
  IntegratorConfig integrator;
  SLConfig classical;
  SampleParams sample;
  std::vector<double> sample_freqs{1.0, 1.0};
  SweepGrid sweep;
  BoundsGrid bounds;
  /// Source text, kept for manifests.
  std::string text;

  /// `system` with dims resolved (auto dims from the tail target when requested).
  SystemSpec resolved_system() const;
};

/// Parses the INI-style configuration; errors name the offending line or key.
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);
/// Defaults only (no file).
RunConfig default_config();

std::vector<double> linspace(double lo, double hi, int count);

}  // namespace qsync::tools
