#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "qsync/block_matrix.hpp"

namespace qsync {

/// Per-mode truncation sizes; mode 0 is the slowest-varying tensor index.
struct ModeDims {
  std::vector<Index> dims;

  std::size_t modes() const noexcept { return dims.size(); }
  Index total() const noexcept;
  void validate() const;
  /// Multi-index (n_0, ..., n_{N-1}) of a flat basis index.
  std::vector<Index> unflatten(Index flat) const;
  Index flatten(const std::vector<Index>& levels) const;
};

/// Physical parameters of N oscillators (hbar = k_B = 1, angular frequencies).
struct SystemSpec {
  std::vector<double> freqs;
  double k = 0.0;
  double temperature = 1.0;
  std::vector<double> gamma_plus;
  /// When absent, derived per mode by detailed balance: exp(2 beta w) * gamma_plus.
  std::optional<std::vector<double>> gamma_minus;
  ModeDims dims;

  std::size_t modes() const noexcept { return freqs.size(); }
  double beta() const { return 1.0 / temperature; }
  std::vector<double> gamma_minus_effective() const;
  /// w_min / w_max.
  double kappa() const;
  void validate() const;
};

/// Smallest per-mode sizes whose untruncated thermal tail mass q^d (q = exp(-w/T))
/// is at most `tail_target`.
ModeDims auto_dims(const std::vector<double>& freqs, double temperature, double tail_target,
                   Index min_dim = 2);

Operator annihilation(Index dim);
Operator creation(Index dim);
Operator number(Index dim);
Operator identity(Index dim);

/// Lifts a single-mode operator into the full tensor space.
Operator embed(const Operator& local, std::size_t mode, const ModeDims& dims);

/// (x_1, p_1, ..., x_N, p_N) with x = (a + a^dag)/sqrt2, p = (a - a^dag)/(i sqrt2).
std::vector<Operator> quadratures(const SystemSpec& spec);

Operator build_h0(const SystemSpec& spec);
/// (k/2)(a_1^dag a_2 + a_2^dag a_1).
Operator build_hc_dimer(const SystemSpec& spec);

/// sqrt(g+)(a^dag)^2 and sqrt(g-)a^2 per mode; zero-rate operators are omitted.
std::vector<Operator> jump_ops(const SystemSpec& spec);

/// Normalized truncated populations p_n ~ exp(-beta w n).
Eigen::VectorXd thermal_populations(double beta, double omega, Index dim);
BlockMatrix thermal_state(double beta, double omega, Index dim);

/// Population of the two highest levels of a truncated thermal mode.
double top_two_mass(double beta, double omega, Index dim);

inline constexpr double kTailGuard = 1e-4;

/// Tensor product of per-mode truncated thermal states (diagonal storage), no tail check.
BlockMatrix thermal_product_state(double beta, const std::vector<double>& freqs, const ModeDims& dims);

/// Thermal product state at beta = 1/T; rejects truncations whose top-two-level
/// population exceeds kTailGuard in any mode.
BlockMatrix initial_product_state(const SystemSpec& spec);

/// Full-space operators shared by the generator and the metrics.
struct SystemOperators {
  Operator h0;
  Operator hc;
  std::vector<Operator> jumps;
  std::vector<Operator> quads;

  static SystemOperators build(const SystemSpec& spec);
};

}  // namespace qsync
