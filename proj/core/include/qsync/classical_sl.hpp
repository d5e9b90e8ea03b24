#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include "qsync/fock.hpp"
#include "qsync/gaussian.hpp"

namespace qsync {

/// Direction of the stochastic kick -i a eta.
enum class NoiseKind {
  Complex,  ///< eta complex standard normal (real and imaginary parts of variance 1/2)
  Real,     ///< eta real standard normal: kicks along the imaginary axis only
};

/// Two coupled Stuart-Landau oscillators
///   dz_j = [(k/2 - i w_j - g_j |z_j|^2) z_j + (k/2)(z_{3-j} - z_j)] dt - i a_j dW_j.
struct SLConfig {
  std::array<double, 2> freqs{1.0, 1.0};
  double k = 0.0;
  std::array<double, 2> gammas{0.0, 0.0};
  std::array<double, 2> noise_amp{0.0, 0.0};
  NoiseKind noise = NoiseKind::Complex;
  /// Includes the (k/2)(z_other - z_j) exchange term; off gives two isolated oscillators.
  bool cross_coupling = true;
  std::size_t members = 10000;
  double dt = 1e-3;
  double t_final = 10.0;
  Index sample_stride = 100;
  /// Temperature of the initial thermal draw (quadrature variance T / w_j).
  double temperature = 1.0;
  std::uint64_t seed = 0;

  Index total_steps() const;
  void validate() const;

  /// Same frequencies, coupling and temperature; g_j = g-_j - g+_j and a_j = 2 sqrt(g_j).
  static SLConfig from_quantum(const SystemSpec& spec);
};

struct SLEnsemble {
  std::vector<std::complex<double>> z1;
  std::vector<std::complex<double>> z2;
  double t = 0.0;
  Index step = 0;

  std::size_t size() const noexcept { return z1.size(); }
  SLEnsemble slice(std::size_t begin, std::size_t end) const;
};

std::array<std::complex<double>, 2> drift(std::complex<double> z1, std::complex<double> z2, const SLConfig& cfg);

/// Independent thermal draws, quadrature variance T / w_j.
SLEnsemble initial_ensemble(const SLConfig& cfg);
/// Euler-Maruyama step; throws BlowUpError on a non-finite member.
void em_step(SLEnsemble& ens, const SLConfig& cfg);

/// Unbiased Gaussian fit over (x_1, p_1, x_2, p_2), x = sqrt2 Re z, p = sqrt2 Im z.
GaussianState ensemble_moments(const SLEnsemble& ens);
/// Raw (biased) second moments including means, for the distance measure.
PhaseSpaceMoments ensemble_raw_moments(const SLEnsemble& ens);

struct ClassicalMetrics {
  double d2 = 0.0;
  double chi = 0.0;
  double entropy = 0.0;  ///< Gaussian-fit Shannon entropy
  double energy = 0.0;
  double big_l = 0.0;    ///< relative entropy to the Gibbs state at beta0 (Gaussian fit)
  double mean_r1_sq = 0.0;
  double mean_r2_sq = 0.0;
};

/// A degenerate (collapsed) ensemble reports entropy -inf with chi and L at +inf.
ClassicalMetrics classical_metrics(const SLEnsemble& ens, const std::array<double, 2>& freqs, double beta0);

struct CslTerms {
  double rhs = 0.0;
  double flow = 0.0;        ///< beta0 <grad Hc . grad H0>
  double surprisal = 0.0;   ///< 2 Delta_C sqrt(<(ln f)^2>)
  double geometric = 0.0;   ///< 2 beta0 Delta_C Delta_E
  double sigma0 = 0.0;
  double delta_c = 0.0;
  double delta_e = 0.0;
};

CslTerms csl_bound(const SLEnsemble& ens, const SLConfig& cfg, double beta0);

/// E[(ln f)^2] under the Gaussian f, by Monte Carlo (S^2 + d/2 in closed form).
double surprisal_second_moment_mc(const GaussianState& fit, std::size_t samples, std::uint64_t seed);

/// Accumulates exp(i (arg z1 - arg z2)) over members and times.
class PhaseCoherence {
 public:
  void add(const SLEnsemble& ens);
  /// 1 - |mean phasor|; 1 when nothing was added.
  double circular_variance() const;

 private:
  std::complex<double> sum_{};
  std::size_t count_ = 0;
};

using SLObserver = std::function<void(const SLEnsemble&)>;

/// Observes at step 0, every sample_stride steps and the final step.
SLEnsemble integrate_classical(const SLConfig& cfg, const SLObserver& observer = {});

}  // namespace qsync
