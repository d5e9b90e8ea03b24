#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "qsync/block_matrix.hpp"
#include "qsync/dynamics.hpp"
#include "qsync/fock.hpp"

namespace qsync {

/// Eigenvalues at or below this are left out of every logarithm (0 ln 0 = 0).
inline constexpr double kEigenFloor = 1e-14;
/// Weight of the first argument that counts as "inside the support".
inline constexpr double kSupportWeight = 1e-12;
/// Returned by relative entropies whose support condition fails.
inline constexpr double kInfiniteDivergence = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Synchronization measures

/// First and symmetrized second moments of (x_1, p_1, ..., x_N, p_N):
/// second(i, j) = <{R_i, R_j}>/2, means included.
struct PhaseSpaceMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd second;

  std::size_t modes() const noexcept { return static_cast<std::size_t>(mean.size() / 2); }
};

struct SyncDistance {
  double d2 = 0.0;
  /// <r_1.r_2> / (|<r_1>| |<r_2>|); absent when either mean vanishes or N != 2.
  std::optional<double> s_theta;
  /// 2 sqrt(f (1 - f)), f = <r_1^2>/<r^2>; N = 2 only.
  std::optional<double> s_r;
};

inline constexpr double kMeanFloor = 1e-12;

SyncDistance sync_distance(const PhaseSpaceMoments& m);
PhaseSpaceMoments phase_space_moments(const BlockMatrix& rho, const std::vector<Operator>& quads);
SyncDistance sync_distance(const BlockMatrix& rho, const std::vector<Operator>& quads);

// ---------------------------------------------------------------------------
// Entropies

double entropy_of_spectrum(const HermitianEigen& eig);
double von_neumann_entropy(const BlockMatrix& rho);
/// S(rho || sigma); kInfiniteDivergence when rho leaves the support of sigma.
double relative_entropy(const BlockMatrix& rho, const BlockMatrix& sigma);

double thermal_occupation(double beta, double omega);
/// sum_j w_j (n_j + 1/2) for the untruncated Gibbs state.
double gibbs_energy(double beta, const std::vector<double>& freqs);
/// sum_j [(n_j + 1) ln(n_j + 1) - n_j ln n_j].
double gibbs_entropy(double beta, const std::vector<double>& freqs);
/// Inverts gibbs_energy; NoSolution at or below the ground energy.
double beta_from_energy(double energy, const std::vector<double>& freqs);

/// S_G(beta_E) - S for a state of mean energy `energy` and entropy `entropy`.
double chi_from(double energy, double entropy, const std::vector<double>& freqs);
double chi(const BlockMatrix& rho, const SystemSpec& spec);

double big_l(const BlockMatrix& rho, const BlockMatrix& rho0);
/// -tr{D[rho](ln rho - ln rho0)}.
double sigma0(const BlockMatrix& rho, const BlockMatrix& rho0, const std::vector<Operator>& jumps);

struct RateTerms {
  double ldot = 0.0;
  double coupling_term = 0.0;  // 2 tr{(Hc - <Hc>) rho ln rho}
  double cov_ce = 0.0;
  double delta_c = 0.0;
  double delta_e = 0.0;
  double sigma0 = 0.0;
};

RateTerms ldot_exact(const BlockMatrix& rho, const BlockMatrix& rho0, const SystemSpec& spec);

enum class QslMode { Unbounded, Bounded };

struct QslResult {
  double rhs = 0.0;
  double cap_ent = 0.0;
  double s_ge = 0.0;
  /// Delta_E^2 Delta_C^2 - 1/2 |<[H0, Hc]>|^2 before clamping.
  double discriminant = 0.0;
  bool clamped = false;
  Complex commutator_direct{};
  Complex commutator_analytic{};
};

/// Upper bound on dL/dt; rho0 is the initial product state of `spec`.
QslResult qsl_bound(const BlockMatrix& rho, const SystemSpec& spec, QslMode mode = QslMode::Unbounded);

// ---------------------------------------------------------------------------
// Cost bounds

enum class Regime { Quantum, Classical };

struct BoundParams {
  int n_modes = 2;
  double kappa = 1.0;
  double distance = 1.0;
  void validate() const;
};

struct ChiBound {
  double finite = 0.0;
  /// Large-N form, -N ln(e D^2 / 4 kappa) (quantum) or -N ln(D^2 / 2 kappa) (classical).
  double asymptotic = 0.0;
  bool divergent = false;
};

ChiBound chi_lower_bound(const BoundParams& params, Regime regime);
/// T * chi_min.
ChiBound work_lower_bound(const BoundParams& params, double temperature, Regime regime = Regime::Quantum);

// ---------------------------------------------------------------------------
// Per-sample evaluation

struct MetricsRecord {
  double t = 0.0;
  double d2 = 0.0;
  std::optional<double> s_theta;
  std::optional<double> s_r;
  double chi = 0.0;
  double big_l = 0.0;
  double sigma0 = 0.0;
  double ldot_exact = 0.0;
  std::optional<double> ldot_fd;
  double qsl_rhs = 0.0;
  bool qsl_clamped = false;
  double energy = 0.0;
  double entropy = 0.0;
  double cap_ent = 0.0;
  double cov_ce = 0.0;
  double delta_c = 0.0;
  double delta_e = 0.0;
  double trace_err = 0.0;
  double min_eig = 0.0;
  Complex commutator_direct{};
  Complex commutator_analytic{};
};

/// Operators and reference data shared by all samples of one trajectory.
class MetricsContext {
 public:
  MetricsContext(const SystemSpec& spec, const SystemOperators& ops, std::shared_ptr<const Liouvillian> gen,
                 const BlockMatrix& rho0, QslMode mode = QslMode::Unbounded);

  /// `eig` must be the eigendecomposition of `rho` with vectors.
  MetricsRecord evaluate(double t, const BlockMatrix& rho, const HermitianEigen& eig) const;
  MetricsRecord evaluate(double t, const BlockMatrix& rho) const;

  /// S(rho || rho0) from eigenvalues only.
  double relative_to_initial(const BlockMatrix& rho) const;
  double relative_to_initial(const BlockMatrix& rho, const HermitianEigen& eig) const;

  const BlockMatrix& initial_state() const noexcept { return rho0_; }

 private:
  SystemSpec spec_;
  std::vector<Operator> quads_;
  Operator h0_, hc_, h0_sq_, hc_sq_, anti_, comm_direct_, comm_analytic_;
  std::shared_ptr<const Liouvillian> gen_;
  BlockMatrix rho0_;
  Eigen::VectorXd log_rho0_;
  double hc_norm_ = 0.0;
  QslMode mode_;
};

}  // namespace qsync
