#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "qsync/block_matrix.hpp"
#include "qsync/fock.hpp"

namespace qsync {

/// How <Hc> enters the Runge-Kutta stages.
enum class MeanCouplingPolicy {
  PerStage,   ///< re-evaluated from each stage state
  StepStart,  ///< frozen at the step's initial state (regression reference only)
};

struct IntegratorConfig {
  double dt = 1e-3;
  double t_final = 10.0;
  Index sample_stride = 100;
  bool renormalize = true;
  MeanCouplingPolicy policy = MeanCouplingPolicy::PerStage;

  Index total_steps() const;
  void validate() const;
};

inline constexpr double kPositivityTolerance = 1e-6;

/// Generator of
///   drho/dt = -i[H0, rho] + {Hc, rho} - 2<Hc> rho + D[rho]
/// restricted to a block partition that it leaves invariant.
class Liouvillian {
 public:
  Liouvillian(const SystemOperators& ops, PartitionPtr partition);

  /// Finest partition containing `state`'s blocks that the generator maps into itself.
  static PartitionPtr invariant_partition(const SystemOperators& ops, const BlockPartition& state);

  const PartitionPtr& partition() const noexcept { return partition_; }

  /// <Hc> = Re tr(Hc rho).
  double mean_coupling(const BlockMatrix& rho) const;

  /// Full nonlinear generator for Hermitian rho. `mean_hc` overrides <Hc>.
  void apply(const BlockMatrix& rho, BlockMatrix& out, std::optional<double> mean_hc = std::nullopt) const;

  // The pieces below accept non-Hermitian arguments.
  BlockMatrix apply_l0(const BlockMatrix& rho) const;
  BlockMatrix apply_lc(const BlockMatrix& rho) const;
  BlockMatrix apply_dissipator(const BlockMatrix& rho) const;

 private:
  using LocalOp = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;
  struct Local {
    LocalOp k;      // -i H0 + Hc - 1/2 sum F^dag F
    LocalOp l0;     // -i H0 - 1/2 sum F^dag F
    LocalOp hc;
    LocalOp decay;  // 1/2 sum F^dag F
  };
  struct Jump {
    std::size_t src;
    std::size_t dst;
    LocalOp f;      // rows in dst, columns in src
    LocalOp f_adj;
    // When f has at most one entry per row and column: f(rows[i], cols[i]) = vals[i].
    bool monomial = false;
    std::vector<Index> rows, cols;
    std::vector<Complex> vals;
  };

  enum class Part { Full, L0, Dissipator };
  void two_sided(const BlockMatrix& rho, BlockMatrix& out, Part part) const;
  void add_jumps(const BlockMatrix& rho, BlockMatrix& out, double scale) const;

  PartitionPtr partition_;
  std::vector<Local> blocks_;
  std::vector<Jump> jumps_;
};

// Convenience wrappers on full-space operators.
BlockMatrix apply_dissipator(const BlockMatrix& rho, const std::vector<Operator>& jumps);
BlockMatrix apply_l0(const BlockMatrix& rho, const Operator& h0, const std::vector<Operator>& jumps);
BlockMatrix apply_lc(const BlockMatrix& rho, const Operator& hc);

/// Reusable stage buffers for rk4_step.
struct RkWorkspace {
  BlockMatrix k1, k2, k3, k4, stage;
};

/// One classical RK4 step in place, followed by symmetrization, optional trace
/// renormalization and a diagonal sign check. Throws PositivityLoss when a
/// diagonal entry drops below -kPositivityTolerance.
void rk4_step(const Liouvillian& gen, BlockMatrix& rho, double h, MeanCouplingPolicy policy,
              bool renormalize, RkWorkspace& ws);

/// One step of size dt; checks the full spectrum afterwards.
BlockMatrix step(const BlockMatrix& rho, double dt, const SystemSpec& spec,
                 MeanCouplingPolicy policy = MeanCouplingPolicy::PerStage);

class Propagator {
 public:
  Propagator(std::shared_ptr<const Liouvillian> gen, const BlockMatrix& rho0, IntegratorConfig cfg);

  void advance();
  /// The state one step of size h away from the current one (h may be negative).
  BlockMatrix trial_step(double h) const;

  const BlockMatrix& state() const noexcept { return rho_; }
  double time() const noexcept { return static_cast<double>(steps_) * cfg_.dt; }
  Index steps() const noexcept { return steps_; }
  const Liouvillian& generator() const noexcept { return *gen_; }
  const IntegratorConfig& config() const noexcept { return cfg_; }

 private:
  std::shared_ptr<const Liouvillian> gen_;
  IntegratorConfig cfg_;
  BlockMatrix rho_;
  Index steps_ = 0;
  mutable RkWorkspace ws_;
};

/// What an observer sees at each sample.
struct Sample {
  double t;
  Index step;
  const BlockMatrix& rho;
  const HermitianEigen& eig;  // with eigenvectors
  const Propagator& propagator;
};

using Observer = std::function<void(const Sample&)>;

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<BlockMatrix> states;  // filled only on request
};

/// Samples at step 0, every `sample_stride` steps, and at the final step.
/// Errors carry the simulated time at which they happened.
TrajectoryRecord integrate(const BlockMatrix& rho0, const SystemSpec& spec, const IntegratorConfig& cfg,
                           const Observer& observer = {}, bool store_states = false);

/// ||L0[rho0]||_F / ||rho0||_F.
double verify_stationary(const BlockMatrix& rho0, const SystemSpec& spec);

}  // namespace qsync
