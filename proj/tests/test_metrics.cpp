#include <gtest/gtest.h>

#include <random>

#include <qsync/errors.hpp>
#include <qsync/metrics.hpp>

#include "support.hpp"

using namespace qsync;
using test::kPi;

namespace {

BlockMatrix diag_state(const Eigen::VectorXd& p) { return BlockMatrix::diagonal(p.cast<Complex>()); }

PhaseSpaceMoments random_moments(std::size_t modes, std::mt19937_64& gen) {
  std::normal_distribution<double> n;
  const auto d = static_cast<Index>(2 * modes);
  Eigen::MatrixXd a(d, d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) a(i, j) = n(gen);
  }
  PhaseSpaceMoments m;
  m.mean = Eigen::VectorXd(d);
  for (Index i = 0; i < d; ++i) m.mean(i) = n(gen);
  m.second = a * a.transpose() + m.mean * m.mean.transpose();
  return m;
}

/// <rbar^2> and <r^2> straight from the moment matrix.
double eq6_distance(const PhaseSpaceMoments& m) {
  const std::size_t n = m.modes();
  double r2 = 0.0;
  double rbar2 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t l = 0; l < n; ++l) {
      const auto a = static_cast<Index>(2 * j);
      const auto b = static_cast<Index>(2 * l);
      const double dot = m.second(a, b) + m.second(a + 1, b + 1);
      rbar2 += dot / static_cast<double>(n * n);
      if (j == l) r2 += dot;
    }
  }
  return 2.0 * (1.0 - static_cast<double>(n) * rbar2 / r2);
}

double thermal_energy(double beta, double w) { return w * (1.0 / std::expm1(beta * w) + 0.5); }
double thermal_entropy(double beta, double w) {
  const double nb = 1.0 / std::expm1(beta * w);
  return (nb + 1.0) * std::log1p(nb) - nb * std::log(nb);
}

}  // namespace

// --- Synchronization measures ---------------------------------------------

TEST(SyncDistance, ThermalProductIsOne) {
  const SystemSpec s = test::dimer_spec(0.0, 1e-9);
  const auto ops = SystemOperators::build(s);
  const auto d = sync_distance(test::initial(s), ops.quads);
  EXPECT_NEAR(d.d2, 1.0, 1e-6);
  EXPECT_FALSE(d.s_theta.has_value());
}

TEST(SyncDistance, EqualRadiiMaximizeRadialMeasure) {
  PhaseSpaceMoments m;
  m.mean = Eigen::VectorXd::Zero(4);
  m.second = Eigen::MatrixXd::Identity(4, 4) * 0.7;
  const auto d = sync_distance(m);
  ASSERT_TRUE(d.s_r.has_value());
  EXPECT_NEAR(*d.s_r, 1.0, 1e-9);
}

TEST(SyncDistance, TwoModeFormsAgree) {
  std::mt19937_64 gen(17);
  for (int i = 0; i < 100; ++i) {
    const auto m = random_moments(2, gen);
    EXPECT_NEAR(sync_distance(m).d2, eq6_distance(m), 1e-12);
  }
}

TEST(SyncDistance, ManyModeForm) {
  std::mt19937_64 gen(5);
  const auto m = random_moments(4, gen);
  EXPECT_NEAR(sync_distance(m).d2, eq6_distance(m), 1e-12);
}

TEST(SyncDistance, PhaseMeasureFromMeans) {
  PhaseSpaceMoments m;
  m.mean = Eigen::VectorXd(4);
  m.mean << 1.0, 0.0, 0.0, 2.0;
  m.second = m.mean * m.mean.transpose() + Eigen::MatrixXd::Identity(4, 4) * 0.5;
  const auto d = sync_distance(m);
  ASSERT_TRUE(d.s_theta.has_value());
  EXPECT_NEAR(*d.s_theta, 0.0, 1e-15);
}

// --- Entropies ---------------------------------------------------------------

TEST(Entropy, PureAndMaximallyMixed) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(6);
  p(3) = 1.0;
  EXPECT_NEAR(von_neumann_entropy(diag_state(p)), 0.0, 1e-10);
  EXPECT_NEAR(von_neumann_entropy(diag_state(Eigen::VectorXd::Constant(6, 1.0 / 6))), std::log(6.0), 1e-12);
  Eigen::VectorXcd psi = Eigen::VectorXcd::Constant(4, 0.5);
  const auto pure = BlockMatrix::from_dense(psi * psi.adjoint());
  EXPECT_NEAR(von_neumann_entropy(pure), 0.0, 1e-10);
}

TEST(Entropy, ThermalUnitOccupation) {
  EXPECT_NEAR(von_neumann_entropy(thermal_state(std::log(2.0), 1.0, 120)), 2.0 * std::log(2.0), 1e-10);
}

TEST(RelativeEntropy, SelfIsZero) {
  const auto rho = BlockMatrix::from_dense(test::random_density(5, 8));
  EXPECT_NEAR(relative_entropy(rho, rho), 0.0, 1e-10);
}

TEST(RelativeEntropy, GroundAgainstMaximallyMixed) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(7);
  p(0) = 1.0;
  const auto mixed = diag_state(Eigen::VectorXd::Constant(7, 1.0 / 7));
  EXPECT_NEAR(relative_entropy(diag_state(p), mixed), std::log(7.0), 1e-12);
  EXPECT_EQ(relative_entropy(mixed, diag_state(p)), kInfiniteDivergence);
}

TEST(RelativeEntropy, ThermalClosedForm) {
  const double b1 = 0.5;
  const double b2 = 0.8;
  const auto r1 = thermal_state(b1, 1.0, 200);
  const auto r2 = thermal_state(b2, 1.0, 200);
  const double want = b2 * thermal_energy(b1, 1.0) - b2 * thermal_energy(b2, 1.0) + thermal_entropy(b2, 1.0) -
                      thermal_entropy(b1, 1.0);
  EXPECT_NEAR(relative_entropy(r1, r2), want, 1e-8);
}

TEST(RelativeEntropy, NonDiagonalReference) {
  const Eigen::MatrixXcd a = test::random_density(4, 21);
  const Eigen::MatrixXcd b = test::random_density(4, 22);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ea(a), eb(b);
  const Eigen::MatrixXcd la = ea.eigenvectors() * ea.eigenvalues().array().log().matrix().asDiagonal() *
                              ea.eigenvectors().adjoint();
  const Eigen::MatrixXcd lb = eb.eigenvectors() * eb.eigenvalues().array().log().matrix().asDiagonal() *
                              eb.eigenvectors().adjoint();
  const double want = (a * (la - lb)).trace().real();
  EXPECT_NEAR(relative_entropy(BlockMatrix::from_dense(a), BlockMatrix::from_dense(b)), want, 1e-10);
}

// --- Gibbs reference --------------------------------------------------------

TEST(Gibbs, BetaFromEnergy) {
  EXPECT_NEAR(beta_from_energy(1.5, {1.0}), std::log(2.0), 1e-12);
  EXPECT_NEAR(beta_from_energy(0.5 + 1e-4, {1.0}), std::log1p(1e4), 1e-9);
  EXPECT_THROW(beta_from_energy(0.5, {1.0}), Error);
  const std::vector<double> w{2.0 * kPi, 3.0 * kPi};
  const double e = gibbs_energy(0.05, w);
  EXPECT_NEAR(beta_from_energy(e, w) / 0.05, 1.0, 1e-9);
}

TEST(Gibbs, EntropyMatchesSingleModeForm) {
  EXPECT_NEAR(gibbs_entropy(std::log(2.0), {1.0}), 2.0 * std::log(2.0), 1e-14);
  EXPECT_NEAR(gibbs_energy(std::log(2.0), {1.0}), 1.5, 1e-14);
}

TEST(Chi, ZeroOnMatchingThermalState) {
  const SystemSpec s = test::dimer_spec(0.0, 1e-9);
  EXPECT_NEAR(chi(test::initial(s), s), 0.0, 1e-6);
}

TEST(Chi, FockStateHasGibbsEntropy) {
  const SystemSpec s = test::small_spec(0.0, 6, 6);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(36);
  p(s.dims.flatten({2, 1})) = 1.0;
  const double e = 2.5 * s.freqs[0] + 1.5 * s.freqs[1];
  EXPECT_NEAR(chi(diag_state(p), s), gibbs_entropy(beta_from_energy(e, s.freqs), s.freqs), 1e-10);
}

// --- Trajectory quantities -------------------------------------------------

class ShortTrajectory : public ::testing::Test {
 protected:
  void SetUp() override {
    spec = test::dimer_spec(3.0, 1e-9);
    rho0 = initial_product_state(spec);
    IntegratorConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_final = 0.2;
    cfg.sample_stride = 50;
    states = integrate(rho0, spec, cfg, {}, true).states;
  }
  SystemSpec spec;
  BlockMatrix rho0;
  std::vector<BlockMatrix> states;
};

TEST_F(ShortTrajectory, BoundChainHolds) {
  for (const auto& rho : states) {
    const double l = big_l(rho, rho0);
    EXPECT_GE(l, -1e-12);
    EXPECT_GE(l, chi(rho, spec) - 1e-8);
  }
  EXPECT_NEAR(big_l(rho0, rho0), 0.0, 1e-9);
}

TEST_F(ShortTrajectory, SpohnPositivity) {
  const auto ops = SystemOperators::build(spec);
  EXPECT_NEAR(sigma0(rho0, rho0, ops.jumps), 0.0, 1e-10);
  for (const auto& rho : states) EXPECT_GE(sigma0(rho, rho0, ops.jumps), -1e-10);
}

TEST_F(ShortTrajectory, SpeedLimitDominatesRate) {
  for (const auto& rho : states) {
    const auto q = qsl_bound(rho, spec);
    EXPECT_LE(ldot_exact(rho, rho0, spec).ldot, q.rhs + 1e-6);
    EXPECT_LT(std::abs(q.commutator_direct - q.commutator_analytic), 1e-10);
    EXPECT_GE(q.cap_ent, -1e-12);
    const auto qb = qsl_bound(rho, spec, QslMode::Bounded);
    EXPECT_LE(ldot_exact(rho, rho0, spec).ldot, qb.rhs + 1e-6);
  }
}

TEST(Sigma0, ZeroRatesGiveZero) {
  SystemSpec s = test::small_spec(0.0, 3, 3);
  const auto rho0 = test::initial(s);
  const auto rho = BlockMatrix::from_dense(test::random_density(9, 3));
  EXPECT_EQ(sigma0(rho, rho0, {}), 0.0);
}

TEST(RateIdentity, InitialStateTerms) {
  const SystemSpec s0 = test::dimer_spec(0.0, 1e-5);
  const auto r0 = initial_product_state(s0);
  EXPECT_NEAR(ldot_exact(r0, r0, s0).ldot, 0.0, 1e-8);
  const SystemSpec s5 = test::dimer_spec(5.0, 1e-5);
  const auto terms = ldot_exact(initial_product_state(s5), initial_product_state(s5), s5);
  EXPECT_NEAR(terms.cov_ce, 0.0, 1e-10);
}

TEST(SpeedLimit, DegenerateFrequenciesKillCommutator) {
  SystemSpec s = test::small_spec(1.0, 8, 8);
  s.temperature = 0.3;
  s.gamma_plus = {1e-5, 1e-5};
  s.freqs = {1.0, 1.0};
  auto rho = test::initial(s);
  for (int i = 0; i < 3; ++i) rho = step(rho, 0.05, s);
  const auto q = qsl_bound(rho, s);
  EXPECT_EQ(std::abs(q.commutator_analytic), 0.0);
  EXPECT_LT(std::abs(q.commutator_direct), 1e-14);
}

TEST(SpeedLimit, SurprisalVarianceVanishesOnFlatSpectra) {
  SystemSpec s = test::small_spec(1.0, 8, 8);
  s.temperature = 0.3;
  EXPECT_NEAR(qsl_bound(diag_state(Eigen::VectorXd::Constant(64, 1.0 / 64)), s).cap_ent, 0.0, 1e-12);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(64);
  p(9) = 1.0;
  EXPECT_NEAR(qsl_bound(diag_state(p), s).cap_ent, 0.0, 1e-12);
}

// --- Cost bounds ------------------------------------------------------------

TEST(Bounds, ZeroCrossings) {
  EXPECT_NEAR(chi_lower_bound({2, 1.0, std::sqrt(2.0) / std::exp(1.0)}, Regime::Quantum).finite, 0.0, 1e-14);
  EXPECT_NEAR(chi_lower_bound({2, 1.0, 1.0 / std::sqrt(2.0)}, Regime::Classical).finite, 0.0, 1e-14);
}

TEST(Bounds, TwoModeReduction) {
  for (double kappa : {0.3, 2.0 / 3.0, 1.0}) {
    for (double d = 0.05; d < 2.0; d += 0.1) {
      const double want = -2.0 * std::log(std::exp(1.0) * d / (std::sqrt(2.0) * kappa));
      EXPECT_NEAR(chi_lower_bound({2, kappa, d}, Regime::Quantum).finite, want, 1e-12);
    }
  }
}

TEST(Bounds, ClassicalShift) {
  for (int n : {2, 5, 50}) {
    const BoundParams p{n, 0.8, 0.6};
    const auto q = chi_lower_bound(p, Regime::Quantum);
    const auto c = chi_lower_bound(p, Regime::Classical);
    EXPECT_NEAR(c.finite - q.finite, n * (1.0 - std::log(2.0)), 1e-10);
    EXPECT_NEAR(c.asymptotic - q.asymptotic, n * (1.0 - std::log(2.0)), 1e-10);
  }
}

TEST(Bounds, AsymptoticLimit) {
  const BoundParams p{1000, 0.5, 0.3};
  const auto b = chi_lower_bound(p, Regime::Quantum);
  EXPECT_NEAR(b.finite / b.asymptotic, 1.0, 0.01);
  EXPECT_NEAR(b.asymptotic, -1000.0 * std::log(std::exp(1.0) * 0.09 / 2.0), 1e-9);
}

TEST(Bounds, NonPositiveDistanceDiverges) {
  const auto b = chi_lower_bound({2, 1.0, 0.0}, Regime::Quantum);
  EXPECT_TRUE(b.divergent);
  EXPECT_TRUE(std::isinf(b.finite));
  EXPECT_THROW(chi_lower_bound({1, 1.0, 0.5}, Regime::Quantum), Error);
  EXPECT_THROW(chi_lower_bound({2, 0.0, 0.5}, Regime::Quantum), Error);
}

TEST(Bounds, WorkScalesWithTemperature) {
  const BoundParams zero{2, 1.0, std::sqrt(2.0) / std::exp(1.0)};
  EXPECT_NEAR(work_lower_bound(zero, 3.0).finite, 0.0, 1e-13);
  const BoundParams p{2, 1.0, 0.2};
  EXPECT_NEAR(work_lower_bound(p, 2.0).finite, 2.0 * work_lower_bound(p, 1.0).finite, 1e-12);
  EXPECT_NEAR(work_lower_bound({200, 1.0, 0.2}, 1.5).asymptotic / 200.0,
              -1.5 * std::log(std::exp(1.0) * 0.04 / 4.0), 1e-12);
}
