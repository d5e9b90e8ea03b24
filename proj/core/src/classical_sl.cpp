#include "qsync/classical_sl.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "qsync/errors.hpp"
#include "qsync/random.hpp"

namespace qsync {

namespace {

constexpr std::uint64_t kStepTag = 0x534C2D7374657000ULL;
constexpr std::uint64_t kInitTag = 0x534C2D696E697400ULL;
constexpr double kSqrt2 = std::numbers::sqrt2;

using cd = std::complex<double>;

Eigen::Vector4d coords(cd z1, cd z2) {
  return {kSqrt2 * z1.real(), kSqrt2 * z1.imag(), kSqrt2 * z2.real(), kSqrt2 * z2.imag()};
}

double variance(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / (n - 1.0);
}

}  // namespace

Index SLConfig::total_steps() const { return static_cast<Index>(std::llround(t_final / dt)); }

void SLConfig::validate() const {
  if (members < 2) throw Error(ErrorCode::InvalidArgument, "ensemble needs at least two members");
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  if (!(t_final >= 0.0)) throw Error(ErrorCode::InvalidArgument, "t_final must be >= 0");
  if (sample_stride < 1) throw Error(ErrorCode::InvalidArgument, "sample_stride must be >= 1");
  if (!(temperature > 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be positive");
  for (int j = 0; j < 2; ++j) {
    if (!(gammas[j] >= 0.0)) throw Error(ErrorCode::InvalidRate, "damping rates must be non-negative");
    if (!(freqs[j] > 0.0)) throw Error(ErrorCode::InvalidArgument, "frequencies must be positive");
    if (!(noise_amp[j] >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise amplitudes must be non-negative");
  }
}

SLConfig SLConfig::from_quantum(const SystemSpec& spec) {
  spec.validate();
  if (spec.modes() != 2) throw Error(ErrorCode::UnsupportedTopology, "the classical dimer needs two modes");
  SLConfig cfg;
  const auto gm = spec.gamma_minus_effective();
  for (int j = 0; j < 2; ++j) {
    cfg.freqs[j] = spec.freqs[j];
    cfg.gammas[j] = gm[j] - spec.gamma_plus[j];
    if (cfg.gammas[j] < 0.0) throw Error(ErrorCode::InvalidRate, "net two-photon damping is negative");
    cfg.noise_amp[j] = 2.0 * std::sqrt(cfg.gammas[j]);
  }
  cfg.k = spec.k;
  cfg.temperature = spec.temperature;
  return cfg;
}

SLEnsemble SLEnsemble::slice(std::size_t begin, std::size_t end) const {
  SLEnsemble out;
  out.z1.assign(z1.begin() + static_cast<std::ptrdiff_t>(begin), z1.begin() + static_cast<std::ptrdiff_t>(end));
  out.z2.assign(z2.begin() + static_cast<std::ptrdiff_t>(begin), z2.begin() + static_cast<std::ptrdiff_t>(end));
  out.t = t;
  out.step = step;
  return out;
}

std::array<cd, 2> drift(cd z1, cd z2, const SLConfig& cfg) {
  const double h = 0.5 * cfg.k;
  const cd i(0.0, 1.0);
  cd d1 = (h - i * cfg.freqs[0] - cfg.gammas[0] * std::norm(z1)) * z1;
  cd d2 = (h - i * cfg.freqs[1] - cfg.gammas[1] * std::norm(z2)) * z2;
  if (cfg.cross_coupling) {
    d1 += h * (z2 - z1);
    d2 += h * (z1 - z2);
  }
  return {d1, d2};
}

SLEnsemble initial_ensemble(const SLConfig& cfg) {
  cfg.validate();
  SLEnsemble ens;
  ens.z1.resize(cfg.members);
  ens.z2.resize(cfg.members);
  // Re z and Im z have variance T / (2 w).
  const double s1 = std::sqrt(cfg.temperature / (2.0 * cfg.freqs[0]));
  const double s2 = std::sqrt(cfg.temperature / (2.0 * cfg.freqs[1]));
  for (std::size_t m = 0; m < cfg.members; ++m) {
    CounterRng rng({cfg.seed, m, kInitTag});
    const double a = rng.normal();
    const double b = rng.normal();
    const double c = rng.normal();
    const double d = rng.normal();
    ens.z1[m] = {s1 * a, s1 * b};
    ens.z2[m] = {s2 * c, s2 * d};
  }
  return ens;
}

void em_step(SLEnsemble& ens, const SLConfig& cfg) {
  const double sdt = std::sqrt(cfg.dt);
  const cd mi(0.0, -1.0);
  const double half = std::numbers::sqrt2 / 2.0;
  const auto step = static_cast<std::uint64_t>(ens.step);
  for (std::size_t m = 0; m < ens.size(); ++m) {
    const cd z1 = ens.z1[m];
    const cd z2 = ens.z2[m];
    const auto d = drift(z1, z2, cfg);
    CounterRng rng({cfg.seed, m, step, kStepTag});
    cd eta1;
    cd eta2;
    if (cfg.noise == NoiseKind::Complex) {
      const double a = rng.normal();
      const double b = rng.normal();
      const double c = rng.normal();
      const double e = rng.normal();
      eta1 = {half * a, half * b};
      eta2 = {half * c, half * e};
    } else {
      eta1 = rng.normal();
      eta2 = rng.normal();
    }
    const cd n1 = z1 + d[0] * cfg.dt + mi * (cfg.noise_amp[0] * sdt) * eta1;
    const cd n2 = z2 + d[1] * cfg.dt + mi * (cfg.noise_amp[1] * sdt) * eta2;
    if (!std::isfinite(n1.real()) || !std::isfinite(n1.imag()) || !std::isfinite(n2.real()) ||
        !std::isfinite(n2.imag())) {
      throw BlowUpError("ensemble member diverged", ens.t + cfg.dt, m);
    }
    ens.z1[m] = n1;
    ens.z2[m] = n2;
  }
  ++ens.step;
  ens.t = static_cast<double>(ens.step) * cfg.dt;
}

GaussianState ensemble_moments(const SLEnsemble& ens) {
  const std::size_t n = ens.size();
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "need at least two members");
  Eigen::Vector4d mean = Eigen::Vector4d::Zero();
  for (std::size_t m = 0; m < n; ++m) mean += coords(ens.z1[m], ens.z2[m]);
  mean /= static_cast<double>(n);
  Eigen::Matrix4d cov = Eigen::Matrix4d::Zero();
  for (std::size_t m = 0; m < n; ++m) {
    const Eigen::Vector4d d = coords(ens.z1[m], ens.z2[m]) - mean;
    cov.noalias() += d * d.transpose();
  }
  cov /= static_cast<double>(n - 1);
  return GaussianState{mean, cov};
}

PhaseSpaceMoments ensemble_raw_moments(const SLEnsemble& ens) {
  const std::size_t n = ens.size();
  Eigen::Vector4d mean = Eigen::Vector4d::Zero();
  Eigen::Matrix4d second = Eigen::Matrix4d::Zero();
  for (std::size_t m = 0; m < n; ++m) {
    const Eigen::Vector4d x = coords(ens.z1[m], ens.z2[m]);
    mean += x;
    second.noalias() += x * x.transpose();
  }
  mean /= static_cast<double>(n);
  second /= static_cast<double>(n);
  return PhaseSpaceMoments{mean, second};
}

ClassicalMetrics classical_metrics(const SLEnsemble& ens, const std::array<double, 2>& freqs, double beta0) {
  const auto raw = ensemble_raw_moments(ens);
  const auto fit = ensemble_moments(ens);
  const std::vector<double> w(freqs.begin(), freqs.end());
  ClassicalMetrics out;
  out.d2 = sync_distance(raw).d2;
  out.mean_r1_sq = raw.second(0, 0) + raw.second(1, 1);
  out.mean_r2_sq = raw.second(2, 2) + raw.second(3, 3);
  out.energy = 0.5 * (freqs[0] * out.mean_r1_sq + freqs[1] * out.mean_r2_sq);
  try {
    out.entropy = classical_entropy(fit);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateDistribution) throw;
    // A collapsed ensemble has no density: S = -inf, so chi and L diverge.
    out.entropy = -std::numeric_limits<double>::infinity();
    out.chi = out.big_l = std::numeric_limits<double>::infinity();
    return out;
  }
  const double log_det = 2.0 * out.entropy - 4.0 * std::log(2.0 * std::numbers::pi * std::numbers::e);
  out.chi = classical_chi_from(out.energy, log_det, w);
  // ln f0 = -beta0 H0 - ln Z0, Z0 = prod_j 2 pi / (beta0 w_j)
  double log_z0 = 0.0;
  for (double wj : freqs) log_z0 += std::log(2.0 * std::numbers::pi / (beta0 * wj));
  out.big_l = -out.entropy + beta0 * out.energy + log_z0;
  return out;
}

CslTerms csl_bound(const SLEnsemble& ens, const SLConfig& cfg, double beta0) {
  const std::size_t n = ens.size();
  const auto fit = ensemble_moments(ens);
  const double s = classical_entropy(fit);
  const double dnm = static_cast<double>(n);

  std::vector<double> hc(n);
  std::vector<double> h0(n);
  double r12 = 0.0;
  double edot = 0.0;
  Eigen::Matrix4d c = Eigen::Matrix4d::Zero();
  for (std::size_t m = 0; m < n; ++m) {
    const cd z1 = ens.z1[m];
    const cd z2 = ens.z2[m];
    const Eigen::Vector4d x = coords(z1, z2);
    const double n1 = std::norm(z1);
    const double n2 = std::norm(z2);
    hc[m] = cfg.k * (std::conj(z1) * z2).real();
    h0[m] = cfg.freqs[0] * n1 + cfg.freqs[1] * n2;
    r12 += x(0) * x(2) + x(1) * x(3);
    edot += -2.0 * (cfg.gammas[0] * cfg.freqs[0] * n1 * n1 + cfg.gammas[1] * cfg.freqs[1] * n2 * n2);
    const Eigen::Vector4d mu(-cfg.gammas[0] * n1 * x(0), -cfg.gammas[0] * n1 * x(1), -cfg.gammas[1] * n2 * x(2),
                             -cfg.gammas[1] * n2 * x(3));
    c.noalias() += (x - fit.mean) * mu.transpose();
  }
  r12 /= dnm;
  edot /= dnm;
  c /= dnm;  // cov(x, mu); the mean of (x - mean) is zero so no correction is needed
  edot += cfg.freqs[0] * cfg.noise_amp[0] * cfg.noise_amp[0] + cfg.freqs[1] * cfg.noise_amp[1] * cfg.noise_amp[1];

  Eigen::Vector4d g;
  for (int j = 0; j < 2; ++j) {
    const double a2 = cfg.noise_amp[j] * cfg.noise_amp[j];
    if (cfg.noise == NoiseKind::Complex) {
      g(2 * j) = a2;
      g(2 * j + 1) = a2;
    } else {
      g(2 * j) = 0.0;
      g(2 * j + 1) = 2.0 * a2;
    }
  }
  const Eigen::Matrix4d inv = fit.cov.inverse();
  const double sdot = (inv * c).trace() + 0.5 * (inv * g.asDiagonal()).trace();

  CslTerms out;
  out.delta_c = std::sqrt(variance(hc));
  out.delta_e = std::sqrt(variance(h0));
  out.sigma0 = sdot - beta0 * edot;
  out.flow = beta0 * 0.5 * cfg.k * (cfg.freqs[0] + cfg.freqs[1]) * r12;
  out.surprisal = 2.0 * out.delta_c * std::sqrt(s * s + 2.0);
  out.geometric = 2.0 * beta0 * out.delta_c * out.delta_e;
  out.rhs = out.flow + out.surprisal + out.geometric - out.sigma0;
  return out;
}

double surprisal_second_moment_mc(const GaussianState& fit, std::size_t samples, std::uint64_t seed) {
  const Index d = fit.cov.rows();
  Eigen::LLT<Eigen::MatrixXd> llt(fit.cov);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::DegenerateDistribution, "covariance is singular");
  const Eigen::MatrixXd l = llt.matrixL();
  double log_norm = 0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi);
  for (Index i = 0; i < d; ++i) log_norm += std::log(l(i, i));
  double acc = 0.0;
  Eigen::VectorXd u(d);
  for (std::size_t m = 0; m < samples; ++m) {
    CounterRng rng({seed, m});
    for (Index i = 0; i < d; ++i) u(i) = rng.normal();
    // x = mean + L u  =>  (x - mean)^T cov^{-1} (x - mean) = |u|^2
    const double lnf = -0.5 * u.squaredNorm() - log_norm;
    acc += lnf * lnf;
  }
  return acc / static_cast<double>(samples);
}

void PhaseCoherence::add(const SLEnsemble& ens) {
  for (std::size_t m = 0; m < ens.size(); ++m) {
    const cd p = ens.z1[m] * std::conj(ens.z2[m]);
    const double a = std::abs(p);
    if (a > 0.0) {
      sum_ += p / a;
      ++count_;
    }
  }
}

double PhaseCoherence::circular_variance() const {
  if (count_ == 0) return 1.0;
  return 1.0 - std::abs(sum_) / static_cast<double>(count_);
}

SLEnsemble integrate_classical(const SLConfig& cfg, const SLObserver& observer) {
  SLEnsemble ens = initial_ensemble(cfg);
  const Index n = cfg.total_steps();
  if (observer) observer(ens);
  for (Index s = 1; s <= n; ++s) {
    em_step(ens, cfg);
    if (observer && (s % cfg.sample_stride == 0 || s == n)) observer(ens);
  }
  return ens;
}

}  // namespace qsync
