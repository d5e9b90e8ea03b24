#include "qsync/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "qsync/errors.hpp"
#include "qsync/random.hpp"

namespace qsync {

namespace {

constexpr double kNuTolerance = 1e-6;

void check_shape(const GaussianState& s) {
  const Index n = s.mean.size();
  if (n == 0 || n % 2 != 0 || s.cov.rows() != n || s.cov.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "mean and covariance must have matching even size");
  }
}

Eigen::Matrix4d rotation(double a, double b) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  m.block<2, 2>(0, 0) << std::cos(a), std::sin(a), -std::sin(a), std::cos(a);
  m.block<2, 2>(2, 2) << std::cos(b), std::sin(b), -std::sin(b), std::cos(b);
  return m;
}

Eigen::Matrix4d beam_splitter(double t) {
  const double c = std::cos(t);
  const double s = std::sin(t);
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  m(0, 0) = m(1, 1) = m(2, 2) = m(3, 3) = c;
  m(0, 2) = m(1, 3) = s;
  m(2, 0) = m(3, 1) = -s;
  return m;
}

Eigen::Matrix4d random_passive(CounterRng& rng) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double a = two_pi * rng.uniform();
  const double b = two_pi * rng.uniform();
  const double t = two_pi * rng.uniform();
  const double c = two_pi * rng.uniform();
  const double d = two_pi * rng.uniform();
  return rotation(c, d) * beam_splitter(t) * rotation(a, b);
}

}  // namespace

Eigen::MatrixXd symplectic_form(std::size_t modes) {
  const auto n = static_cast<Index>(2 * modes);
  Eigen::MatrixXd om = Eigen::MatrixXd::Zero(n, n);
  for (Index j = 0; j < n; j += 2) {
    om(j, j + 1) = 1.0;
    om(j + 1, j) = -1.0;
  }
  return om;
}

Eigen::VectorXd symplectic_spectrum(const Eigen::MatrixXd& cov) {
  const Index n = cov.rows();
  if (n == 0 || n % 2 != 0 || cov.cols() != n) throw Error(ErrorCode::DimensionMismatch, "covariance must be 2N x 2N");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (cov + cov.transpose()));
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw Error(ErrorCode::UnphysicalState, "covariance is not positive definite");
  }
  const Eigen::MatrixXd root = es.operatorSqrt();
  const Eigen::MatrixXcd herm =
      Complex(0.0, 1.0) * (root * symplectic_form(static_cast<std::size_t>(n / 2)) * root).cast<Complex>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> hs(herm, Eigen::EigenvaluesOnly);
  // Eigenvalues come as +-nu; pair them by magnitude.
  Eigen::VectorXd mags = hs.eigenvalues().cwiseAbs();
  std::sort(mags.data(), mags.data() + mags.size());
  Eigen::VectorXd nu(n / 2);
  for (Index j = 0; j < n / 2; ++j) nu(j) = 0.5 * (mags(2 * j) + mags(2 * j + 1));
  if (nu.minCoeff() < 0.5 - kNuTolerance) {
    throw Error(ErrorCode::UnphysicalState, "symplectic eigenvalue below 1/2");
  }
  return nu;
}

double uncertainty_margin(const Eigen::MatrixXd& cov) {
  const auto modes = static_cast<std::size_t>(cov.rows() / 2);
  const Eigen::MatrixXcd m =
      cov.cast<Complex>() + Complex(0.0, 0.5) * symplectic_form(modes).cast<Complex>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void GaussianState::validate() const {
  check_shape(*this);
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, cov.cwiseAbs().maxCoeff())) {
    throw Error(ErrorCode::UnphysicalState, "covariance is not symmetric");
  }
  if (uncertainty_margin(cov) < -1e-10) throw Error(ErrorCode::UnphysicalState, "uncertainty relation violated");
}

PhaseSpaceMoments GaussianState::moments() const {
  check_shape(*this);
  return PhaseSpaceMoments{mean, cov + mean * mean.transpose()};
}

GaussianState GaussianState::vacuum(std::size_t modes) {
  const auto n = static_cast<Index>(2 * modes);
  return GaussianState{Eigen::VectorXd::Zero(n), 0.5 * Eigen::MatrixXd::Identity(n, n)};
}

GaussianState GaussianState::thermal(const std::vector<double>& occupations) {
  GaussianState s = vacuum(occupations.size());
  for (std::size_t j = 0; j < occupations.size(); ++j) {
    s.cov(2 * j, 2 * j) = s.cov(2 * j + 1, 2 * j + 1) = occupations[j] + 0.5;
  }
  return s;
}

double single_mode_entropy(double nu) {
  const double up = nu + 0.5;
  const double down = nu - 0.5;
  const double tail = down > 0.0 ? down * std::log(down) : 0.0;
  return up * std::log(up) - tail;
}

double gaussian_entropy(const GaussianState& state) {
  check_shape(state);
  double s = 0.0;
  const auto nu = symplectic_spectrum(state.cov);
  for (Index j = 0; j < nu.size(); ++j) s += single_mode_entropy(nu(j));
  return s;
}

namespace {
double log_det(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::DegenerateDistribution, "covariance is singular");
  const auto& l = llt.matrixL();
  double ld = 0.0;
  for (Index i = 0; i < cov.rows(); ++i) {
    const double d = l(i, i);
    if (!(d > 0.0)) throw Error(ErrorCode::DegenerateDistribution, "covariance is singular");
    ld += 2.0 * std::log(d);
  }
  return ld;
}
}  // namespace

double classical_entropy(const GaussianState& state) {
  check_shape(state);
  const double n = static_cast<double>(state.cov.rows());
  return 0.5 * (n * std::log(2.0 * std::numbers::pi * std::numbers::e) + log_det(state.cov));
}

double gaussian_energy(const GaussianState& state, const std::vector<double>& freqs) {
  check_shape(state);
  if (freqs.size() != state.modes()) throw Error(ErrorCode::DimensionMismatch, "one frequency per mode required");
  double e = 0.0;
  for (std::size_t j = 0; j < freqs.size(); ++j) {
    const auto x = static_cast<Index>(2 * j);
    const double x2 = state.cov(x, x) + state.mean(x) * state.mean(x);
    const double p2 = state.cov(x + 1, x + 1) + state.mean(x + 1) * state.mean(x + 1);
    e += 0.5 * freqs[j] * (x2 + p2);
  }
  return e;
}

double classical_chi_from(double energy, double log_det_cov, const std::vector<double>& freqs) {
  if (!(energy > 0.0)) throw Error(ErrorCode::NoSolution, "classical energy must be positive");
  const double n = static_cast<double>(freqs.size());
  double log_det_gibbs = 0.0;
  for (double w : freqs) log_det_gibbs += 2.0 * std::log(energy / (n * w));
  return 0.5 * (log_det_gibbs - log_det_cov);
}

double gaussian_chi(const GaussianState& state, const std::vector<double>& freqs, Regime regime) {
  const double e = gaussian_energy(state, freqs);
  if (regime == Regime::Quantum) return chi_from(e, gaussian_entropy(state), freqs);
  return classical_chi_from(e, log_det(state.cov), freqs);
}

SyncDistance gaussian_sync_distance(const GaussianState& state) { return sync_distance(state.moments()); }

// ---------------------------------------------------------------------------

void SampleParams::validate() const {
  if (!(theta >= 0.0) || !(r_max >= 0.0) || !(s >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "sampling scales must be non-negative");
  }
}

GaussianDraw sample_gaussian(const SampleParams& params, std::uint64_t index) {
  CounterRng rng({params.seed, index, 0x6761757373ULL});
  GaussianDraw d;
  d.nu << 0.5 + rng.exponential(params.theta), 0.5 + rng.exponential(params.theta);
  d.r = params.r_max * rng.uniform();
  const Eigen::Matrix4d o1 = random_passive(rng);
  const Eigen::Matrix4d o2 = random_passive(rng);
  const Eigen::Vector4d sq(std::exp(d.r), std::exp(-d.r), std::exp(d.r), std::exp(-d.r));
  const Eigen::Matrix4d s = o1 * sq.asDiagonal() * o2;
  const Eigen::Vector4d nu(d.nu(0), d.nu(0), d.nu(1), d.nu(1));
  Eigen::MatrixXd cov = s * nu.asDiagonal() * s.transpose();
  cov = 0.5 * (cov + cov.transpose()).eval();
  Eigen::VectorXd mean(4);
  for (Index i = 0; i < 4; ++i) mean(i) = params.s * rng.normal();
  d.state = GaussianState{std::move(mean), std::move(cov)};
  return d;
}

std::vector<GaussianDraw> sample_random(const SampleParams& params) {
  params.validate();
  std::vector<GaussianDraw> out;
  out.reserve(params.count);
  for (std::size_t i = 0; i < params.count; ++i) out.push_back(sample_gaussian(params, i));
  return out;
}

// ---------------------------------------------------------------------------

namespace {
double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}
}  // namespace

Hull convex_hull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  Hull h;
  if (pts.size() < 3) {
    h.vertices = pts;
    h.degenerate = true;
    return h;
  }
  std::vector<Point2> v(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(v[k - 2], v[k - 1], p) <= 0.0) --k;
    v[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(v[k - 2], v[k - 1], pts[i]) <= 0.0) --k;
    v[k++] = pts[i];
  }
  v.resize(k - 1);
  if (v.size() < 3) {
    // All points collinear: report the extreme segment.
    h.vertices = {pts.front(), pts.back()};
    h.degenerate = true;
    return h;
  }
  h.vertices = std::move(v);
  return h;
}

double polygon_area(const std::vector<Point2>& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

}  // namespace qsync
