#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "qsync/metrics.hpp"

namespace qsync {

/// Mean and covariance of (x_1, p_1, ..., x_N, p_N); vacuum has cov = 1/2.
struct GaussianState {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  std::size_t modes() const noexcept { return static_cast<std::size_t>(mean.size() / 2); }
  /// Symmetry and the uncertainty relation cov + i Omega / 2 >= 0.
  void validate() const;
  PhaseSpaceMoments moments() const;

  static GaussianState vacuum(std::size_t modes);
  static GaussianState thermal(const std::vector<double>& occupations);
};

/// Block-diagonal [[0, 1], [-1, 0]].
Eigen::MatrixXd symplectic_form(std::size_t modes);
/// Williamson spectrum, ascending, one value per mode.
Eigen::VectorXd symplectic_spectrum(const Eigen::MatrixXd& cov);
/// Smallest eigenvalue of cov + i Omega / 2.
double uncertainty_margin(const Eigen::MatrixXd& cov);

/// (nu + 1/2) ln(nu + 1/2) - (nu - 1/2) ln(nu - 1/2).
double single_mode_entropy(double nu);
double gaussian_entropy(const GaussianState& state);
/// 1/2 ln det(2 pi e cov).
double classical_entropy(const GaussianState& state);

/// sum_j w_j (<x_j^2> + <p_j^2>) / 2, means included.
double gaussian_energy(const GaussianState& state, const std::vector<double>& freqs);
double gaussian_chi(const GaussianState& state, const std::vector<double>& freqs, Regime regime);
/// Classical chi for a given covariance determinant and energy; Gibbs variances E/(N w_j).
double classical_chi_from(double energy, double log_det_cov, const std::vector<double>& freqs);
SyncDistance gaussian_sync_distance(const GaussianState& state);

struct SampleParams {
  std::size_t count = 1000;
  double theta = 1.0;   ///< mean of nu - 1/2
  double r_max = 1.5;   ///< squeezing drawn uniformly from [0, r_max]
  double s = 2.0;       ///< standard deviation of each mean component
  std::uint64_t seed = 0;
  void validate() const;
};

struct GaussianDraw {
  GaussianState state;
  Eigen::Vector2d nu;
  double r = 0.0;
};

/// The index-th two-mode draw; depends only on (params, index).
GaussianDraw sample_gaussian(const SampleParams& params, std::uint64_t index);
std::vector<GaussianDraw> sample_random(const SampleParams& params);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2&) const = default;
};

struct Hull {
  std::vector<Point2> vertices;  ///< counterclockwise, collinear points dropped
  bool degenerate = false;       ///< fewer than three non-collinear points
};

Hull convex_hull(std::vector<Point2> points);
double polygon_area(const std::vector<Point2>& polygon);

}  // namespace qsync
