#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include <qsync/fock.hpp>

namespace qsync::test {

inline constexpr double kPi = std::numbers::pi;

/// Two modes at 2pi and 3pi, T = 20, gamma+ = 1e-3.
inline SystemSpec dimer_spec(double k, double tail = 1e-9) {
  SystemSpec s;
  s.freqs = {2.0 * kPi, 3.0 * kPi};
  s.k = k;
  s.temperature = 20.0;
  s.gamma_plus = {1e-3, 1e-3};
  s.dims = auto_dims(s.freqs, s.temperature, tail);
  return s;
}

inline SystemSpec small_spec(double k, Index d1, Index d2) {
  SystemSpec s;
  s.freqs = {1.0, 1.7};
  s.k = k;
  s.temperature = 1.5;
  s.gamma_plus = {0.02, 0.03};
  s.dims.dims = {d1, d2};
  return s;
}

/// Thermal product state without the truncation guard, for deliberately tiny spaces.
inline BlockMatrix initial(const SystemSpec& s) { return thermal_product_state(s.beta(), s.freqs, s.dims); }

inline Eigen::MatrixXcd dense(const Operator& op) { return Eigen::MatrixXcd(op); }

/// Random density matrix of full rank.
inline Eigen::MatrixXcd random_density(Index dim, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n;
  Eigen::MatrixXcd a(dim, dim);
  for (Index i = 0; i < dim; ++i) {
    for (Index j = 0; j < dim; ++j) a(i, j) = Complex(n(gen), n(gen));
  }
  Eigen::MatrixXcd rho = a * a.adjoint();
  return rho / rho.trace();
}

/// Direct dense evaluation of the nonlinear generator.
inline Eigen::MatrixXcd dense_generator(const Eigen::MatrixXcd& rho, const SystemOperators& ops) {
  const Complex i(0.0, 1.0);
  const Eigen::MatrixXcd h0 = dense(ops.h0);
  const Eigen::MatrixXcd hc = dense(ops.hc);
  Eigen::MatrixXcd out = -i * (h0 * rho - rho * h0) + hc * rho + rho * hc - 2.0 * (hc * rho).trace().real() * rho;
  for (const auto& f : ops.jumps) {
    const Eigen::MatrixXcd fd = dense(f);
    const Eigen::MatrixXcd ff = fd.adjoint() * fd;
    out += fd * rho * fd.adjoint() - 0.5 * (ff * rho + rho * ff);
  }
  return out;
}

}  // namespace qsync::test
