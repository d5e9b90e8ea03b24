#include "qsync/fock.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qsync/errors.hpp"

namespace qsync {

namespace {

using Triplet = Eigen::Triplet<Complex>;

Operator from_triplets(Index dim, const std::vector<Triplet>& t) {
  Operator op(dim, dim);
  op.setFromTriplets(t.begin(), t.end());
  op.makeCompressed();
  return op;
}

void check_dim(Index dim) {
  if (dim < 2) throw Error(ErrorCode::InvalidDimension, "mode dimension must be >= 2, got " + std::to_string(dim));
}

}  // namespace

// ---------------------------------------------------------------------------

Index ModeDims::total() const noexcept {
  Index n = 1;
  for (Index d : dims) n *= d;
  return n;
}

void ModeDims::validate() const {
  if (dims.empty()) throw Error(ErrorCode::InvalidDimension, "at least one mode is required");
  for (Index d : dims) check_dim(d);
}

std::vector<Index> ModeDims::unflatten(Index flat) const {
  std::vector<Index> levels(dims.size());
  for (std::size_t j = dims.size(); j-- > 0;) {
    levels[j] = flat % dims[j];
    flat /= dims[j];
  }
  return levels;
}

Index ModeDims::flatten(const std::vector<Index>& levels) const {
  Index flat = 0;
  for (std::size_t j = 0; j < dims.size(); ++j) flat = flat * dims[j] + levels[j];
  return flat;
}

std::vector<double> SystemSpec::gamma_minus_effective() const {
  if (gamma_minus) return *gamma_minus;
  std::vector<double> g(freqs.size());
  const double b = beta();
  for (std::size_t j = 0; j < freqs.size(); ++j) g[j] = std::exp(2.0 * b * freqs[j]) * gamma_plus[j];
  return g;
}

double SystemSpec::kappa() const {
  const auto [lo, hi] = std::minmax_element(freqs.begin(), freqs.end());
  return *lo / *hi;
}

void SystemSpec::validate() const {
  if (freqs.empty()) throw Error(ErrorCode::InvalidArgument, "no mode frequencies given");
  for (double w : freqs) {
    if (!(w > 0.0) || !std::isfinite(w)) throw Error(ErrorCode::InvalidArgument, "frequencies must be positive and finite");
  }
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorCode::InvalidArgument, "temperature must be positive");
  }
  if (!std::isfinite(k)) throw Error(ErrorCode::InvalidArgument, "coupling k must be finite");
  if (gamma_plus.size() != freqs.size()) {
    throw Error(ErrorCode::DimensionMismatch, "gamma_plus needs one rate per mode");
  }
  for (double g : gamma_plus) {
    if (!(g >= 0.0)) throw Error(ErrorCode::InvalidRate, "gamma_plus must be non-negative");
  }
  if (gamma_minus) {
    if (gamma_minus->size() != freqs.size()) {
      throw Error(ErrorCode::DimensionMismatch, "gamma_minus needs one rate per mode");
    }
    for (double g : *gamma_minus) {
      if (!(g >= 0.0)) throw Error(ErrorCode::InvalidRate, "gamma_minus must be non-negative");
    }
  }
  if (dims.modes() != freqs.size()) throw Error(ErrorCode::DimensionMismatch, "dims needs one entry per mode");
  dims.validate();
}

ModeDims auto_dims(const std::vector<double>& freqs, double temperature, double tail_target, Index min_dim) {
  if (!(tail_target > 0.0 && tail_target < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "tail target must lie in (0, 1)");
  }
  if (!(temperature > 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be positive");
  ModeDims out;
  for (double w : freqs) {
    if (!(w > 0.0)) throw Error(ErrorCode::InvalidArgument, "frequencies must be positive");
    // q^d <= target  <=>  d >= ln(target) / ln(q),  ln q = -w/T
    const double need = std::ceil(-std::log(tail_target) * temperature / w - 1e-12);
    out.dims.push_back(std::max<Index>(min_dim, static_cast<Index>(need)));
  }
  return out;
}

// ---------------------------------------------------------------------------

Operator annihilation(Index dim) {
  check_dim(dim);
  std::vector<Triplet> t;
  for (Index n = 0; n + 1 < dim; ++n) t.emplace_back(n, n + 1, std::sqrt(static_cast<double>(n + 1)));
  return from_triplets(dim, t);
}

Operator creation(Index dim) { return Operator(annihilation(dim).adjoint()); }

Operator number(Index dim) {
  check_dim(dim);
  std::vector<Triplet> t;
  for (Index n = 1; n < dim; ++n) t.emplace_back(n, n, static_cast<double>(n));
  return from_triplets(dim, t);
}

Operator identity(Index dim) {
  Operator id(dim, dim);
  id.setIdentity();
  return id;
}

Operator embed(const Operator& local, std::size_t mode, const ModeDims& dims) {
  if (mode >= dims.modes()) throw Error(ErrorCode::InvalidArgument, "mode index out of range");
  if (local.rows() != dims.dims[mode] || local.cols() != dims.dims[mode]) {
    throw Error(ErrorCode::DimensionMismatch, "local operator does not match the mode dimension");
  }
  Index left = 1;
  Index right = 1;
  for (std::size_t j = 0; j < mode; ++j) left *= dims.dims[j];
  for (std::size_t j = mode + 1; j < dims.modes(); ++j) right *= dims.dims[j];
  const Index d = dims.dims[mode];

  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(local.nonZeros() * left * right));
  for (Index c = 0; c < local.outerSize(); ++c) {
    for (Operator::InnerIterator it(local, c); it; ++it) {
      for (Index l = 0; l < left; ++l) {
        for (Index r = 0; r < right; ++r) {
          t.emplace_back((l * d + it.row()) * right + r, (l * d + c) * right + r, it.value());
        }
      }
    }
  }
  return from_triplets(dims.total(), t);
}

std::vector<Operator> quadratures(const SystemSpec& spec) {
  spec.dims.validate();
  std::vector<Operator> out;
  const double s = 1.0 / std::sqrt(2.0);
  const Complex i(0.0, 1.0);
  for (std::size_t j = 0; j < spec.dims.modes(); ++j) {
    const Operator a = annihilation(spec.dims.dims[j]);
    const Operator ad = creation(spec.dims.dims[j]);
    Operator x = s * (a + ad);
    Operator p = (-i * s) * (a - ad);
    out.push_back(embed(x, j, spec.dims));
    out.push_back(embed(p, j, spec.dims));
  }
  return out;
}

Operator build_h0(const SystemSpec& spec) {
  spec.dims.validate();
  if (spec.freqs.size() != spec.dims.modes()) throw Error(ErrorCode::DimensionMismatch, "dims needs one entry per mode");
  const Index dim = spec.dims.total();
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(dim));
  for (Index i = 0; i < dim; ++i) {
    const auto levels = spec.dims.unflatten(i);
    double e = 0.0;
    for (std::size_t j = 0; j < levels.size(); ++j) e += spec.freqs[j] * (static_cast<double>(levels[j]) + 0.5);
    t.emplace_back(i, i, e);
  }
  return from_triplets(dim, t);
}

Operator build_hc_dimer(const SystemSpec& spec) {
  if (spec.dims.modes() != 2) {
    throw Error(ErrorCode::UnsupportedTopology, "the dimer coupling needs exactly two modes");
  }
  spec.dims.validate();
  const Operator a1 = embed(annihilation(spec.dims.dims[0]), 0, spec.dims);
  const Operator a2 = embed(annihilation(spec.dims.dims[1]), 1, spec.dims);
  Operator hop = Operator(a1.adjoint()) * a2;
  Operator hc = (0.5 * spec.k) * (hop + Operator(hop.adjoint()));
  hc.prune(Complex{});
  hc.makeCompressed();
  return hc;
}

std::vector<Operator> jump_ops(const SystemSpec& spec) {
  spec.validate();
  const auto gm = spec.gamma_minus_effective();
  std::vector<Operator> out;
  for (std::size_t j = 0; j < spec.modes(); ++j) {
    const Operator a = annihilation(spec.dims.dims[j]);
    const Operator a2 = a * a;
    if (spec.gamma_plus[j] > 0.0) {
      out.push_back(embed(Operator(std::sqrt(spec.gamma_plus[j]) * Operator(a2.adjoint())), j, spec.dims));
    }
    if (gm[j] > 0.0) out.push_back(embed(Operator(std::sqrt(gm[j]) * a2), j, spec.dims));
  }
  return out;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd thermal_populations(double beta, double omega, Index dim) {
  check_dim(dim);
  if (!(beta > 0.0)) throw Error(ErrorCode::InvalidArgument, "beta must be positive");
  Eigen::VectorXd p(dim);
  for (Index n = 0; n < dim; ++n) p(n) = std::exp(-beta * omega * static_cast<double>(n));
  p /= p.sum();
  return p;
}

BlockMatrix thermal_state(double beta, double omega, Index dim) {
  return BlockMatrix::diagonal(thermal_populations(beta, omega, dim).cast<Complex>());
}

double top_two_mass(double beta, double omega, Index dim) {
  const auto p = thermal_populations(beta, omega, dim);
  return p(dim - 1) + p(dim - 2);
}

BlockMatrix thermal_product_state(double beta, const std::vector<double>& freqs, const ModeDims& dims) {
  dims.validate();
  if (freqs.size() != dims.modes()) throw Error(ErrorCode::DimensionMismatch, "one frequency per mode required");
  std::vector<Eigen::VectorXd> pops;
  for (std::size_t j = 0; j < dims.modes(); ++j) pops.push_back(thermal_populations(beta, freqs[j], dims.dims[j]));
  const Index dim = dims.total();
  Eigen::VectorXcd diag(dim);
  for (Index i = 0; i < dim; ++i) {
    const auto levels = dims.unflatten(i);
    double p = 1.0;
    for (std::size_t j = 0; j < levels.size(); ++j) p *= pops[j](levels[j]);
    diag(i) = p;
  }
  return BlockMatrix::diagonal(diag);
}

BlockMatrix initial_product_state(const SystemSpec& spec) {
  spec.validate();
  const double b = spec.beta();
  for (std::size_t j = 0; j < spec.modes(); ++j) {
    const double tail = top_two_mass(b, spec.freqs[j], spec.dims.dims[j]);
    if (tail > kTailGuard) {
      throw Error(ErrorCode::TruncationInsufficient,
                  "mode " + std::to_string(j) + ": top-two-level population " + std::to_string(tail) +
                      " exceeds 1e-4; increase dims");
    }
  }
  return thermal_product_state(b, spec.freqs, spec.dims);
}

SystemOperators SystemOperators::build(const SystemSpec& spec) {
  spec.validate();
  SystemOperators ops;
  ops.h0 = build_h0(spec);
  if (spec.modes() == 2) {
    ops.hc = build_hc_dimer(spec);
  } else if (spec.k == 0.0) {
    ops.hc = Operator(spec.dims.total(), spec.dims.total());
  } else {
    throw Error(ErrorCode::UnsupportedTopology, "coupling is only defined for the two-mode dimer");
  }
  ops.jumps = jump_ops(spec);
  ops.quads = quadratures(spec);
  return ops;
}

}  // namespace qsync
