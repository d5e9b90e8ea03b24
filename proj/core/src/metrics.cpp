#include "qsync/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "qsync/errors.hpp"

namespace qsync {

namespace {

double log_floor(double p) { return p > kEigenFloor ? std::log(p) : 0.0; }
double plogp_floor(double p) { return p > kEigenFloor ? p * std::log(p) : 0.0; }

void require_square_dims(const BlockMatrix& rho, const Operator& op) {
  if (op.rows() != rho.dim() || op.cols() != rho.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "operator does not match state dimension");
  }
}

/// ln(sigma) on the partition of `rho`; exactly diagonal blocks use their
/// entries directly. Sets `divergent` when rho has weight outside supp(sigma).
BlockMatrix support_log(const BlockMatrix& sigma, const BlockMatrix& rho, bool& divergent) {
  divergent = false;
  BlockMatrix out(rho.partition());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver;
  for (std::size_t b = 0; b < sigma.num_blocks(); ++b) {
    const auto& s = sigma.block(b);
    const auto& r = rho.block(b);
    const Index n = s.rows();
    bool diag = true;
    for (Index c = 0; c < n && diag; ++c) {
      for (Index i = 0; i < n; ++i) {
        if (i != c && s(i, c) != Complex{}) {
          diag = false;
          break;
        }
      }
    }
    auto& dst = out.block(b);
    if (diag) {
      for (Index i = 0; i < n; ++i) {
        const double sv = s(i, i).real();
        if (sv > 0.0) {
          dst(i, i) = std::log(sv);
        } else if (r(i, i).real() >= kSupportWeight) {
          divergent = true;
        }
      }
      continue;
    }
    solver.compute(s);
    if (solver.info() != Eigen::Success) throw Error(ErrorCode::InvalidState, "eigensolver did not converge");
    const auto& vals = solver.eigenvalues();
    const auto& vecs = solver.eigenvectors();
    Eigen::VectorXd logs(n);
    for (Index k = 0; k < n; ++k) {
      if (vals(k) > kEigenFloor) {
        logs(k) = std::log(vals(k));
      } else {
        logs(k) = 0.0;
        const double w = (vecs.col(k).adjoint() * r * vecs.col(k))(0, 0).real();
        if (w >= kSupportWeight) divergent = true;
      }
    }
    dst.noalias() = vecs * logs.asDiagonal() * vecs.adjoint();
  }
  return out;
}

BlockMatrix to_block(const Operator& op, const PartitionPtr& p) {
  BlockMatrix out(p);
  for (Index c = 0; c < op.outerSize(); ++c) {
    for (Operator::InnerIterator it(op, c); it; ++it) {
      const auto b = p->block_of(it.row());
      if (p->block_of(c) != b) throw Error(ErrorCode::InvalidArgument, "operator is not block-diagonal");
      out.block(b)(p->local_of(it.row()), p->local_of(c)) = it.value();
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

SyncDistance sync_distance(const PhaseSpaceMoments& m) {
  const std::size_t n = m.modes();
  if (n < 2 || m.second.rows() != static_cast<Index>(2 * n)) {
    throw Error(ErrorCode::DimensionMismatch, "sync distance needs at least two modes");
  }
  double r2 = 0.0;
  for (Index i = 0; i < static_cast<Index>(2 * n); ++i) r2 += m.second(i, i);
  if (!(r2 > 0.0)) throw Error(ErrorCode::UndefinedMeasure, "total phase-space radius is zero");

  SyncDistance out;
  if (n == 2) {
    const auto& s = m.second;
    const double diff = s(0, 0) + s(2, 2) - 2.0 * s(0, 2) + s(1, 1) + s(3, 3) - 2.0 * s(1, 3);
    out.d2 = diff / r2;
    const double f = (s(0, 0) + s(1, 1)) / r2;
    out.s_r = 2.0 * std::sqrt(std::max(0.0, f * (1.0 - f)));
    const double n1 = std::hypot(m.mean(0), m.mean(1));
    const double n2 = std::hypot(m.mean(2), m.mean(3));
    if (n1 > kMeanFloor && n2 > kMeanFloor) out.s_theta = (s(0, 2) + s(1, 3)) / (n1 * n2);
  } else {
    double sx = 0.0;
    double sp = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        sx += m.second(static_cast<Index>(2 * j), static_cast<Index>(2 * k));
        sp += m.second(static_cast<Index>(2 * j + 1), static_cast<Index>(2 * k + 1));
      }
    }
    const double nn = static_cast<double>(n);
    const double rbar2 = (sx + sp) / (nn * nn);
    out.d2 = 2.0 * (1.0 - nn * rbar2 / r2);
  }
  return out;
}

PhaseSpaceMoments phase_space_moments(const BlockMatrix& rho, const std::vector<Operator>& quads) {
  const auto n = static_cast<Index>(quads.size());
  PhaseSpaceMoments m;
  m.mean.resize(n);
  m.second.resize(n, n);
  for (Index i = 0; i < n; ++i) {
    require_square_dims(rho, quads[static_cast<std::size_t>(i)]);
    m.mean(i) = rho.expectation(quads[static_cast<std::size_t>(i)]).real();
  }
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j) {
      const Operator prod = quads[static_cast<std::size_t>(i)] * quads[static_cast<std::size_t>(j)];
      m.second(i, j) = m.second(j, i) = rho.expectation(prod).real();
    }
  }
  return m;
}

SyncDistance sync_distance(const BlockMatrix& rho, const std::vector<Operator>& quads) {
  return sync_distance(phase_space_moments(rho, quads));
}

// ---------------------------------------------------------------------------

double entropy_of_spectrum(const HermitianEigen& eig) {
  const double lo = eig.min_value();
  if (lo < -kPositivityTolerance) {
    throw Error(ErrorCode::InvalidState, "state has eigenvalue " + std::to_string(lo));
  }
  double s = 0.0;
  for (const auto& v : eig.values()) {
    for (Index i = 0; i < v.size(); ++i) s -= plogp_floor(v(i));
  }
  return s;
}

double von_neumann_entropy(const BlockMatrix& rho) { return entropy_of_spectrum(rho.eigen(false)); }

double relative_entropy(const BlockMatrix& rho, const BlockMatrix& sigma) {
  if (rho.dim() != sigma.dim()) throw Error(ErrorCode::DimensionMismatch, "states have different dimensions");
  const auto joint = BlockPartition::join(*rho.partition(), *sigma.partition());
  const BlockMatrix r = rho.restructured(joint);
  const BlockMatrix s = sigma.restructured(joint);
  bool divergent = false;
  const BlockMatrix log_s = support_log(s, r, divergent);
  if (divergent) return kInfiniteDivergence;
  const double neg_s = -von_neumann_entropy(r);
  return neg_s - trace_product(r, log_s).real();
}

double thermal_occupation(double beta, double omega) { return 1.0 / std::expm1(beta * omega); }

double gibbs_energy(double beta, const std::vector<double>& freqs) {
  double e = 0.0;
  for (double w : freqs) e += w * (thermal_occupation(beta, w) + 0.5);
  return e;
}

double gibbs_entropy(double beta, const std::vector<double>& freqs) {
  double s = 0.0;
  for (double w : freqs) {
    const double x = beta * w;
    // (n+1)ln(n+1) - n ln n  =  x n - ln(1 - e^{-x})
    s += x * thermal_occupation(beta, w) - std::log1p(-std::exp(-x));
  }
  return s;
}

double beta_from_energy(double energy, const std::vector<double>& freqs) {
  if (freqs.empty()) throw Error(ErrorCode::InvalidArgument, "no frequencies");
  double ground = 0.0;
  for (double w : freqs) {
    if (!(w > 0.0)) throw Error(ErrorCode::InvalidArgument, "frequencies must be positive");
    ground += 0.5 * w;
  }
  const double excess = energy - ground;
  if (!(excess > 0.0) || !std::isfinite(excess)) {
    throw Error(ErrorCode::NoSolution, "energy is not above the ground-state energy");
  }
  auto g = [&](double b) {
    double e = 0.0;
    for (double w : freqs) e += w / std::expm1(b * w);
    return e;
  };
  const double wmin = *std::min_element(freqs.begin(), freqs.end());
  double lo = 1e-6 / wmin;
  double hi = 1e3 / wmin;
  for (int i = 0; g(lo) < excess; ++i) {
    if (i > 300) throw Error(ErrorCode::NoSolution, "energy too large to invert");
    hi = lo;
    lo *= 0.1;
  }
  for (int i = 0; g(hi) > excess; ++i) {
    if (i > 300) throw Error(ErrorCode::NoSolution, "energy too close to the ground state to invert");
    lo = hi;
    hi *= 10.0;
  }
  // g is decreasing: g(lo) >= excess >= g(hi).
  for (int i = 0; i < 2000; ++i) {
    const double mid = hi / lo > 2.0 ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (g(mid) > excess) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double chi_from(double energy, double entropy, const std::vector<double>& freqs) {
  return gibbs_entropy(beta_from_energy(energy, freqs), freqs) - entropy;
}

double chi(const BlockMatrix& rho, const SystemSpec& spec) {
  const Operator h0 = build_h0(spec);
  require_square_dims(rho, h0);
  return chi_from(rho.expectation(h0).real(), von_neumann_entropy(rho), spec.freqs);
}

double big_l(const BlockMatrix& rho, const BlockMatrix& rho0) { return relative_entropy(rho, rho0); }

double sigma0(const BlockMatrix& rho, const BlockMatrix& rho0, const std::vector<Operator>& jumps) {
  if (jumps.empty()) return 0.0;
  const BlockMatrix d = apply_dissipator(rho, jumps);
  const auto joint = BlockPartition::join(*d.partition(), *rho0.partition());
  const BlockMatrix r = rho.restructured(joint);
  const BlockMatrix dj = d.restructured(joint);
  bool divergent = false;
  const BlockMatrix log_r0 = support_log(rho0.restructured(joint), r, divergent);
  if (divergent) return kInfiniteDivergence;
  const BlockMatrix log_r = r.eigen(true).apply(log_floor);
  return -trace_product(dj, log_r - log_r0).real();
}

RateTerms ldot_exact(const BlockMatrix& rho, const BlockMatrix& rho0, const SystemSpec& spec) {
  const auto ops = SystemOperators::build(spec);
  auto gen = std::make_shared<const Liouvillian>(ops, Liouvillian::invariant_partition(ops, *rho.partition()));
  const MetricsContext ctx(spec, ops, gen, rho0);
  const auto rec = ctx.evaluate(0.0, rho.restructured(gen->partition()));
  RateTerms out;
  out.ldot = rec.ldot_exact;
  out.cov_ce = rec.cov_ce;
  out.delta_c = rec.delta_c;
  out.delta_e = rec.delta_e;
  out.sigma0 = rec.sigma0;
  out.coupling_term = rec.ldot_exact + rec.sigma0 - 2.0 * spec.beta() * rec.cov_ce;
  return out;
}

QslResult qsl_bound(const BlockMatrix& rho, const SystemSpec& spec, QslMode mode) {
  const auto ops = SystemOperators::build(spec);
  auto gen = std::make_shared<const Liouvillian>(ops, Liouvillian::invariant_partition(ops, *rho.partition()));
  const MetricsContext ctx(spec, ops, gen, initial_product_state(spec), mode);
  const auto rec = ctx.evaluate(0.0, rho.restructured(gen->partition()));
  QslResult out;
  out.rhs = rec.qsl_rhs;
  out.cap_ent = rec.cap_ent;
  out.s_ge = rec.chi + rec.entropy;
  out.discriminant = rec.delta_e * rec.delta_e * rec.delta_c * rec.delta_c -
                     0.5 * std::norm(rec.commutator_direct);
  out.clamped = rec.qsl_clamped;
  out.commutator_direct = rec.commutator_direct;
  out.commutator_analytic = rec.commutator_analytic;
  return out;
}

// ---------------------------------------------------------------------------

void BoundParams::validate() const {
  if (n_modes < 2) throw Error(ErrorCode::InvalidArgument, "bounds need at least two modes");
  if (!(kappa > 0.0 && kappa <= 1.0)) throw Error(ErrorCode::InvalidArgument, "kappa must lie in (0, 1]");
  if (!std::isfinite(distance)) throw Error(ErrorCode::InvalidArgument, "D must be finite");
}

ChiBound chi_lower_bound(const BoundParams& params, Regime regime) {
  params.validate();
  ChiBound out;
  if (params.distance <= 0.0) {
    out.finite = out.asymptotic = std::numeric_limits<double>::infinity();
    out.divergent = true;
    return out;
  }
  const double n = params.n_modes;
  const double e = std::numbers::e;
  const double base = regime == Regime::Quantum ? e * n / (2.0 * params.kappa) : n / params.kappa;
  // -2(N-1) ln( sqrt(base^{N/(N-1)} / (2(N-1))) D ), expanded in logs
  const double log_arg = 0.5 * (n / (n - 1.0) * std::log(base) - std::log(2.0 * (n - 1.0))) + std::log(params.distance);
  out.finite = -2.0 * (n - 1.0) * log_arg;
  const double d2 = params.distance * params.distance;
  out.asymptotic = regime == Regime::Quantum ? -n * std::log(e * d2 / (4.0 * params.kappa))
                                             : -n * std::log(d2 / (2.0 * params.kappa));
  return out;
}

ChiBound work_lower_bound(const BoundParams& params, double temperature, Regime regime) {
  if (!(temperature > 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be positive");
  ChiBound b = chi_lower_bound(params, regime);
  b.finite *= temperature;
  b.asymptotic *= temperature;
  return b;
}

// ---------------------------------------------------------------------------

MetricsContext::MetricsContext(const SystemSpec& spec, const SystemOperators& ops,
                               std::shared_ptr<const Liouvillian> gen, const BlockMatrix& rho0, QslMode mode)
    : spec_(spec), quads_(ops.quads), h0_(ops.h0), hc_(ops.hc), gen_(std::move(gen)), mode_(mode) {
  if (!rho0.is_diagonal()) throw Error(ErrorCode::InvalidArgument, "reference state must be diagonal");
  require_square_dims(rho0, h0_);
  if (quads_.empty()) quads_ = quadratures(spec);
  rho0_ = rho0.restructured(gen_->partition());
  const Eigen::VectorXd p0 = rho0.diagonal_entries().real();
  log_rho0_.resize(p0.size());
  for (Index i = 0; i < p0.size(); ++i) {
    log_rho0_(i) = p0(i) > 0.0 ? std::log(p0(i)) : -std::numeric_limits<double>::infinity();
  }
  h0_sq_ = h0_ * h0_;
  hc_sq_ = hc_ * hc_;
  const Operator h0hc = h0_ * hc_;
  const Operator hch0 = hc_ * h0_;
  anti_ = 0.5 * (h0hc + hch0);
  comm_direct_ = h0hc - hch0;
  if (spec.modes() == 2) {
    const Operator a1 = embed(annihilation(spec.dims.dims[0]), 0, spec.dims);
    const Operator a2 = embed(annihilation(spec.dims.dims[1]), 1, spec.dims);
    const Operator hop = Operator(a1.adjoint()) * a2;
    comm_analytic_ = (0.5 * spec.k * (spec.freqs[0] - spec.freqs[1])) * (hop - Operator(hop.adjoint()));
  } else {
    comm_analytic_ = Operator(h0_.rows(), h0_.cols());
  }
  hc_norm_ = hc_.nonZeros() > 0 ? to_block(hc_, gen_->partition()).eigen(false).max_abs_value() : 0.0;
}

double MetricsContext::relative_to_initial(const BlockMatrix& rho, const HermitianEigen& eig) const {
  const double s = entropy_of_spectrum(eig);
  double cross = 0.0;
  for (std::size_t b = 0; b < rho.num_blocks(); ++b) {
    const auto& idx = rho.partition()->block(b);
    const auto& m = rho.block(b);
    for (std::size_t l = 0; l < idx.size(); ++l) {
      const double w = m(static_cast<Index>(l), static_cast<Index>(l)).real();
      const double lg = log_rho0_(idx[l]);
      if (std::isinf(lg)) {
        if (w >= kSupportWeight) return kInfiniteDivergence;
        continue;
      }
      cross += w * lg;
    }
  }
  return -s - cross;
}

double MetricsContext::relative_to_initial(const BlockMatrix& rho) const {
  return relative_to_initial(rho, rho.eigen(false));
}

MetricsRecord MetricsContext::evaluate(double t, const BlockMatrix& rho) const {
  const BlockMatrix r = rho.restructured(gen_->partition());
  return evaluate(t, r, r.eigen(true));
}

MetricsRecord MetricsContext::evaluate(double t, const BlockMatrix& rho_in, const HermitianEigen& eig) const {
  if (rho_in.partition() != gen_->partition() && !(*rho_in.partition() == *gen_->partition())) {
    return evaluate(t, rho_in);
  }
  const BlockMatrix& rho = rho_in;
  MetricsRecord rec;
  rec.t = t;

  const auto sync = sync_distance(phase_space_moments(rho, quads_));
  rec.d2 = sync.d2;
  rec.s_theta = sync.s_theta;
  rec.s_r = sync.s_r;

  rec.min_eig = eig.min_value();
  rec.trace_err = std::abs(rho.trace().real() - 1.0);
  rec.entropy = entropy_of_spectrum(eig);
  double second = 0.0;
  for (const auto& v : eig.values()) {
    for (Index i = 0; i < v.size(); ++i) {
      const double lg = log_floor(v(i));
      if (v(i) > kEigenFloor) second += v(i) * lg * lg;
    }
  }
  rec.cap_ent = second - rec.entropy * rec.entropy;

  rec.energy = rho.expectation(h0_).real();
  const double s_ge = gibbs_entropy(beta_from_energy(rec.energy, spec_.freqs), spec_.freqs);
  rec.chi = s_ge - rec.entropy;
  rec.big_l = relative_to_initial(rho, eig);

  const BlockMatrix log_rho = eig.apply(log_floor);
  const BlockMatrix d = gen_->apply_dissipator(rho);
  double cross0 = 0.0;
  bool divergent = false;
  for (std::size_t b = 0; b < d.num_blocks(); ++b) {
    const auto& idx = d.partition()->block(b);
    for (std::size_t l = 0; l < idx.size(); ++l) {
      const double dv = d.block(b)(static_cast<Index>(l), static_cast<Index>(l)).real();
      const double lg = log_rho0_(idx[l]);
      if (std::isinf(lg)) {
        if (std::abs(dv) >= kSupportWeight) divergent = true;
        continue;
      }
      cross0 += dv * lg;
    }
  }
  rec.sigma0 = divergent ? kInfiniteDivergence : -(trace_product(d, log_rho).real() - cross0);

  const double beta0 = spec_.beta();
  const double mhc = rho.expectation(hc_).real();
  const double hc2 = rho.expectation(hc_sq_).real();
  const double h02 = rho.expectation(h0_sq_).real();
  rec.cov_ce = rho.expectation(anti_).real() - rec.energy * mhc;
  rec.delta_c = std::sqrt(std::max(0.0, hc2 - mhc * mhc));
  rec.delta_e = std::sqrt(std::max(0.0, h02 - rec.energy * rec.energy));

  const BlockMatrix rho_log_rho = eig.apply(plogp_floor);
  const double coupling = 2.0 * (rho_log_rho.expectation(hc_).real() + mhc * rec.entropy);
  rec.ldot_exact = coupling + 2.0 * beta0 * rec.cov_ce - rec.sigma0;

  rec.commutator_direct = rho.expectation(comm_direct_);
  rec.commutator_analytic = rho.expectation(comm_analytic_);
  const double disc = rec.delta_e * rec.delta_e * rec.delta_c * rec.delta_c - 0.5 * std::norm(rec.commutator_direct);
  rec.qsl_clamped = disc < 0.0;
  const double geometric = 2.0 * beta0 * std::sqrt(std::max(0.0, disc));
  const double first = mode_ == QslMode::Unbounded
                           ? 2.0 * rec.delta_c * std::sqrt(std::max(0.0, rec.cap_ent) + s_ge * s_ge)
                           : 4.0 * hc_norm_ * s_ge;
  rec.qsl_rhs = first + geometric - rec.sigma0;
  return rec;
}

}  // namespace qsync
