#include "qsync/dynamics.hpp"

#include <cmath>
#include <map>
#include <string>
#include <utility>

#include "qsync/errors.hpp"

namespace qsync {

namespace {

constexpr double kFlushBelow = 1e-280;

using LocalTriplet = Eigen::Triplet<Complex>;

}  // namespace

Index IntegratorConfig::total_steps() const { return static_cast<Index>(std::llround(t_final / dt)); }

void IntegratorConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  if (!(t_final >= 0.0) || !std::isfinite(t_final)) throw Error(ErrorCode::InvalidArgument, "t_final must be >= 0");
  if (sample_stride < 1) throw Error(ErrorCode::InvalidArgument, "sample_stride must be >= 1");
  const double n = t_final / dt;
  if (std::abs(n - std::round(n)) > 1e-6 * std::max(1.0, n)) {
    throw Error(ErrorCode::InvalidArgument, "t_final must be an integer multiple of dt");
  }
}

// ---------------------------------------------------------------------------

PartitionPtr Liouvillian::invariant_partition(const SystemOperators& ops, const BlockPartition& state) {
  const Index dim = ops.h0.rows();
  if (state.dim() != dim) throw Error(ErrorCode::DimensionMismatch, "state does not match operator dimension");
  PartitionBuilder builder(dim);
  builder.join_partition(state);
  builder.join_pattern(ops.h0);
  builder.join_pattern(ops.hc);
  for (const auto& f : ops.jumps) builder.join_pattern(Operator(Operator(f.adjoint()) * f));
  builder.close_under_sandwich(ops.jumps);
  return builder.build();
}

Liouvillian::Liouvillian(const SystemOperators& ops, PartitionPtr partition) : partition_(std::move(partition)) {
  const auto& p = *partition_;
  const Index dim = p.dim();
  if (ops.h0.rows() != dim) throw Error(ErrorCode::DimensionMismatch, "operators do not match partition dimension");

  Operator decay(dim, dim);
  for (const auto& f : ops.jumps) decay += Operator(f.adjoint()) * f;
  decay *= 0.5;

  const Complex mi(0.0, -1.0);
  std::vector<std::vector<LocalTriplet>> t_h0(p.size()), t_hc(p.size()), t_decay(p.size());
  auto localize = [&](const Operator& op, std::vector<std::vector<LocalTriplet>>& dst, Complex scale) {
    for (Index c = 0; c < op.outerSize(); ++c) {
      for (Operator::InnerIterator it(op, c); it; ++it) {
        if (it.value() == Complex{}) continue;
        const auto b = p.block_of(it.row());
        if (p.block_of(c) != b) {
          throw Error(ErrorCode::InvalidArgument, "operator couples different blocks of the partition");
        }
        dst[b].emplace_back(p.local_of(it.row()), p.local_of(c), scale * it.value());
      }
    }
  };
  localize(ops.h0, t_h0, mi);
  localize(ops.hc, t_hc, 1.0);
  localize(decay, t_decay, 1.0);

  blocks_.resize(p.size());
  for (std::size_t b = 0; b < p.size(); ++b) {
    const auto n = static_cast<Index>(p.block(b).size());
    Local& loc = blocks_[b];
    LocalOp h0(n, n);
    h0.setFromTriplets(t_h0[b].begin(), t_h0[b].end());
    loc.hc.resize(n, n);
    loc.hc.setFromTriplets(t_hc[b].begin(), t_hc[b].end());
    loc.decay.resize(n, n);
    loc.decay.setFromTriplets(t_decay[b].begin(), t_decay[b].end());
    loc.l0 = h0 - loc.decay;
    loc.k = loc.l0 + loc.hc;
    for (auto* m : {&loc.k, &loc.l0, &loc.hc, &loc.decay}) {
      m->prune(Complex{});
      m->makeCompressed();
    }
  }

  for (const auto& f : ops.jumps) {
    std::map<std::size_t, std::pair<std::size_t, std::vector<LocalTriplet>>> by_src;
    for (Index c = 0; c < f.outerSize(); ++c) {
      for (Operator::InnerIterator it(f, c); it; ++it) {
        if (it.value() == Complex{}) continue;
        const auto src = p.block_of(c);
        const auto dst = p.block_of(it.row());
        auto [pos, fresh] = by_src.try_emplace(src, dst, std::vector<LocalTriplet>{});
        if (!fresh && pos->second.first != dst) {
          throw Error(ErrorCode::InvalidArgument, "partition is not closed under the jump operators");
        }
        pos->second.second.emplace_back(p.local_of(it.row()), p.local_of(c), it.value());
      }
    }
    for (auto& [src, entry] : by_src) {
      Jump j;
      j.src = src;
      j.dst = entry.first;
      j.f.resize(static_cast<Index>(p.block(j.dst).size()), static_cast<Index>(p.block(src).size()));
      j.f.setFromTriplets(entry.second.begin(), entry.second.end());
      j.f.makeCompressed();
      j.f_adj = j.f.adjoint();
      j.f_adj.makeCompressed();
      std::vector<int> per_row(static_cast<std::size_t>(j.f.rows()), 0);
      std::vector<int> per_col(static_cast<std::size_t>(j.f.cols()), 0);
      j.monomial = true;
      for (Index row = 0; row < j.f.outerSize(); ++row) {
        for (LocalOp::InnerIterator it(j.f, row); it; ++it) {
          if (++per_row[static_cast<std::size_t>(row)] > 1 || ++per_col[static_cast<std::size_t>(it.col())] > 1) {
            j.monomial = false;
          }
          j.rows.push_back(row);
          j.cols.push_back(it.col());
          j.vals.push_back(it.value());
        }
      }
      jumps_.push_back(std::move(j));
    }
  }
}

double Liouvillian::mean_coupling(const BlockMatrix& rho) const {
  double acc = 0.0;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const auto& hc = blocks_[b].hc;
    const auto& r = rho.block(b);
    for (Index row = 0; row < hc.outerSize(); ++row) {
      for (LocalOp::InnerIterator it(hc, row); it; ++it) acc += (it.value() * r(it.col(), row)).real();
    }
  }
  return acc;
}

void Liouvillian::add_jumps(const BlockMatrix& rho, BlockMatrix& out, double scale) const {
  Eigen::MatrixXcd tmp;
  for (const auto& j : jumps_) {
    const auto& r = rho.block(j.src);
    auto& o = out.block(j.dst);
    if (j.monomial) {
      // (F rho F^dag)(a, b) = f_a conj(f_b) rho(src_a, src_b)
      const std::size_t n = j.rows.size();
      for (std::size_t c = 0; c < n; ++c) {
        const Complex fc = scale * std::conj(j.vals[c]);
        const Complex* rc = r.data() + j.cols[c] * r.rows();
        Complex* oc = o.data() + j.rows[c] * o.rows();
        for (std::size_t a = 0; a < n; ++a) oc[j.rows[a]] += j.vals[a] * fc * rc[j.cols[a]];
      }
      continue;
    }
    tmp.noalias() = j.f * r;
    o.noalias() += scale * (tmp * j.f_adj);
  }
}

void Liouvillian::apply(const BlockMatrix& rho, BlockMatrix& out, std::optional<double> mean_hc) const {
  // For Hermitian rho: out = Y + Y^dag - 2<Hc> rho + sum F rho F^dag with Y = K rho.
  const double m = mean_hc ? *mean_hc : mean_coupling(rho);
  if (out.partition() != partition_) out = BlockMatrix(partition_);
  thread_local Eigen::MatrixXcd y;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const auto& k = blocks_[b].k;
    const auto& r = rho.block(b);
    const Index n = r.rows();
    y.resize(n, n);
    const int* outer = k.outerIndexPtr();
    const int* inner = k.innerIndexPtr();
    const Complex* val = k.valuePtr();
    for (Index c = 0; c < n; ++c) {
      const Complex* rc = r.data() + c * n;
      Complex* yc = y.data() + c * n;
      for (Index row = 0; row < n; ++row) {
        Complex acc{};
        for (int p = outer[row]; p < outer[row + 1]; ++p) acc += val[p] * rc[inner[p]];
        yc[row] = acc;
      }
    }
    auto& o = out.block(b);
    const double m2 = 2.0 * m;
    for (Index c = 0; c < n; ++c) {
      const Complex* rc = r.data() + c * n;
      Complex* oc = o.data() + c * n;
      for (Index row = 0; row < n; ++row) oc[row] = y(row, c) + std::conj(y(c, row)) - m2 * rc[row];
    }
  }
  add_jumps(rho, out, 1.0);
}

void Liouvillian::two_sided(const BlockMatrix& rho, BlockMatrix& out, Part part) const {
  // out = A rho + rho A^dag (+ jumps), valid for any rho.
  out = BlockMatrix(partition_);
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const LocalOp& a = part == Part::Full ? blocks_[b].k : part == Part::L0 ? blocks_[b].l0 : blocks_[b].decay;
    const double sign = part == Part::Dissipator ? -1.0 : 1.0;
    Eigen::MatrixXcd left = a * rho.block(b);
    Eigen::MatrixXcd right = (a * rho.block(b).adjoint()).adjoint();
    out.block(b) = sign * (left + right);
  }
  add_jumps(rho, out, 1.0);
}

BlockMatrix Liouvillian::apply_l0(const BlockMatrix& rho) const {
  BlockMatrix out;
  two_sided(rho.restructured(partition_), out, Part::L0);
  return out;
}

BlockMatrix Liouvillian::apply_dissipator(const BlockMatrix& rho) const {
  BlockMatrix out;
  two_sided(rho.restructured(partition_), out, Part::Dissipator);
  return out;
}

BlockMatrix Liouvillian::apply_lc(const BlockMatrix& rho_in) const {
  const BlockMatrix rho = rho_in.restructured(partition_);
  BlockMatrix out(partition_);
  // Complex mean keeps the formula exact for non-Hermitian arguments.
  Complex m{};
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const auto& hc = blocks_[b].hc;
    const auto& r = rho.block(b);
    for (Index row = 0; row < hc.outerSize(); ++row) {
      for (LocalOp::InnerIterator it(hc, row); it; ++it) m += it.value() * r(it.col(), row);
    }
  }
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const auto& hc = blocks_[b].hc;
    const auto& r = rho.block(b);
    Eigen::MatrixXcd left = hc * r;
    Eigen::MatrixXcd right = (hc * r.adjoint()).adjoint();
    out.block(b) = left + right - 2.0 * m * r;
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

SystemOperators operators_from(const Operator& h0, const Operator& hc, const std::vector<Operator>& jumps) {
  SystemOperators ops;
  ops.h0 = h0;
  ops.hc = hc;
  ops.jumps = jumps;
  return ops;
}

void check_dim(const BlockMatrix& rho, const Operator& op) {
  if (op.rows() != rho.dim() || op.cols() != rho.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "operator does not match state dimension");
  }
}

Liouvillian generator_for(const SystemOperators& ops, const BlockMatrix& rho) {
  return Liouvillian(ops, Liouvillian::invariant_partition(ops, *rho.partition()));
}

}  // namespace

BlockMatrix apply_dissipator(const BlockMatrix& rho, const std::vector<Operator>& jumps) {
  const Index dim = rho.dim();
  for (const auto& f : jumps) check_dim(rho, f);
  const auto ops = operators_from(Operator(dim, dim), Operator(dim, dim), jumps);
  return generator_for(ops, rho).apply_dissipator(rho);
}

BlockMatrix apply_l0(const BlockMatrix& rho, const Operator& h0, const std::vector<Operator>& jumps) {
  check_dim(rho, h0);
  for (const auto& f : jumps) check_dim(rho, f);
  const auto ops = operators_from(h0, Operator(rho.dim(), rho.dim()), jumps);
  return generator_for(ops, rho).apply_l0(rho);
}

BlockMatrix apply_lc(const BlockMatrix& rho, const Operator& hc) {
  check_dim(rho, hc);
  const Operator diff = hc - Operator(hc.adjoint());
  if (diff.norm() > 1e-10) throw Error(ErrorCode::InvalidCoupling, "coupling operator is not Hermitian");
  const Index dim = rho.dim();
  const auto ops = operators_from(Operator(dim, dim), hc, {});
  return generator_for(ops, rho).apply_lc(rho);
}

// ---------------------------------------------------------------------------

namespace {

void post_process(BlockMatrix& rho, bool renormalize) {
  rho.hermitize();
  if (renormalize) {
    const double tr = rho.trace().real();
    if (!(tr > 0.0) || !std::isfinite(tr)) throw Error(ErrorCode::PositivityLoss, "trace is no longer positive");
    rho *= 1.0 / tr;
  }
  double min_diag = 0.0;
  for (std::size_t b = 0; b < rho.num_blocks(); ++b) {
    auto& m = rho.block(b);
    Complex* d = m.data();
    for (Index i = 0; i < m.size(); ++i) {
      if (std::abs(d[i].real()) < kFlushBelow) d[i].real(0.0);
      if (std::abs(d[i].imag()) < kFlushBelow) d[i].imag(0.0);
      if (!std::isfinite(d[i].real()) || !std::isfinite(d[i].imag())) {
        throw Error(ErrorCode::PositivityLoss, "state became non-finite; reduce dt");
      }
    }
    for (Index i = 0; i < m.rows(); ++i) min_diag = std::min(min_diag, m(i, i).real());
  }
  if (min_diag < -kPositivityTolerance) {
    throw Error(ErrorCode::PositivityLoss,
                "negative population " + std::to_string(min_diag) + "; reduce dt or enlarge the truncation");
  }
}

void ensure(BlockMatrix& m, const PartitionPtr& p) {
  if (m.partition() != p) m = BlockMatrix(p);
}

}  // namespace

void rk4_step(const Liouvillian& gen, BlockMatrix& rho, double h, MeanCouplingPolicy policy, bool renormalize,
              RkWorkspace& ws) {
  const auto& p = gen.partition();
  for (auto* m : {&ws.k1, &ws.k2, &ws.k3, &ws.k4, &ws.stage}) ensure(*m, p);
  std::optional<double> frozen;
  if (policy == MeanCouplingPolicy::StepStart) frozen = gen.mean_coupling(rho);

  gen.apply(rho, ws.k1, frozen);
  for (std::size_t b = 0; b < rho.num_blocks(); ++b) ws.stage.block(b) = rho.block(b) + (0.5 * h) * ws.k1.block(b);
  gen.apply(ws.stage, ws.k2, frozen);
  for (std::size_t b = 0; b < rho.num_blocks(); ++b) ws.stage.block(b) = rho.block(b) + (0.5 * h) * ws.k2.block(b);
  gen.apply(ws.stage, ws.k3, frozen);
  for (std::size_t b = 0; b < rho.num_blocks(); ++b) ws.stage.block(b) = rho.block(b) + h * ws.k3.block(b);
  gen.apply(ws.stage, ws.k4, frozen);
  const double w = h / 6.0;
  for (std::size_t b = 0; b < rho.num_blocks(); ++b) {
    rho.block(b) += w * (ws.k1.block(b) + 2.0 * ws.k2.block(b) + 2.0 * ws.k3.block(b) + ws.k4.block(b));
  }
  post_process(rho, renormalize);
}

BlockMatrix step(const BlockMatrix& rho, double dt, const SystemSpec& spec, MeanCouplingPolicy policy) {
  if (!(dt != 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::InvalidArgument, "dt must be non-zero and finite");
  const auto ops = SystemOperators::build(spec);
  if (rho.dim() != spec.dims.total()) throw Error(ErrorCode::DimensionMismatch, "state does not match spec dims");
  const Liouvillian gen(ops, Liouvillian::invariant_partition(ops, *rho.partition()));
  BlockMatrix out = rho.restructured(gen.partition());
  RkWorkspace ws;
  rk4_step(gen, out, dt, policy, true, ws);
  const double lo = out.eigen(false).min_value();
  if (lo < -kPositivityTolerance) {
    throw Error(ErrorCode::PositivityLoss,
                "min eigenvalue " + std::to_string(lo) + " after step; reduce dt or enlarge the truncation");
  }
  return out;
}

// ---------------------------------------------------------------------------

Propagator::Propagator(std::shared_ptr<const Liouvillian> gen, const BlockMatrix& rho0, IntegratorConfig cfg)
    : gen_(std::move(gen)), cfg_(cfg), rho_(rho0.restructured(gen_->partition())) {}

void Propagator::advance() {
  rk4_step(*gen_, rho_, cfg_.dt, cfg_.policy, cfg_.renormalize, ws_);
  ++steps_;
}

BlockMatrix Propagator::trial_step(double h) const {
  BlockMatrix out = rho_;
  rk4_step(*gen_, out, h, cfg_.policy, cfg_.renormalize, ws_);
  return out;
}

TrajectoryRecord integrate(const BlockMatrix& rho0, const SystemSpec& spec, const IntegratorConfig& cfg,
                           const Observer& observer, bool store_states) {
  cfg.validate();
  spec.validate();
  if (rho0.dim() != spec.dims.total()) throw Error(ErrorCode::DimensionMismatch, "state does not match spec dims");
  const auto ops = SystemOperators::build(spec);
  auto gen = std::make_shared<const Liouvillian>(ops, Liouvillian::invariant_partition(ops, *rho0.partition()));
  Propagator prop(gen, rho0, cfg);

  TrajectoryRecord rec;
  const Index n = cfg.total_steps();
  auto sample = [&]() {
    const double t = prop.time();
    const auto eig = prop.state().eigen(true);
    const double lo = eig.min_value();
    if (lo < -kPositivityTolerance) {
      throw IntegrationError(ErrorCode::PositivityLoss,
                             "min eigenvalue " + std::to_string(lo) + "; reduce dt or enlarge the truncation", t);
    }
    rec.times.push_back(t);
    if (store_states) rec.states.push_back(prop.state());
    if (observer) observer(Sample{t, prop.steps(), prop.state(), eig, prop});
  };

  sample();
  for (Index s = 1; s <= n; ++s) {
    try {
      prop.advance();
    } catch (const IntegrationError&) {
      throw;
    } catch (const Error& e) {
      throw IntegrationError(e.code(), e.what(), prop.time() + cfg.dt);
    }
    if (s % cfg.sample_stride == 0 || s == n) sample();
  }
  return rec;
}

double verify_stationary(const BlockMatrix& rho0, const SystemSpec& spec) {
  const auto ops = SystemOperators::build(spec);
  const Liouvillian gen(ops, Liouvillian::invariant_partition(ops, *rho0.partition()));
  return gen.apply_l0(rho0).frobenius_norm() / rho0.frobenius_norm();
}

}  // namespace qsync
