#include "qsync/block_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include <Eigen/Eigenvalues>

#include "qsync/errors.hpp"

namespace qsync {

// ---------------------------------------------------------------------------
// BlockPartition

BlockPartition::BlockPartition(Index dim)
    : block_of_(static_cast<std::size_t>(dim)), local_of_(static_cast<std::size_t>(dim)) {}

void BlockPartition::index() {
  for (auto& b : blocks_) std::sort(b.begin(), b.end());
  std::sort(blocks_.begin(), blocks_.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    for (std::size_t l = 0; l < blocks_[b].size(); ++l) {
      const auto i = static_cast<std::size_t>(blocks_[b][l]);
      block_of_[i] = b;
      local_of_[i] = static_cast<Index>(l);
    }
  }
}

PartitionPtr BlockPartition::singletons(Index dim) {
  std::vector<std::vector<Index>> groups(static_cast<std::size_t>(dim));
  for (Index i = 0; i < dim; ++i) groups[static_cast<std::size_t>(i)] = {i};
  return from_groups(dim, std::move(groups));
}

PartitionPtr BlockPartition::whole(Index dim) {
  std::vector<Index> all(static_cast<std::size_t>(dim));
  std::iota(all.begin(), all.end(), Index{0});
  return from_groups(dim, {std::move(all)});
}

PartitionPtr BlockPartition::from_groups(Index dim, std::vector<std::vector<Index>> groups) {
  std::shared_ptr<BlockPartition> p(new BlockPartition(dim));
  std::vector<char> seen(static_cast<std::size_t>(dim), 0);
  for (auto& g : groups) {
    if (g.empty()) continue;
    for (Index i : g) {
      if (i < 0 || i >= dim || seen[static_cast<std::size_t>(i)]) {
        throw Error(ErrorCode::InvalidArgument, "partition groups must cover each index exactly once");
      }
      seen[static_cast<std::size_t>(i)] = 1;
    }
    p->blocks_.push_back(std::move(g));
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw Error(ErrorCode::InvalidArgument, "partition groups must cover each index exactly once");
  }
  p->index();
  return p;
}

PartitionPtr BlockPartition::join(const BlockPartition& a, const BlockPartition& b) {
  if (a.dim() != b.dim()) throw Error(ErrorCode::DimensionMismatch, "cannot join partitions of different dimension");
  PartitionBuilder builder(a.dim());
  builder.join_partition(a);
  builder.join_partition(b);
  return builder.build();
}

bool BlockPartition::refines(const BlockPartition& coarser) const {
  if (dim() != coarser.dim()) return false;
  for (const auto& blk : blocks_) {
    const auto target = coarser.block_of(blk.front());
    for (Index i : blk) {
      if (coarser.block_of(i) != target) return false;
    }
  }
  return true;
}

std::size_t BlockPartition::stored_entries() const {
  std::size_t n = 0;
  for (const auto& b : blocks_) n += b.size() * b.size();
  return n;
}

// ---------------------------------------------------------------------------
// PartitionBuilder

PartitionBuilder::PartitionBuilder(Index dim) : parent_(static_cast<std::size_t>(dim)) {
  std::iota(parent_.begin(), parent_.end(), Index{0});
}

Index PartitionBuilder::find(Index i) {
  auto u = static_cast<std::size_t>(i);
  while (parent_[u] != static_cast<Index>(u)) {
    parent_[u] = parent_[static_cast<std::size_t>(parent_[u])];
    u = static_cast<std::size_t>(parent_[u]);
  }
  return static_cast<Index>(u);
}

void PartitionBuilder::join(Index a, Index b) {
  const Index ra = find(a);
  const Index rb = find(b);
  if (ra == rb) return;
  if (ra < rb) {
    parent_[static_cast<std::size_t>(rb)] = ra;
  } else {
    parent_[static_cast<std::size_t>(ra)] = rb;
  }
}

void PartitionBuilder::join_pattern(const Operator& op) {
  if (op.rows() != static_cast<Index>(parent_.size()) || op.cols() != op.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "operator does not match partition dimension");
  }
  for (Index c = 0; c < op.outerSize(); ++c) {
    for (Operator::InnerIterator it(op, c); it; ++it) {
      if (it.value() != Complex{}) join(it.row(), it.col());
    }
  }
}

void PartitionBuilder::join_pattern(const Eigen::MatrixXcd& m) {
  if (m.rows() != static_cast<Index>(parent_.size()) || m.cols() != m.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "matrix does not match partition dimension");
  }
  for (Index c = 0; c < m.cols(); ++c) {
    for (Index r = 0; r < m.rows(); ++r) {
      if (m(r, c) != Complex{}) join(r, c);
    }
  }
}

void PartitionBuilder::join_partition(const BlockPartition& p) {
  for (std::size_t b = 0; b < p.size(); ++b) {
    const auto& blk = p.block(b);
    for (Index i : blk) join(blk.front(), i);
  }
}

void PartitionBuilder::close_under_sandwich(const std::vector<Operator>& ops) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& op : ops) {
      // For every current block, the rows reached from its columns must share a block.
      std::vector<Index> first_image(parent_.size(), -1);
      for (Index c = 0; c < op.outerSize(); ++c) {
        const Index root = find(c);
        for (Operator::InnerIterator it(op, c); it; ++it) {
          if (it.value() == Complex{}) continue;
          auto& anchor = first_image[static_cast<std::size_t>(root)];
          if (anchor < 0) {
            anchor = it.row();
          } else if (find(anchor) != find(it.row())) {
            join(anchor, it.row());
            changed = true;
          }
        }
      }
    }
  }
}

PartitionPtr PartitionBuilder::build() {
  const auto dim = static_cast<Index>(parent_.size());
  std::vector<std::vector<Index>> groups(parent_.size());
  for (Index i = 0; i < dim; ++i) groups[static_cast<std::size_t>(find(i))].push_back(i);
  return BlockPartition::from_groups(dim, std::move(groups));
}

// ---------------------------------------------------------------------------
// BlockMatrix

BlockMatrix::BlockMatrix(PartitionPtr partition) : partition_(std::move(partition)) {
  blocks_.reserve(partition_->size());
  for (std::size_t b = 0; b < partition_->size(); ++b) {
    const auto n = static_cast<Index>(partition_->block(b).size());
    blocks_.emplace_back(Eigen::MatrixXcd::Zero(n, n));
  }
}

BlockMatrix BlockMatrix::from_dense(const Eigen::MatrixXcd& dense) {
  PartitionBuilder builder(dense.rows());
  builder.join_pattern(dense);
  return from_dense(dense, builder.build());
}

BlockMatrix BlockMatrix::from_dense(const Eigen::MatrixXcd& dense, PartitionPtr partition) {
  if (dense.rows() != partition->dim() || dense.cols() != dense.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "dense matrix does not match partition");
  }
  BlockMatrix out(std::move(partition));
  const auto& p = *out.partition_;
  for (std::size_t b = 0; b < p.size(); ++b) {
    const auto& idx = p.block(b);
    auto& blk = out.blocks_[b];
    for (std::size_t c = 0; c < idx.size(); ++c) {
      for (std::size_t r = 0; r < idx.size(); ++r) {
        blk(static_cast<Index>(r), static_cast<Index>(c)) = dense(idx[r], idx[c]);
      }
    }
  }
  return out;
}

BlockMatrix BlockMatrix::diagonal(const Eigen::VectorXcd& diag) {
  BlockMatrix out(BlockPartition::singletons(diag.size()));
  for (Index i = 0; i < diag.size(); ++i) out.blocks_[static_cast<std::size_t>(i)](0, 0) = diag(i);
  return out;
}

BlockMatrix BlockMatrix::restructured(PartitionPtr coarser) const {
  if (coarser == partition_ || *coarser == *partition_) {
    BlockMatrix same = *this;
    same.partition_ = std::move(coarser);
    return same;
  }
  if (!partition_->refines(*coarser)) {
    throw Error(ErrorCode::InvalidArgument, "target partition is not coarser than the current one");
  }
  BlockMatrix out(std::move(coarser));
  const auto& fine = *partition_;
  const auto& coarse = *out.partition_;
  for (std::size_t b = 0; b < fine.size(); ++b) {
    const auto& idx = fine.block(b);
    auto& dst = out.blocks_[coarse.block_of(idx.front())];
    for (std::size_t c = 0; c < idx.size(); ++c) {
      const Index lc = coarse.local_of(idx[c]);
      for (std::size_t r = 0; r < idx.size(); ++r) {
        dst(coarse.local_of(idx[r]), lc) = blocks_[b](static_cast<Index>(r), static_cast<Index>(c));
      }
    }
  }
  return out;
}

Eigen::MatrixXcd BlockMatrix::to_dense() const {
  Eigen::MatrixXcd dense = Eigen::MatrixXcd::Zero(dim(), dim());
  const auto& p = *partition_;
  for (std::size_t b = 0; b < p.size(); ++b) {
    const auto& idx = p.block(b);
    for (std::size_t c = 0; c < idx.size(); ++c) {
      for (std::size_t r = 0; r < idx.size(); ++r) {
        dense(idx[r], idx[c]) = blocks_[b](static_cast<Index>(r), static_cast<Index>(c));
      }
    }
  }
  return dense;
}

Complex BlockMatrix::operator()(Index row, Index col) const {
  const auto& p = *partition_;
  const auto b = p.block_of(row);
  if (p.block_of(col) != b) return {};
  return blocks_[b](p.local_of(row), p.local_of(col));
}

Eigen::VectorXcd BlockMatrix::diagonal_entries() const {
  Eigen::VectorXcd d(dim());
  const auto& p = *partition_;
  for (std::size_t b = 0; b < p.size(); ++b) {
    const auto& idx = p.block(b);
    for (std::size_t l = 0; l < idx.size(); ++l) d(idx[l]) = blocks_[b](static_cast<Index>(l), static_cast<Index>(l));
  }
  return d;
}

Complex BlockMatrix::trace() const {
  Complex t{};
  for (const auto& b : blocks_) t += b.trace();
  return t;
}

Complex BlockMatrix::expectation(const Operator& op) const {
  if (op.rows() != dim() || op.cols() != dim()) {
    throw Error(ErrorCode::DimensionMismatch, "operator does not match matrix dimension");
  }
  const auto& p = *partition_;
  Complex acc{};
  for (Index c = 0; c < op.outerSize(); ++c) {
    const auto bc = p.block_of(c);
    const Index lc = p.local_of(c);
    for (Operator::InnerIterator it(op, c); it; ++it) {
      // tr(op M) = sum_{r,c} op(r,c) M(c,r)
      if (p.block_of(it.row()) != bc) continue;
      acc += it.value() * blocks_[bc](lc, p.local_of(it.row()));
    }
  }
  return acc;
}

double BlockMatrix::frobenius_norm() const {
  double s = 0.0;
  for (const auto& b : blocks_) s += b.squaredNorm();
  return std::sqrt(s);
}

double BlockMatrix::anti_hermitian_norm() const {
  double s = 0.0;
  for (const auto& b : blocks_) s += (b - b.adjoint()).squaredNorm();
  return std::sqrt(s);
}

bool BlockMatrix::is_diagonal() const {
  for (const auto& b : blocks_) {
    for (Index c = 0; c < b.cols(); ++c) {
      for (Index r = 0; r < b.rows(); ++r) {
        if (r != c && b(r, c) != Complex{}) return false;
      }
    }
  }
  return true;
}

BlockMatrix BlockMatrix::adjoint() const {
  BlockMatrix out = *this;
  for (auto& b : out.blocks_) b.adjointInPlace();
  return out;
}

void BlockMatrix::hermitize() {
  for (auto& b : blocks_) {
    const Index n = b.rows();
    for (Index c = 0; c < n; ++c) {
      b(c, c) = Complex(b(c, c).real(), 0.0);
      for (Index r = c + 1; r < n; ++r) {
        const Complex avg = 0.5 * (b(r, c) + std::conj(b(c, r)));
        b(r, c) = avg;
        b(c, r) = std::conj(avg);
      }
    }
  }
}

void BlockMatrix::set_zero() {
  for (auto& b : blocks_) b.setZero();
}

namespace {
void require_same_partition(const BlockMatrix& a, const BlockMatrix& b) {
  if (a.partition() != b.partition() && !(*a.partition() == *b.partition())) {
    throw Error(ErrorCode::DimensionMismatch, "block matrices live on different partitions");
  }
}
}  // namespace

BlockMatrix& BlockMatrix::operator+=(const BlockMatrix& other) {
  require_same_partition(*this, other);
  for (std::size_t b = 0; b < blocks_.size(); ++b) blocks_[b] += other.blocks_[b];
  return *this;
}

BlockMatrix& BlockMatrix::operator-=(const BlockMatrix& other) {
  require_same_partition(*this, other);
  for (std::size_t b = 0; b < blocks_.size(); ++b) blocks_[b] -= other.blocks_[b];
  return *this;
}

BlockMatrix& BlockMatrix::operator*=(Complex s) {
  for (auto& b : blocks_) b *= s;
  return *this;
}

BlockMatrix& BlockMatrix::operator*=(double s) {
  for (auto& b : blocks_) b *= s;
  return *this;
}

void BlockMatrix::add_scaled(const BlockMatrix& other, Complex s) {
  require_same_partition(*this, other);
  for (std::size_t b = 0; b < blocks_.size(); ++b) blocks_[b] += s * other.blocks_[b];
}

BlockMatrix operator+(BlockMatrix a, const BlockMatrix& b) { return a += b; }
BlockMatrix operator-(BlockMatrix a, const BlockMatrix& b) { return a -= b; }
BlockMatrix operator*(BlockMatrix a, Complex s) { return a *= s; }
BlockMatrix operator*(BlockMatrix a, double s) { return a *= s; }

Complex trace_product(const BlockMatrix& a, const BlockMatrix& b) {
  require_same_partition(a, b);
  Complex acc{};
  for (std::size_t k = 0; k < a.num_blocks(); ++k) {
    // tr(A B) = sum_ij A_ij B_ji
    acc += (a.block(k).array() * b.block(k).transpose().array()).sum();
  }
  return acc;
}

HermitianEigen BlockMatrix::eigen(bool with_vectors) const {
  std::vector<Eigen::VectorXd> values;
  std::vector<Eigen::MatrixXcd> vectors;
  values.reserve(blocks_.size());
  if (with_vectors) vectors.reserve(blocks_.size());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver;
  for (const auto& b : blocks_) {
    const Index n = b.rows();
    bool diag = true;
    for (Index c = 0; c < n && diag; ++c) {
      for (Index r = 0; r < n; ++r) {
        if (r != c && b(r, c) != Complex{}) {
          diag = false;
          break;
        }
      }
    }
    if (diag) {
      // Exact spectrum; no solver round-off.
      values.emplace_back(b.diagonal().real());
      if (with_vectors) vectors.emplace_back(Eigen::MatrixXcd::Identity(n, n));
      continue;
    }
    solver.compute(b, with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
      throw Error(ErrorCode::InvalidState, "Hermitian eigensolver did not converge");
    }
    values.emplace_back(solver.eigenvalues());
    if (with_vectors) vectors.emplace_back(solver.eigenvectors());
  }
  return HermitianEigen(partition_, std::move(values), std::move(vectors));
}

// ---------------------------------------------------------------------------
// HermitianEigen

HermitianEigen::HermitianEigen(PartitionPtr partition, std::vector<Eigen::VectorXd> values,
                               std::vector<Eigen::MatrixXcd> vectors)
    : partition_(std::move(partition)), values_(std::move(values)), vectors_(std::move(vectors)) {}

std::vector<double> HermitianEigen::all_values() const {
  std::vector<double> out;
  for (const auto& v : values_) out.insert(out.end(), v.data(), v.data() + v.size());
  std::sort(out.begin(), out.end());
  return out;
}

double HermitianEigen::min_value() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& v : values_) {
    if (v.size() > 0) m = std::min(m, v.minCoeff());
  }
  return m;
}

double HermitianEigen::max_abs_value() const {
  double m = 0.0;
  for (const auto& v : values_) {
    if (v.size() > 0) m = std::max(m, v.cwiseAbs().maxCoeff());
  }
  return m;
}

BlockMatrix HermitianEigen::apply(const std::function<double(double)>& f) const {
  if (!has_vectors()) throw Error(ErrorCode::InvalidArgument, "eigendecomposition was computed without vectors");
  BlockMatrix out(partition_);
  for (std::size_t b = 0; b < values_.size(); ++b) {
    const auto& v = vectors_[b];
    Eigen::VectorXd fv = values_[b].unaryExpr(f);
    out.block(b).noalias() = v * fv.asDiagonal() * v.adjoint();
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidDimension: return "invalid-dimension";
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::UnsupportedTopology: return "unsupported-topology";
    case ErrorCode::InvalidRate: return "invalid-rate";
    case ErrorCode::TruncationInsufficient: return "truncation-insufficient";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::InvalidCoupling: return "invalid-coupling";
    case ErrorCode::PositivityLoss: return "positivity-loss";
    case ErrorCode::UndefinedMeasure: return "undefined-measure";
    case ErrorCode::InvalidState: return "invalid-state";
    case ErrorCode::NoSolution: return "no-solution";
    case ErrorCode::UnphysicalState: return "unphysical-state";
    case ErrorCode::DegenerateDistribution: return "degenerate-distribution";
    case ErrorCode::BlowUp: return "blow-up";
    case ErrorCode::Config: return "config";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

}  // namespace qsync
