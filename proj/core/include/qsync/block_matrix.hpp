#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace qsync {

using Complex = std::complex<double>;
using Index = Eigen::Index;

/// Sparse complex operator on a (truncated) Hilbert space.
using Operator = Eigen::SparseMatrix<Complex, Eigen::ColMajor>;

/// A partition of basis indices {0..dim-1} into disjoint blocks.
///
/// Indices within a block are sorted ascending; blocks are ordered by their
/// smallest index, so two partitions built from the same groups compare equal.
class BlockPartition {
 public:
  static std::shared_ptr<const BlockPartition> singletons(Index dim);
  static std::shared_ptr<const BlockPartition> whole(Index dim);
  static std::shared_ptr<const BlockPartition> from_groups(Index dim,
                                                           std::vector<std::vector<Index>> groups);

  /// Finest partition that is coarser than both `a` and `b`.
  static std::shared_ptr<const BlockPartition> join(const BlockPartition& a, const BlockPartition& b);

  Index dim() const noexcept { return static_cast<Index>(block_of_.size()); }
  std::size_t size() const noexcept { return blocks_.size(); }
  const std::vector<Index>& block(std::size_t b) const { return blocks_[b]; }
  std::size_t block_of(Index i) const { return block_of_[static_cast<std::size_t>(i)]; }
  Index local_of(Index i) const { return local_of_[static_cast<std::size_t>(i)]; }

  /// True when every block of `this` lies inside a single block of `coarser`.
  bool refines(const BlockPartition& coarser) const;

  /// Number of matrix entries stored by a block-diagonal matrix on this partition.
  std::size_t stored_entries() const;

  bool operator==(const BlockPartition& other) const { return blocks_ == other.blocks_; }

 private:
  explicit BlockPartition(Index dim);
  void index();

  std::vector<std::vector<Index>> blocks_;
  std::vector<std::size_t> block_of_;
  std::vector<Index> local_of_;
};

using PartitionPtr = std::shared_ptr<const BlockPartition>;

/// Union-find over basis indices; collects connectivity and emits a partition.
class PartitionBuilder {
 public:
  explicit PartitionBuilder(Index dim);

  void join(Index a, Index b);
  void join_pattern(const Operator& op);
  void join_pattern(const Eigen::MatrixXcd& m);
  void join_partition(const BlockPartition& p);

  /// Joins blocks until `op * X * op^dagger` maps every block-diagonal X to a
  /// block-diagonal matrix (the images of a block all land in one block).
  void close_under_sandwich(const std::vector<Operator>& ops);

  PartitionPtr build();

 private:
  Index find(Index i);

  std::vector<Index> parent_;
};

class HermitianEigen;

/// Complex matrix that is block-diagonal with respect to a BlockPartition.
///
/// Entries outside the diagonal blocks are structurally zero. A single block
/// covering the whole space is an ordinary dense matrix.
class BlockMatrix {
 public:
  BlockMatrix() = default;
  explicit BlockMatrix(PartitionPtr partition);

  /// Detects the finest block structure of `dense` from its nonzero pattern.
  static BlockMatrix from_dense(const Eigen::MatrixXcd& dense);
  static BlockMatrix from_dense(const Eigen::MatrixXcd& dense, PartitionPtr partition);
  static BlockMatrix diagonal(const Eigen::VectorXcd& diag);

  const PartitionPtr& partition() const noexcept { return partition_; }
  Index dim() const noexcept { return partition_ ? partition_->dim() : 0; }
  std::size_t num_blocks() const noexcept { return blocks_.size(); }
  Eigen::MatrixXcd& block(std::size_t b) { return blocks_[b]; }
  const Eigen::MatrixXcd& block(std::size_t b) const { return blocks_[b]; }

  /// Same matrix expressed on a coarser partition.
  BlockMatrix restructured(PartitionPtr coarser) const;

  Eigen::MatrixXcd to_dense() const;
  Complex operator()(Index row, Index col) const;
  Eigen::VectorXcd diagonal_entries() const;

  Complex trace() const;
  /// tr(op * this), evaluated over the nonzeros of `op`.
  Complex expectation(const Operator& op) const;
  double frobenius_norm() const;
  /// Frobenius norm of (this - this^dagger).
  double anti_hermitian_norm() const;
  bool is_diagonal() const;

  BlockMatrix adjoint() const;
  void hermitize();
  void set_zero();

  BlockMatrix& operator+=(const BlockMatrix& other);
  BlockMatrix& operator-=(const BlockMatrix& other);
  BlockMatrix& operator*=(Complex s);
  BlockMatrix& operator*=(double s);
  /// this += s * other
  void add_scaled(const BlockMatrix& other, Complex s);

  HermitianEigen eigen(bool with_vectors = true) const;

 private:
  PartitionPtr partition_;
  std::vector<Eigen::MatrixXcd> blocks_;
};

BlockMatrix operator+(BlockMatrix a, const BlockMatrix& b);
BlockMatrix operator-(BlockMatrix a, const BlockMatrix& b);
BlockMatrix operator*(BlockMatrix a, Complex s);
BlockMatrix operator*(BlockMatrix a, double s);

/// tr(a * b) for matrices on the same partition.
Complex trace_product(const BlockMatrix& a, const BlockMatrix& b);

/// Per-block eigendecomposition of a Hermitian BlockMatrix.
class HermitianEigen {
 public:
  HermitianEigen(PartitionPtr partition, std::vector<Eigen::VectorXd> values,
                 std::vector<Eigen::MatrixXcd> vectors);

  const PartitionPtr& partition() const noexcept { return partition_; }
  const std::vector<Eigen::VectorXd>& values() const noexcept { return values_; }
  const std::vector<Eigen::MatrixXcd>& vectors() const noexcept { return vectors_; }
  bool has_vectors() const noexcept { return !vectors_.empty(); }

  std::vector<double> all_values() const;
  double min_value() const;
  double max_abs_value() const;

  /// f(M) = sum_i f(lambda_i) |v_i><v_i|, block by block.
  BlockMatrix apply(const std::function<double(double)>& f) const;

 private:
  PartitionPtr partition_;
  std::vector<Eigen::VectorXd> values_;
  std::vector<Eigen::MatrixXcd> vectors_;
};

}  // namespace qsync
