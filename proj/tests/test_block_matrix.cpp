#include <gtest/gtest.h>

#include <qsync/block_matrix.hpp>
#include <qsync/errors.hpp>

#include "support.hpp"

using namespace qsync;

TEST(BlockPartition, FromGroupsRequiresCoverage) {
  EXPECT_THROW(BlockPartition::from_groups(3, {{0, 1}}), Error);
  const auto p = BlockPartition::from_groups(4, {{0, 2}, {1}, {3}});
  EXPECT_EQ(p->size(), 3u);
  EXPECT_EQ(p->block_of(2), p->block_of(0));
  EXPECT_EQ(p->stored_entries(), 6u);
  EXPECT_TRUE(BlockPartition::singletons(4)->refines(*p));
  EXPECT_TRUE(p->refines(*BlockPartition::whole(4)));
  EXPECT_FALSE(BlockPartition::whole(4)->refines(*p));
}

TEST(BlockMatrix, DenseRoundTrip) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(5, 5);
  m(0, 0) = 1.0;
  m(1, 3) = Complex(0.5, 0.25);
  m(3, 1) = Complex(0.5, -0.25);
  m(2, 2) = 2.0;
  m(4, 4) = 3.0;
  const auto b = BlockMatrix::from_dense(m);
  EXPECT_EQ(b.num_blocks(), 4u);
  EXPECT_LT((b.to_dense() - m).norm(), 1e-15);
  EXPECT_NEAR(b.trace().real(), 6.0, 1e-15);
  EXPECT_NEAR(b.frobenius_norm(), m.norm(), 1e-14);
  EXPECT_LT(b.anti_hermitian_norm(), 1e-15);
  EXPECT_EQ(b(1, 3), Complex(0.5, 0.25));
}

TEST(BlockMatrix, EigenMatchesDense) {
  const Eigen::MatrixXcd rho = test::random_density(6, 3);
  const auto b = BlockMatrix::from_dense(rho, BlockPartition::whole(6));
  auto vals = b.eigen(false).all_values();
  std::sort(vals.begin(), vals.end());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(vals[static_cast<std::size_t>(i)], es.eigenvalues()(i), 1e-13);
  const auto logm = b.eigen(true).apply([](double x) { return std::log(x); });
  const Eigen::MatrixXcd ref =
      es.eigenvectors() * es.eigenvalues().array().log().matrix().asDiagonal() * es.eigenvectors().adjoint();
  EXPECT_LT((logm.to_dense() - ref).norm(), 1e-11);
}

TEST(BlockMatrix, TraceProductAndExpectation) {
  const Eigen::MatrixXcd a = test::random_density(4, 1);
  const Eigen::MatrixXcd c = test::random_density(4, 2);
  const auto p = BlockPartition::whole(4);
  const auto ba = BlockMatrix::from_dense(a, p);
  const auto bc = BlockMatrix::from_dense(c, p);
  EXPECT_LT(std::abs(trace_product(ba, bc) - (a * c).trace()), 1e-14);
  const Operator op = Eigen::MatrixXcd(c).sparseView();
  EXPECT_LT(std::abs(ba.expectation(op) - (c * a).trace()), 1e-14);
}

TEST(BlockMatrix, RestructureToCoarser) {
  Eigen::VectorXcd d(3);
  d << 0.2, 0.3, 0.5;
  const auto diag = BlockMatrix::diagonal(d);
  EXPECT_TRUE(diag.is_diagonal());
  const auto whole = diag.restructured(BlockPartition::whole(3));
  EXPECT_EQ(whole.num_blocks(), 1u);
  EXPECT_LT((whole.to_dense() - diag.to_dense()).norm(), 1e-16);
}

TEST(PartitionBuilder, SandwichClosure) {
  // F maps 0 -> 2; a block {0, 1} forces {2, 3} together once F rho F^dag is included.
  PartitionBuilder pb(4);
  pb.join(0, 1);
  std::vector<Eigen::Triplet<Complex>> t{{2, 0, 1.0}, {3, 1, 1.0}};
  Operator f(4, 4);
  f.setFromTriplets(t.begin(), t.end());
  pb.close_under_sandwich({f});
  const auto p = pb.build();
  EXPECT_EQ(p->block_of(2), p->block_of(3));
  EXPECT_NE(p->block_of(0), p->block_of(2));
}
