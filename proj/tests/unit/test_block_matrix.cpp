#include "locbound/block_matrix.hpp"
#include "oracles.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

using namespace locbound;
using locbound::testing::brute_force_schur;

namespace {

Eigen::MatrixXd random_spd(CounterRng& rng, Eigen::Index n)
{
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            a(i, j) = rng.uniform(-1.0, 1.0);
        }
    }
    return a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace

TEST(BlockMatrix, SetBlockMirrorsTranspose)
{
    BlockMatrix m(3);
    Eigen::Matrix2d v;
    v << 1, 2, 3, 4;
    m.set_block(0, 2, v);
    EXPECT_EQ(m.block(0, 2), v);
    EXPECT_EQ(m.block(2, 0), v.transpose());
    m.add_to_block(0, 2, v);
    EXPECT_EQ(m.block(2, 0), 2.0 * v.transpose());
    EXPECT_TRUE(m.dense().isApprox(m.dense().transpose()));
}

TEST(BlockMatrix, ShapeChecks)
{
    EXPECT_THROW(BlockMatrix::from_dense(Eigen::MatrixXd::Zero(3, 3)), std::invalid_argument);
    EXPECT_THROW(BlockMatrix::from_dense(Eigen::MatrixXd::Zero(2, 4)), std::invalid_argument);
    BlockMatrix m(2);
    EXPECT_THROW((void)m.block(2, 0), std::out_of_range);
    EXPECT_THROW(m.set_block(0, 0, Eigen::MatrixXd::Zero(3, 3)), std::invalid_argument);
    EXPECT_THROW(m += BlockMatrix(3), std::invalid_argument);
}

TEST(BlockMatrix, FromDenseSymmetrizes)
{
    Eigen::MatrixXd a(2, 2);
    a << 1, 2, 4, 3;
    const BlockMatrix m = BlockMatrix::from_dense(a);
    EXPECT_DOUBLE_EQ(m.dense()(0, 1), 3.0);
    EXPECT_DOUBLE_EQ(m.info_block(0).a12(), 3.0);
}

TEST(BlockMatrix, WithoutAndGrown)
{
    auto rng = CounterRng::stream(21, 1);
    const BlockMatrix m = BlockMatrix::from_dense(random_spd(rng, 6));
    const BlockMatrix dropped = m.without_block(1);
    ASSERT_EQ(dropped.n_blocks(), 2u);
    EXPECT_EQ(dropped.block(0, 1), m.block(0, 2));
    EXPECT_EQ(dropped.block(1, 1), m.block(2, 2));
    const BlockMatrix g = m.grown(2);
    EXPECT_EQ(g.n_blocks(), 5u);
    EXPECT_EQ(g.block(2, 1), m.block(2, 1));
    EXPECT_TRUE(g.block(4, 4).isZero());
}

TEST(Schur, MatchesExplicitInverse)
{
    auto rng = CounterRng::stream(22, 1);
    for (int t = 0; t < 100; ++t) {
        const Eigen::Index blocks = 2 + static_cast<Eigen::Index>(rng.uniform() * 6);
        const Eigen::MatrixXd a = random_spd(rng, 2 * blocks);
        const Eigen::MatrixXd expected = brute_force_schur(a, 2);
        const BlockMatrix got = schur_reduce(BlockMatrix::from_dense(a), {0});
        EXPECT_LT((got.dense() - expected).cwiseAbs().maxCoeff(), 1e-10 * expected.cwiseAbs().maxCoeff());
        const Eigen::MatrixXd dense = schur_complement(a, 2);
        EXPECT_LT((dense - expected).cwiseAbs().maxCoeff(), 1e-10 * expected.cwiseAbs().maxCoeff());
    }
}

TEST(Schur, KeepOrderIsRespected)
{
    auto rng = CounterRng::stream(23, 1);
    const Eigen::MatrixXd a = random_spd(rng, 8);
    // Permute blocks 2 and 0 to the front, then reduce by brute force.
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(8, 8);
    const int order[4] = {2, 0, 1, 3};
    for (int i = 0; i < 4; ++i) {
        p.block(2 * i, 2 * order[i], 2, 2) = Eigen::Matrix2d::Identity();
    }
    const Eigen::MatrixXd expected = brute_force_schur(p * a * p.transpose(), 4);
    const BlockMatrix got = schur_reduce(BlockMatrix::from_dense(a), {2, 0});
    EXPECT_LT((got.dense() - expected).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Schur, KeepAllIsIdentityAndRejectsBadIndices)
{
    auto rng = CounterRng::stream(24, 1);
    const BlockMatrix m = BlockMatrix::from_dense(random_spd(rng, 6));
    EXPECT_LT(schur_reduce(m, {0, 1, 2}).max_abs_diff(m), 1e-15);
    EXPECT_THROW(schur_reduce(m, {0, 0}), std::invalid_argument);
    EXPECT_THROW(schur_reduce(m, {3}), std::out_of_range);
}

TEST(Schur, SingularComplementNamesBlock)
{
    // Block 2 is decoupled and zero: eliminating it is impossible.
    BlockMatrix m(3);
    m.set_block(0, 0, Eigen::Matrix2d::Identity() * 2.0);
    m.set_block(1, 1, Eigen::Matrix2d::Identity());
    m.set_block(0, 1, -0.5 * Eigen::Matrix2d::Identity());
    try {
        (void)schur_reduce(m, {0});
        FAIL() << "expected SingularComplementError";
    } catch (const SingularComplementError& e) {
        EXPECT_EQ(e.block(), 2u);
    }
    const BlockMatrix r = schur_reduce(m, {0}, ReductionPolicy::pseudo_inverse);
    EXPECT_NEAR(r.dense()(0, 0), 2.0 - 0.25, 1e-12);
}

TEST(Schur, PseudoInverseMatchesPrunedReduction)
{
    // A rank-deficient eliminated block that does not couple along its null
    // direction gives the same result as dropping that direction.
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4, 4);
    a.topLeftCorner(2, 2) << 3, 0.5, 0.5, 2;
    a(2, 2) = 1.0;
    a(0, 2) = a(2, 0) = 0.4;
    a(1, 2) = a(2, 1) = -0.3;
    const Eigen::MatrixXd r = schur_complement(a, 2, ReductionPolicy::pseudo_inverse);
    Eigen::Matrix3d pruned = a.topLeftCorner(3, 3);
    EXPECT_LT((r - brute_force_schur(pruned, 2)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_THROW((void)schur_complement(a, 2), SingularComplementError);
}
