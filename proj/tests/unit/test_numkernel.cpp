#include "clgen/numkernel/ops.hpp"
#include "../support/gradcheck.hpp"
#include "../support/op_cases.hpp"
#include "../support/oracles.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace clgen;
using namespace clgen::nk;
using clgen::testing::analytic_gradient;
using clgen::testing::evaluate;
using clgen::testing::gradient_violation;
using clgen::testing::numeric_gradient;
using clgen::testing::random_tensor;
using clgen::testing::weighted_sum;

namespace {

using clgen::testing::matrix_with_spectrum;

Eigen::MatrixXd random_matrix(Index m, Index n, std::uint64_t seed) { return clgen::testing::gaussian_matrix(m, n, seed); }

// Oracle: singular values as square roots of the eigenvalues of Z^T Z.
Eigen::VectorXd singular_values_by_eigensolve(const Eigen::MatrixXd& z) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(z.transpose() * z);
    Eigen::VectorXd ev = es.eigenvalues().reverse();  // descending
    const Index r = std::min(z.rows(), z.cols());
    Eigen::VectorXd s(r);
    for (Index i = 0; i < r; ++i)
        s(i) = std::sqrt(std::max(0.0, ev(i)));
    return s;
}

} // namespace

TEST(Svd, IdentityHasUnitSingularValues) {
    const auto res = svd(Eigen::MatrixXd::Identity(3, 3));
    ASSERT_EQ(res.S.size(), 3);
    for (Index i = 0; i < 3; ++i)
        EXPECT_NEAR(res.S(i), 1.0, 1e-14);
}

TEST(Svd, DuplicatedRowIsRankOne) {
    Eigen::MatrixXd z(2, 2);
    z << 1, 0, 1, 0;
    const auto res = svd(z);
    EXPECT_NEAR(res.S(0), std::sqrt(2.0), 1e-14);
    EXPECT_NEAR(res.S(1), 0.0, 1e-14);
    EXPECT_LT((res.U.transpose() * res.U - Eigen::MatrixXd::Identity(2, 2)).norm(), 1e-8);
    EXPECT_LT((res.V.transpose() * res.V - Eigen::MatrixXd::Identity(2, 2)).norm(), 1e-8);
}

TEST(Svd, MatchesEigensolveOracleOnWideMatrix) {
    const Eigen::MatrixXd z = random_matrix(4, 8, 7);
    const auto res = svd(z);
    const Eigen::VectorXd oracle = singular_values_by_eigensolve(z);
    ASSERT_EQ(res.S.size(), 4);
    for (Index i = 0; i < 4; ++i)
        EXPECT_NEAR(res.S(i), oracle(i), 1e-8);
}

TEST(Svd, ReconstructsRandomMatrices) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<Index> rows(1, 32), cols(1, 64);
    for (int trial = 0; trial < 100; ++trial) {
        const Index m = rows(rng), n = cols(rng);
        const Eigen::MatrixXd z = random_matrix(m, n, 1000 + trial);
        const auto res = svd(z);
        const Index r = std::min(m, n);
        const Eigen::MatrixXd recon = res.U * res.S.asDiagonal() * res.V.transpose();
        EXPECT_LE((recon - z).norm(), 1e-8 * z.norm()) << m << "x" << n;
        EXPECT_LT((res.U.transpose() * res.U - Eigen::MatrixXd::Identity(r, r)).cwiseAbs().maxCoeff(), 1e-8);
        EXPECT_LT((res.V.transpose() * res.V - Eigen::MatrixXd::Identity(r, r)).cwiseAbs().maxCoeff(), 1e-8);
        for (Index i = 1; i < r; ++i)
            EXPECT_GE(res.S(i - 1), res.S(i));
    }
}

TEST(Svd, RankDeficientKeepsOrthonormalFactors) {
    const Eigen::MatrixXd z = random_matrix(6, 2, 3) * random_matrix(2, 9, 4);
    const auto res = svd(z);
    EXPECT_LT((res.U.transpose() * res.U - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE((res.U * res.S.asDiagonal() * res.V.transpose() - z).norm(), 1e-8 * z.norm());
}

TEST(Svd, FailsLoudlyWhenSweepBudgetIsExhausted) {
    SvdOptions opts;
    opts.max_sweeps = 1;
    EXPECT_THROW(svd(random_matrix(8, 8, 5), opts), NumericalError);
}

TEST(Svd, RejectsNonFiniteInput) {
    Eigen::MatrixXd z = Eigen::MatrixXd::Identity(2, 2);
    z(0, 1) = std::nan("");
    EXPECT_THROW(svd(z), NumericalError);
}

TEST(NuclearNorm, ClosedFormCases) {
    EXPECT_NEAR(nuclear_norm(Eigen::MatrixXd::Identity(2, 2)), 2.0, 1e-14);
    Eigen::MatrixXd z(2, 2);
    z << 1, 0, 1, 0;
    EXPECT_NEAR(nuclear_norm(z), std::sqrt(2.0), 1e-14);
    EXPECT_EQ(nuclear_norm(Eigen::MatrixXd::Zero(3, 4)), 0.0);
}

TEST(NuclearNorm, MatchesEigensolveOracle) {
    const Eigen::MatrixXd z = random_matrix(5, 7, 21);
    EXPECT_NEAR(nuclear_norm(z), singular_values_by_eigensolve(z).sum(), 1e-8);
}

TEST(NuclearNorm, DominatesFrobeniusWhichDominatesSpectralNorm) {
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::MatrixXd z = random_matrix(2 + trial % 5, 3 + trial % 7, 300 + trial);
        const auto s = svd(z).S;
        EXPECT_GE(s.sum() + 1e-12, z.norm());
        EXPECT_GE(z.norm() + 1e-12, s(0));
        EXPECT_GT(s.sum() - z.norm(), 1e-9);  // generic random matrix has rank > 1
    }
    // equality of the first pair exactly when rank <= 1
    const Eigen::MatrixXd rank_one = random_matrix(4, 1, 1) * random_matrix(1, 6, 2);
    EXPECT_NEAR(nuclear_norm(rank_one), rank_one.norm(), 1e-10);
}

TEST(NuclearNormGrad, DiagonalGivesIdentity) {
    Eigen::MatrixXd z(2, 2);
    z << 3, 0, 0, 5;
    EXPECT_LT((nuclear_norm_grad(z) - Eigen::MatrixXd::Identity(2, 2)).norm(), 1e-14);
}

TEST(NuclearNormGrad, ZeroMatrixGivesZeroSubgradient) {
    const Eigen::MatrixXd g = nuclear_norm_grad(Eigen::MatrixXd::Zero(3, 2));
    EXPECT_EQ(g.rows(), 3);
    EXPECT_EQ(g.cols(), 2);
    EXPECT_TRUE(g.isZero(0));
}

TEST(NuclearNormGrad, MatchesFiniteDifferences) {
    Eigen::VectorXd s(4);
    s << 4.0, 2.5, 1.5, 0.5;
    const Eigen::MatrixXd z = matrix_with_spectrum(4, 6, s, 40);
    const Eigen::MatrixXd g = nuclear_norm_grad(z);
    const double h = 1e-5;
    for (Index i = 0; i < z.rows(); ++i)
        for (Index j = 0; j < z.cols(); ++j) {
            Eigen::MatrixXd up = z, down = z;
            up(i, j) += h;
            down(i, j) -= h;
            EXPECT_NEAR(g(i, j), (nuclear_norm(up) - nuclear_norm(down)) / (2 * h), 1e-4);
        }
}

TEST(NuclearNormGrad, MatchesFiniteDifferencesOnRandomSeparatedSpectra) {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<Index> dims(2, 8);
    std::uniform_real_distribution<double> gap(0.01, 1.0);
    const double h = 1e-5;
    for (int trial = 0; trial < 100; ++trial) {
        const Index m = dims(rng), n = dims(rng);
        const Index r = std::min(m, n);
        Eigen::VectorXd s(r);
        double v = 0.2;
        for (Index i = r; i-- > 0;) {
            s(i) = v;
            v += gap(rng);
        }
        const Eigen::MatrixXd z = matrix_with_spectrum(m, n, s, 5000 + trial);
        const Eigen::MatrixXd g = nuclear_norm_grad(z);
        double worst = 0;
        for (Index i = 0; i < m; ++i)
            for (Index j = 0; j < n; ++j) {
                Eigen::MatrixXd up = z, down = z;
                up(i, j) += h;
                down(i, j) -= h;
                worst = std::max(worst, std::abs(g(i, j) - (nuclear_norm(up) - nuclear_norm(down)) / (2 * h)));
            }
        EXPECT_LE(worst, 1e-4) << "trial " << trial;
    }
}

TEST(RowNormalize, UnitRows) {
    const Tensor out = row_l2_normalize(Tensor({1, 2}, {3.0, 4.0}));
    EXPECT_NEAR(out[0], 0.6, 1e-15);
    EXPECT_NEAR(out[1], 0.8, 1e-15);
}

TEST(RowNormalize, FrobeniusNormIsSqrtOfRowCount) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<Index> dims(1, 40);
    for (int trial = 0; trial < 100; ++trial) {
        const Index b = dims(rng), h = dims(rng);
        const Tensor z = row_l2_normalize(random_tensor({b, h}, rng, 3.0));
        EXPECT_NEAR(z.matrix().norm(), std::sqrt(static_cast<double>(b)), 1e-10);
    }
}

TEST(RowNormalize, Idempotent) {
    std::mt19937_64 rng(6);
    const Tensor once = row_l2_normalize(random_tensor({5, 7}, rng));
    const Tensor twice = row_l2_normalize(once);
    EXPECT_LT((once.flat() - twice.flat()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(RowNormalize, ZeroRowIsGuardedAndCounted) {
    NormalizeStats stats;
    const Tensor out = row_l2_normalize(Tensor({2, 2}, {0.0, 0.0, 3.0, 4.0}), &stats);
    EXPECT_EQ(stats.guarded_rows, 1);
    EXPECT_TRUE(out.all_finite());
    EXPECT_EQ(out[0], 0.0);
}

TEST(NumericalRank, ClosedFormCases) {
    EXPECT_EQ(numerical_rank(Eigen::MatrixXd::Identity(4, 4)), 4);
    Eigen::MatrixXd z(2, 2);
    z << 1, 0, 1, 0;
    EXPECT_EQ(numerical_rank(z), 1);
    EXPECT_EQ(numerical_rank(Eigen::MatrixXd::Zero(3, 3)), 0);
    EXPECT_EQ(numerical_rank(random_matrix(6, 3, 8) * random_matrix(3, 8, 9)), 3);
}

TEST(NumericalRank, RejectsToleranceOutsideUnitInterval) {
    EXPECT_THROW(numerical_rank(Eigen::MatrixXd::Identity(2, 2), 0.0), InputError);
    EXPECT_THROW(numerical_rank(Eigen::MatrixXd::Identity(2, 2), 1.0), InputError);
}

TEST(Backward, SumOfSquares) {
    Tape tape;
    Var x = tape.leaf(Tensor({2}, {1.0, 2.0}));
    tape.backward(sum(mul(x, x)));
    const Tensor g = x.grad();
    EXPECT_DOUBLE_EQ(g[0], 2.0);
    EXPECT_DOUBLE_EQ(g[1], 4.0);
}

TEST(Backward, ConstantLossLeavesZeroGradients) {
    Tape tape;
    Var x = tape.leaf(Tensor({3}, {1.0, 2.0, 3.0}));
    Var c = tape.constant(Tensor::scalar(4.0));
    tape.backward(c);
    EXPECT_TRUE(x.grad().matrix().isZero(0));
}

TEST(Backward, RejectsNonScalarLoss) {
    Tape tape;
    Var x = tape.leaf(Tensor({2}, {1.0, 2.0}));
    EXPECT_THROW(tape.backward(mul(x, x)), Error);
}

TEST(Backward, RepeatedCallsAccumulate) {
    Tape tape;
    Var x = tape.leaf(Tensor({2}, {1.0, 2.0}));
    Var loss = sum(mul(x, x));
    tape.backward(loss);
    tape.backward(loss);
    EXPECT_DOUBLE_EQ(x.grad()[1], 8.0);
}

TEST(Backward, ParameterGradientsAccumulateIntoParameter) {
    Parameter p("w", Tensor({2}, {3.0, -1.0}));
    for (int i = 0; i < 2; ++i) {
        Tape tape;
        Var w = tape.parameter(p);
        tape.backward(sum(mul(w, w)));
    }
    EXPECT_DOUBLE_EQ(p.grad()[0], 12.0);
    EXPECT_DOUBLE_EQ(p.grad()[1], -4.0);
}

TEST(Backward, CompositeMatmulSoftmaxMatchesFiniteDifferences) {
    std::mt19937_64 rng(12);
    const Tensor w = random_tensor({4, 5}, rng);
    const Tensor x0 = random_tensor({3, 4}, rng);
    const auto build = weighted_sum(
        [w](Tape& t, const Var& x) { return softmax_rows(matmul(x, t.constant(w))); }, {3, 5}, 13);
    const Tensor a = analytic_gradient(build, x0);
    const Tensor n = numeric_gradient([&](const Tensor& x) { return evaluate(build, x); }, x0);
    EXPECT_LE(gradient_violation(a, n, 1e-4), 0.0);
}

TEST(Backward, NonFiniteResultIsAnError) {
    Tape tape;
    Var x = tape.leaf(Tensor({1}, {1e300}));
    EXPECT_THROW(mul(x, x), NumericalError);
}

TEST(PrimitiveGradients, MatchFiniteDifferences) {
    std::mt19937_64 rng(77);
    for (const auto& c : clgen::testing::primitive_op_cases(77)) {
        const Tensor x0 = random_tensor(c.input, rng);
        const Tensor a = analytic_gradient(c.build, x0);
        const Tensor n = numeric_gradient([&](const Tensor& x) { return evaluate(c.build, x); }, x0);
        EXPECT_LE(gradient_violation(a, n, 1e-4), 0.0) << c.name;
    }
}

TEST(SoftCrossEntropy, AllMaskedIsAnError) {
    Tape tape;
    Var logits = tape.leaf(Tensor({2, 3}));
    const std::vector<SoftTarget> targets(2);
    EXPECT_THROW(soft_cross_entropy(logits, targets, Mask{0, 0}), InputError);
}

TEST(TensorText, RoundTrip) {
    std::mt19937_64 rng(1);
    const Tensor t = random_tensor({2, 3, 2}, rng);
    std::stringstream ss;
    write_text(ss, t);
    EXPECT_EQ(read_text(ss), t);
}
