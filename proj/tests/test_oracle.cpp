#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "rabi/oracle.hpp"

using namespace rabi;

namespace {

const ModelParams base{1.0, 0.7, 0.0};

} // namespace

TEST(Oracle, Level71IsStableInTruncation)
{
    for (int n_fock : {400, 500}) {
        const auto res = solve_oracle(base, {n_fock});
        ASSERT_GT(res.eigenvalues.size(), 80u);
        std::size_t best = 0;
        for (std::size_t i = 0; i < res.eigenvalues.size(); ++i)
            if (std::abs(res.eigenvalues[i] - 70.00462935) < std::abs(res.eigenvalues[best] - 70.00462935))
                best = i;
        EXPECT_NEAR(res.eigenvalues[best], 70.00462935, 1e-8);
        EXPECT_GT(res.parity[best], 0.99);
    }
}

TEST(Oracle, UncoupledLevels)
{
    const auto res = solve_oracle({1e-12, 0.7, 0.0}, {30});
    ASSERT_GE(res.eigenvalues.size(), 10u);
    const std::vector<double> expected{-0.7, 0.3, 0.7, 1.3, 1.7, 2.3, 2.7, 3.3, 3.7, 4.3};
    for (std::size_t i = 0; i < expected.size(); ++i)
        EXPECT_NEAR(res.eigenvalues[i], expected[i], 1e-12);
}

TEST(Oracle, SingleModeTruncationIsTheQubit)
{
    const auto d = eigensolve(build_matrix({1.0, 0.7, 0.3}, 1));
    ASSERT_EQ(d.eigenvalues.size(), 2);
    const double r = std::hypot(0.7, 0.3);
    EXPECT_NEAR(d.eigenvalues(0), -r, 1e-14);
    EXPECT_NEAR(d.eigenvalues(1), r, 1e-14);
}

TEST(Oracle, DecoupledQubitGivesDoublyDegenerateLadder)
{
    const ModelParams p{0.8, 0.0, 0.0};
    const auto res = solve_oracle(p, {120});
    ASSERT_GE(res.eigenvalues.size(), 20u);
    for (int n = 0; n < 10; ++n) {
        EXPECT_NEAR(res.eigenvalues[2 * n], n - p.g * p.g, 1e-10);
        EXPECT_NEAR(res.eigenvalues[2 * n + 1], n - p.g * p.g, 1e-10);
        EXPECT_NEAR(res.parity[2 * n] * res.parity[2 * n + 1], -1.0, 1e-8);
    }
}

TEST(Oracle, EigenpairsAreAccurateAndOrthonormal)
{
    const Matrix h = build_matrix(base, 80);
    const auto d = eigensolve(h);
    const double h_norm = h.norm();
    for (Eigen::Index i = 0; i < d.eigenvalues.size(); ++i) {
        const Eigen::VectorXd v = d.eigenvectors.col(i);
        EXPECT_LT((h * v - d.eigenvalues(i) * v).norm(), 1e-10 * h_norm);
    }
    const Matrix gram = d.eigenvectors.transpose() * d.eigenvectors;
    EXPECT_LT((gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Oracle, LowLevelsDecreaseWithTruncation)
{
    const auto a = eigensolve(build_matrix(base, 30)).eigenvalues;
    const auto b = eigensolve(build_matrix(base, 60)).eigenvalues;
    for (Eigen::Index i = 0; i < 10; ++i)
        EXPECT_LE(b(i), a(i) + 1e-12);
}

TEST(Oracle, ParityIsSharpForSymmetricModel)
{
    const auto res = solve_oracle(base, {120});
    for (std::size_t i = 0; i < res.parity.size(); ++i) {
        EXPECT_NEAR(std::abs(res.parity[i]), 1.0, 1e-10);
        EXPECT_FALSE(res.parity_flagged[i]);
    }
}

TEST(Oracle, SmallBiasIsAContinuousPerturbation)
{
    const auto a = solve_oracle(base, {120});
    const auto b = solve_oracle({1.0, 0.7, 1e-6}, {120});
    ASSERT_EQ(a.eigenvalues.size(), b.eigenvalues.size());
    for (std::size_t i = 0; i < a.eigenvalues.size(); ++i)
        EXPECT_LT(std::abs(a.eigenvalues[i] - b.eigenvalues[i]), 1e-4);
}

TEST(Oracle, OnlyCertifiedLevelsAreExposed)
{
    const auto res = solve_oracle(base, {40});
    EXPECT_GT(res.converged_count, 0);
    EXPECT_LT(res.converged_count, 80);
    EXPECT_EQ(res.eigenvalues.size(), static_cast<std::size_t>(res.converged_count));
}

TEST(Oracle, DegeneracyGap)
{
    EXPECT_LT(std::abs(degeneracy_gap({0.8, 0.0, 0.0}, 2, 80).gap), 1e-10);
    EXPECT_GT(std::abs(degeneracy_gap(base, 2, 80).gap), 1e-3);
    EXPECT_THROW((void)degeneracy_gap(base, 70, 40), level_not_converged);
}

TEST(Oracle, InputsAreValidated)
{
    Matrix h = build_matrix(base, 4);
    h(0, 3) += 1.0;
    EXPECT_THROW((void)eigensolve(h), invalid_params);
    EXPECT_THROW((void)solve_oracle(base, {1}), invalid_params);
    EXPECT_THROW((void)build_matrix(base, 0), invalid_params);
}
