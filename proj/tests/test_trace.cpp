#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "l1af/oracle.hpp"
#include "l1af/trace.hpp"

namespace l1af {
namespace {

TEST(Trace, RejectsShortInput) {
    EXPECT_THROW(Trace({1.0, 2.0}), DataError);
    EXPECT_NO_THROW(Trace({1.0, 2.0, 3.0}));
}

TEST(Trace, RejectsNonFiniteSamples) {
    EXPECT_THROW(Trace({1.0, std::nan(""), 3.0}), DataError);
    EXPECT_THROW(Trace({1.0, std::numeric_limits<double>::infinity(), 3.0}), DataError);
}

TEST(Trace, RejectsBadSpacing) {
    EXPECT_THROW(Trace({1.0, 2.0, 3.0}, 0.0), DataError);
    EXPECT_THROW(Trace({1.0, 2.0, 3.0}, -1.0), DataError);
    EXPECT_THROW(Trace({1.0, 2.0, 3.0}, std::nan("")), DataError);
    Trace t({1.0, 2.0, 3.0}, 2.5, "x");
    EXPECT_EQ(t.bin_spacing(), 2.5);
    EXPECT_EQ(t.label(), "x");
}

TEST(Standardize, FourSampleStepColumn) {
    const auto d = standardize(Trace({0.0, 1.0, 2.0, 3.0}));
    EXPECT_DOUBLE_EQ(d.mu[2], 0.5);
    EXPECT_DOUBLE_EQ(d.sigma[2], 0.5);
    EXPECT_DOUBLE_EQ(d.u[2], -1.0);
    EXPECT_DOUBLE_EQ(d.l[2], 1.0);
}

TEST(Standardize, FourSampleSlopeColumn) {
    const auto d = standardize_columns(4);
    EXPECT_DOUBLE_EQ(d.mu[0], 2.5);
    EXPECT_NEAR(d.sigma[0], std::sqrt(1.25), 1e-15);
    EXPECT_TRUE(d.y_centered.empty());
}

TEST(Standardize, StepVarianceIsBernoulli) {
    for (std::size_t n : {3u, 7u, 64u, 501u}) {
        const auto d = standardize_columns(n);
        for (std::size_t i = 1; i < n; ++i) {
            const double p = static_cast<double>(n - i) / static_cast<double>(n);
            EXPECT_NEAR(d.sigma[i] * d.sigma[i], p * (1.0 - p), 1e-15) << n << ' ' << i;
        }
    }
}

TEST(Standardize, ZeroSumAndUnitVariance) {
    for (std::size_t n : {3u, 10u, 137u, 1000u}) {
        const auto d = standardize_columns(n);
        const double nd = static_cast<double>(n);
        for (std::size_t i = 1; i < n; ++i) {
            const double a = static_cast<double>(i);
            EXPECT_NEAR(a * d.u[i] + (nd - a) * d.l[i], 0.0, 1e-12) << n << ' ' << i;
            EXPECT_NEAR(a * d.u[i] * d.u[i] + (nd - a) * d.l[i] * d.l[i], nd, 1e-9);
            EXPECT_GT(d.sigma[i], 0.0);
        }
    }
}

TEST(Standardize, CentersObservations) {
    const auto d = standardize(Trace({3.0, 5.0, 1.0, 7.0}));
    EXPECT_DOUBLE_EQ(d.y_mean, 4.0);
    double sum = 0.0;
    for (double v : d.y_centered) sum += v;
    EXPECT_NEAR(sum, 0.0, 1e-15);
}

TEST(Reconstruct, EmptyModelReturnsMean) {
    const auto d = standardize(Trace({3.0, 5.0, 1.0, 7.0}));
    const auto r = reconstruct_signal(d, {}, d.y_mean);
    ASSERT_EQ(r.fitted.size(), 4u);
    for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_DOUBLE_EQ(r.fitted[k], 4.0);
        EXPECT_DOUBLE_EQ(r.level[k], 4.0);
    }
}

TEST(Reconstruct, SingleStepJump) {
    const auto d = standardize_columns(4);
    const double c = 0.75;
    const auto r = reconstruct_signal(d, {{2, c}}, 0.0);
    EXPECT_NEAR(r.fitted[2] - r.fitted[1], 2.0 * c, 1e-15);
    EXPECT_NEAR(r.fitted[1] - r.fitted[0], 0.0, 1e-15);
    EXPECT_NEAR(r.fitted[3] - r.fitted[2], 0.0, 1e-15);
}

TEST(Reconstruct, SlopeIsStrictlyMonotone) {
    const auto d = standardize_columns(20);
    for (double s : {-0.3, 0.4}) {
        const auto r = reconstruct_signal(d, {{0, s}}, 1.0);
        for (std::size_t k = 1; k < 20; ++k) {
            EXPECT_EQ(r.fitted[k] > r.fitted[k - 1], s > 0);
            EXPECT_NE(r.fitted[k], r.fitted[k - 1]);
            EXPECT_DOUBLE_EQ(r.level[k], 1.0);
        }
    }
    const auto flat = reconstruct_signal(d, {{0, 0.0}}, 1.0);
    for (std::size_t k = 1; k < 20; ++k) EXPECT_EQ(flat.fitted[k], flat.fitted[0]);
}

TEST(Reconstruct, MatchesExplicitMatrix) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> gauss;
    for (std::size_t n : {3u, 12u, 97u, 200u}) {
        const auto d = standardize_columns(n);
        const auto dense = oracle::materialize(n);
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        for (int rep = 0; rep < 5; ++rep) {
            SparseCoefs beta;
            for (int q = 0; q < 6; ++q) beta[pick(rng)] = gauss(rng);
            const auto r = reconstruct_signal(d, beta, 0.5);
            const Eigen::VectorXd expect =
                (dense.matrix * testing::to_dense(beta, n)).array() + 0.5;
            const double slope = beta.count(0) ? beta.at(0) : 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                EXPECT_NEAR(r.fitted[k], expect[static_cast<Eigen::Index>(k)], 1e-10);
                EXPECT_NEAR(r.level[k], r.fitted[k] - slope * d.slope_at(k), 1e-10);
            }
        }
    }
}

TEST(Reconstruct, RejectsOutOfRangeIndex) {
    const auto d = standardize_columns(5);
    EXPECT_THROW(reconstruct_signal(d, {{5, 1.0}}, 0.0), std::out_of_range);
}

TEST(Reconstruct, ResidualSumOfSquaresMatchesDense) {
    std::mt19937_64 rng(11);
    const auto y = testing::random_signal(rng, 40, 3, 0.1);
    const Trace t(y);
    const auto d = standardize(t);
    const auto dense = oracle::materialize(t);
    const SparseCoefs beta{{0, -0.2}, {10, 0.3}, {31, -0.1}};
    const double expect =
        (dense.y_centered - dense.matrix * testing::to_dense(beta, 40)).squaredNorm();
    EXPECT_NEAR(residual_sum_squares(d, beta), expect, 1e-10);
}

}  // namespace
}  // namespace l1af
