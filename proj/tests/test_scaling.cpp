#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "permest/exact.hpp"
#include "permest/scaling.hpp"

using namespace permest;

namespace {

DenseMatrix random_positive(std::size_t n, std::mt19937_64& gen, double lo = 0.1, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    DenseMatrix a(n, n);
    for (double& x : a.data()) x = u(gen);
    return a;
}

double max_line_deviation(const DenseMatrix& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < b.rows(); ++i) {
        double r = 0.0, c = 0.0;
        for (std::size_t j = 0; j < b.cols(); ++j) {
            r += b(i, j);
            c += b(j, i);
        }
        worst = std::max({worst, std::abs(r - 1.0), std::abs(c - 1.0)});
    }
    return worst;
}

} // namespace

TEST(Sinkhorn, DoublyStochasticIsFixedPoint) {
    const auto a = DenseMatrix::from_rows({{0.5, 0.25, 0.25}, {0.25, 0.5, 0.25}, {0.25, 0.25, 0.5}});
    const auto r = sinkhorn_scale(a);
    EXPECT_LE(r.iterations, 1u);
    for (double d : r.d1) EXPECT_NEAR(d, 1.0, 1e-15);
    for (double d : r.d2) EXPECT_NEAR(d, 1.0, 1e-15);
    EXPECT_NEAR(transfer_log_per(r), 0.0, 1e-14);
}

TEST(Sinkhorn, Diagonal) {
    const auto r = sinkhorn_scale(DenseMatrix::from_rows({{2, 0}, {0, 5}}));
    EXPECT_EQ(r.iterations, 1u);
    EXPECT_NEAR(r.b(0, 0), 1.0, 1e-15);
    EXPECT_NEAR(r.b(1, 1), 1.0, 1e-15);
    EXPECT_EQ(r.b(0, 1), 0.0);
    EXPECT_NEAR(r.d1[0] * r.d2[0], 0.5, 1e-15);
    EXPECT_NEAR(r.d1[1] * r.d2[1], 0.2, 1e-15);
    EXPECT_NEAR(transfer_log_per(r), std::log(10.0), 1e-14);
}

TEST(Sinkhorn, RandomPositiveConverges) {
    std::mt19937_64 gen(1);
    for (int t = 0; t < 20; ++t) {
        const auto r = sinkhorn_scale(random_positive(10, gen));
        EXPECT_LE(r.iterations, 200u);
        EXPECT_LE(max_line_deviation(r.b), 1e-6);
        EXPECT_LE(std::max(r.row_deviation, r.col_deviation), 1e-6);
        EXPECT_TRUE(r.approximately_doubly_stochastic());
    }
}

TEST(Sinkhorn, OutputIsDiagonalScalingOfInput) {
    std::mt19937_64 gen(2);
    const auto a = random_positive(7, gen, 0.0, 5.0);
    const auto r = sinkhorn_scale(a);
    for (std::size_t i = 0; i < 7; ++i)
        for (std::size_t j = 0; j < 7; ++j) {
            const double expect = r.d1[i] * a(i, j) * r.d2[j];
            EXPECT_LE(std::abs(r.b(i, j) - expect), 1e-12 * std::abs(expect));
        }
}

TEST(Sinkhorn, Errors) {
    EXPECT_THROW(sinkhorn_scale(DenseMatrix::from_rows({{1, 0}, {0, 0}})), StructuralError);
    EXPECT_THROW(sinkhorn_scale(DenseMatrix::from_rows({{1, 1}, {0, 0}})), StructuralError);
    EXPECT_THROW(sinkhorn_scale(DenseMatrix::from_rows({{1, -1}, {1, 1}})), DomainError);
    EXPECT_THROW(sinkhorn_scale(DenseMatrix(2, 3, 1.0)), DimensionError);
}

TEST(Sinkhorn, NonConvergentReportsBestIterate) {
    // Upper-triangular support has no positive diagonal other than the main one, so off-diagonal
    // mass dies slowly; an iteration budget of 1 cannot reach the tolerance band.
    const auto a = DenseMatrix::from_rows({{1, 1000, 1000}, {0, 1, 1000}, {0, 0, 1}});
    try {
        sinkhorn_scale(a, 1e-12, 1);
        FAIL() << "expected ConvergenceError";
    } catch (const ConvergenceError& e) {
        EXPECT_FALSE(e.best_so_far.approximately_doubly_stochastic());
        EXPECT_EQ(e.best_so_far.iterations, 1u);
    }
}

TEST(TransferLogPer, RyserRoundTrip) {
    std::mt19937_64 gen(3);
    for (std::size_t n = 2; n <= 8; ++n) {
        const auto a = random_positive(n, gen);
        const auto r = sinkhorn_scale(a);
        const auto lhs = per_ryser(r.b) * SignedLogValue::from_log(transfer_log_per(r));
        EXPECT_LE(relative_difference(lhs, per_ryser(a)), 1e-8) << n;
    }
}

TEST(SinkhornProperties, Idempotent) {
    std::mt19937_64 gen(4);
    const auto r = sinkhorn_scale(random_positive(9, gen));
    const auto again = sinkhorn_scale(r.b);
    EXPECT_LE(again.iterations, 1u);
    EXPECT_LE(std::max(again.row_deviation, again.col_deviation), kDefaultScalingTolerance);
}

TEST(SinkhornProperties, SupportPreserved) {
    std::mt19937_64 gen(5);
    std::bernoulli_distribution drop(0.3);
    for (int t = 0; t < 20; ++t) {
        auto a = random_positive(6, gen);
        for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t j = 0; j < 6; ++j)
                if (i != j && drop(gen)) a(i, j) = 0.0;
        const auto r = sinkhorn_scale(a);
        for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(r.b(i, j) == 0.0, a(i, j) == 0.0);
    }
}

TEST(SinkhornProperties, ScaleInvariantOutput) {
    std::mt19937_64 gen(6);
    const auto a = random_positive(5, gen);
    const auto r1 = sinkhorn_scale(a);
    const auto r2 = sinkhorn_scale(scaled(a, 8.0));
    for (std::size_t k = 0; k < r1.b.data().size(); ++k) EXPECT_NEAR(r1.b.data()[k], r2.b.data()[k], 1e-9);
    EXPECT_NEAR(transfer_log_per(r2) - transfer_log_per(r1), 5 * std::log(8.0), 1e-9);
}
