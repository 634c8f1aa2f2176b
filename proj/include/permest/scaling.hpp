#pragma once

// Alternating row/column normalization: B = diag(d1) * A * diag(d2) with
// row and column sums of B driven to 1.

#include <cstddef>
#include <vector>

#include "permest/core.hpp"

namespace permest {

struct ScalingResult {
    std::vector<double> d1; // row scalers
    std::vector<double> d2; // column scalers
    DenseMatrix b;
    std::size_t iterations = 0; // completed row+column sweeps
    double row_deviation = 0.0; // max_i |sum_j b_ij - 1|
    double col_deviation = 0.0; // max_j |sum_i b_ij - 1|
    // All row and column sums within [1/2, 2].
    bool approximately_doubly_stochastic() const noexcept;
};

// Thrown when the [1/2, 2] band is not reached; carries the best iterate.
struct ConvergenceError : Error {
    ConvergenceError(const std::string& what, ScalingResult best) : Error(what), best_so_far(std::move(best)) {}
    ScalingResult best_so_far;
};

inline constexpr double kDefaultScalingTolerance = 1e-6;
inline constexpr std::size_t kDefaultScalingIterations = 10000;

// Stops once every row and column sum is within [1 - tol, 1 + tol]; at the
// iteration limit, succeeds if the sums are within [1/2, 2].
// Throws DomainError on negative entries, StructuralError on an all-zero row
// or column, ConvergenceError when the limit is hit outside [1/2, 2].
ScalingResult sinkhorn_scale(const DenseMatrix& a, double tol = kDefaultScalingTolerance,
                             std::size_t max_iterations = kDefaultScalingIterations);

// log per(A) - log per(B) = -(sum log d1 + sum log d2).
double transfer_log_per(const ScalingResult& result);

} // namespace permest
