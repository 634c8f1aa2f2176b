#pragma once

// Exact permanents for cross-validation of the randomized estimator.

#include <cstddef>

#include "permest/core.hpp"

namespace permest {

// sign * exp(log_magnitude); sign == 0 encodes an exact zero.
struct SignedLogValue {
    int sign = 0;
    double log_magnitude = 0.0;

    static SignedLogValue from_double(double x) noexcept;
    static SignedLogValue from_log(double log_magnitude, int sign = 1) noexcept;

    // Infinite when the magnitude is beyond double range.
    double to_double() const noexcept;
    double log10_magnitude() const noexcept;

    SignedLogValue operator*(const SignedLogValue& other) const noexcept;
};

// Relative distance |x - y| / max(|x|, |y|) evaluated in log space; 0 when both are zero.
double relative_difference(const SignedLogValue& x, const SignedLogValue& y) noexcept;

inline constexpr std::size_t kNaivePermanentCap = 10;
inline constexpr std::size_t kRyserPermanentCap = 30;

// Sum over all n! permutations with compensated accumulation.
SignedLogValue per_naive(const DenseMatrix& a);

// Ryser inclusion-exclusion over column subsets visited in Gray-code order.
SignedLogValue per_ryser(const DenseMatrix& a);

// The n x n matrix with unit diagonal and alpha/n off the diagonal.
DenseMatrix counterexample_matrix(std::size_t n, double alpha);

SignedLogValue per_of_counterexample(std::size_t n, double alpha);

// Closed form of the same permanent: a permutation with l fixed points
// contributes (alpha/n)^(n-l), and there are C(n,l) * D(n-l) of them
// (D = derangement count).
SignedLogValue per_counterexample_closed_form(std::size_t n, double alpha);

} // namespace permest
