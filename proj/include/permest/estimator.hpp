#pragma once

// Randomized permanent estimator: for nonnegative A and standard Gaussian G,
// det^2(sqrt(A) (.) G) is an unbiased estimate of per(A).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "permest/core.hpp"
#include "permest/exact.hpp"

namespace permest {

// log det^2(w) from an LU factorization with partial pivoting. nullopt when
// a pivot is exactly zero or the result is not finite.
std::optional<double> log_det_sq(const DenseMatrix& w);

struct EstimatorRun {
    std::vector<double> samples; // finite log det^2 values, in trial order
    SeedSpec seed;
    std::size_t requested = 0;
    std::size_t degenerate = 0;
    std::uint64_t profile_fingerprint = 0;
    std::size_t dimension = 0;
};

struct EstimatorStats {
    double mean_log_det2 = 0.0;
    double std_log_det2 = 0.0; // sample standard deviation (N - 1)
    SignedLogValue per_estimate; // log(mean det^2) via log-sum-exp
    double log_standard_error = 0.0; // log of the standard error of mean det^2
    std::size_t count = 0;
};

// Trial t draws its Gaussian matrix from seed.trial(t).
EstimatorRun run_estimator(const DenseMatrix& a, std::size_t samples, SeedSpec seed, std::size_t workers = 1);

// Throws InsufficientSamples with fewer than two finite samples.
EstimatorStats summarize(const EstimatorRun& run);

double log_sum_exp(const std::vector<double>& values);

struct EstimatorErrorReport {
    double log_per_exact = 0.0;
    std::vector<double> abs_log_errors; // |log det^2 - log per| per sample
    double median = 0.0;
    double max = 0.0;
    double normalizer = 0.0; // sqrt(n log n)
    double median_normalized = 0.0;
    std::size_t degenerate = 0;
};

// Requires n <= Ryser cap and per(A) > 0.
EstimatorErrorReport estimator_error_report(const DenseMatrix& a, std::size_t samples, SeedSpec seed,
                                            std::size_t workers = 1);

double median_of(std::vector<double> values);

} // namespace permest
