#include "permest/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "permest/parallel.hpp"

namespace permest {

std::optional<double> log_det_sq(const DenseMatrix& w) {
    if (!w.is_square()) throw DimensionError("log_det_sq: matrix must be square");
    const std::size_t n = w.rows();
    std::vector<double> lu(w.data().begin(), w.data().end());
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t pivot = k;
        double best = std::abs(lu[k * n + k]);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double v = std::abs(lu[i * n + k]);
            if (v > best) {
                best = v;
                pivot = i;
            }
        }
        if (best == 0.0) return std::nullopt;
        if (pivot != k) std::swap_ranges(lu.begin() + k * n, lu.begin() + (k + 1) * n, lu.begin() + pivot * n);
        const double diag = lu[k * n + k];
        acc += std::log(best);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = lu[i * n + k] / diag;
            if (f == 0.0) continue;
            for (std::size_t j = k + 1; j < n; ++j) lu[i * n + j] -= f * lu[k * n + j];
        }
    }
    const double result = 2.0 * acc;
    if (!std::isfinite(result)) return std::nullopt;
    return result;
}

EstimatorRun run_estimator(const DenseMatrix& a, std::size_t samples, SeedSpec seed, std::size_t workers) {
    if (!a.is_square()) throw DimensionError("run_estimator: matrix must be square");
    if (samples == 0) throw DomainError("run_estimator: need at least one sample");
    if (!all_nonnegative(a)) throw DomainError("run_estimator: entries must be nonnegative");
    const DenseMatrix root = entrywise_sqrt(a);
    const std::size_t n = a.rows();

    std::vector<std::optional<double>> draws(samples);
    parallel_for(samples, workers, [&](std::size_t t) {
        draws[t] = log_det_sq(hadamard(root, sample_gaussian_matrix(n, n, seed.trial(t))));
    });

    EstimatorRun run;
    run.seed = seed;
    run.requested = samples;
    run.profile_fingerprint = fingerprint(a);
    run.dimension = n;
    run.samples.reserve(samples);
    for (const auto& d : draws) {
        if (d) {
            run.samples.push_back(*d);
        } else {
            ++run.degenerate;
        }
    }
    return run;
}

double log_sum_exp(const std::vector<double>& values) {
    if (values.empty()) return -std::numeric_limits<double>::infinity();
    const double top = *std::ranges::max_element(values);
    double acc = 0.0;
    for (double v : values) acc += std::exp(v - top);
    return top + std::log(acc);
}

EstimatorStats summarize(const EstimatorRun& run) {
    const auto& s = run.samples;
    if (s.size() < 2) throw InsufficientSamples("summarize: need at least two non-degenerate samples");
    const double n = static_cast<double>(s.size());

    EstimatorStats stats;
    stats.count = s.size();
    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : s) ss += (v - mean) * (v - mean);
    stats.mean_log_det2 = mean;
    stats.std_log_det2 = std::sqrt(ss / (n - 1.0));

    const double top = *std::ranges::max_element(s);
    double lin_mean = 0.0;
    for (double v : s) lin_mean += std::exp(v - top);
    lin_mean /= n;
    double lin_ss = 0.0;
    for (double v : s) {
        const double d = std::exp(v - top) - lin_mean;
        lin_ss += d * d;
    }
    stats.per_estimate = SignedLogValue::from_log(top + std::log(lin_mean));
    const double se = std::sqrt(lin_ss / (n - 1.0) / n);
    stats.log_standard_error = se > 0.0 ? top + std::log(se) : -std::numeric_limits<double>::infinity();
    return stats;
}

double median_of(std::vector<double> values) {
    if (values.empty()) throw InsufficientSamples("median of empty sample");
    const auto mid = values.size() / 2;
    std::ranges::nth_element(values, values.begin() + static_cast<std::ptrdiff_t>(mid));
    double hi = values[mid];
    if (values.size() % 2 == 1) return hi;
    const double lo = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

EstimatorErrorReport estimator_error_report(const DenseMatrix& a, std::size_t samples, SeedSpec seed,
                                            std::size_t workers) {
    const SignedLogValue per = per_ryser(a);
    if (per.sign <= 0) throw DomainError("estimator_error_report: per(A) must be positive");
    const EstimatorRun run = run_estimator(a, samples, seed, workers);
    if (run.samples.empty()) throw InsufficientSamples("estimator_error_report: every draw was degenerate");

    EstimatorErrorReport report;
    report.log_per_exact = per.log_magnitude;
    report.degenerate = run.degenerate;
    report.abs_log_errors.reserve(run.samples.size());
    for (double v : run.samples) report.abs_log_errors.push_back(std::abs(v - per.log_magnitude));
    report.median = median_of(report.abs_log_errors);
    report.max = *std::ranges::max_element(report.abs_log_errors);
    const double n = static_cast<double>(a.rows());
    report.normalizer = std::sqrt(n * std::log(n));
    report.median_normalized = report.normalizer > 0.0 ? report.median / report.normalizer : 0.0;
    return report;
}

} // namespace permest
