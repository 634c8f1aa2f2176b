#include "permest/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace permest {

namespace {

struct Deviations {
    double row = 0.0;
    double col = 0.0;
    double row_min = 0.0, row_max = 0.0, col_min = 0.0, col_max = 0.0;
};

Deviations measure(const DenseMatrix& b) {
    Deviations d;
    std::vector<double> col_sums(b.cols(), 0.0);
    d.row_min = d.col_min = std::numeric_limits<double>::infinity();
    d.row_max = d.col_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < b.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < b.cols(); ++j) {
            s += b(i, j);
            col_sums[j] += b(i, j);
        }
        d.row = std::max(d.row, std::abs(s - 1.0));
        d.row_min = std::min(d.row_min, s);
        d.row_max = std::max(d.row_max, s);
    }
    for (double s : col_sums) {
        d.col = std::max(d.col, std::abs(s - 1.0));
        d.col_min = std::min(d.col_min, s);
        d.col_max = std::max(d.col_max, s);
    }
    return d;
}

DenseMatrix apply_scalers(const DenseMatrix& a, const std::vector<double>& d1, const std::vector<double>& d2) {
    DenseMatrix b(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) b(i, j) = d1[i] * a(i, j) * d2[j];
    return b;
}

ScalingResult finish(const DenseMatrix& a, std::vector<double> d1, std::vector<double> d2, std::size_t iters) {
    ScalingResult r;
    r.b = apply_scalers(a, d1, d2);
    const auto dev = measure(r.b);
    r.d1 = std::move(d1);
    r.d2 = std::move(d2);
    r.iterations = iters;
    r.row_deviation = dev.row;
    r.col_deviation = dev.col;
    return r;
}

} // namespace

bool ScalingResult::approximately_doubly_stochastic() const noexcept {
    if (b.rows() == 0) return true;
    const auto dev = measure(b);
    return dev.row_min >= 0.5 && dev.col_min >= 0.5 && dev.row_max <= 2.0 && dev.col_max <= 2.0;
}

ScalingResult sinkhorn_scale(const DenseMatrix& a, double tol, std::size_t max_iterations) {
    if (!a.is_square()) throw DimensionError("sinkhorn_scale: matrix must be square");
    if (!all_nonnegative(a)) throw DomainError("sinkhorn_scale: entries must be nonnegative");
    if (!(tol > 0.0)) throw DomainError("sinkhorn_scale: tol must be positive");
    const std::size_t n = a.rows();
    for (std::size_t i = 0; i < n; ++i) {
        if (std::ranges::all_of(a.row(i), [](double x) { return x == 0.0; }))
            throw StructuralError("sinkhorn_scale: row " + std::to_string(i) + " is zero");
    }
    for (std::size_t j = 0; j < n; ++j) {
        bool any = false;
        for (std::size_t i = 0; i < n && !any; ++i) any = a(i, j) != 0.0;
        if (!any) throw StructuralError("sinkhorn_scale: column " + std::to_string(j) + " is zero");
    }

    std::vector<double> d1(n, 1.0);
    std::vector<double> d2(n, 1.0);
    DenseMatrix b = a;
    auto dev = measure(b);
    std::size_t iters = 0;
    while (std::max(dev.row, dev.col) > tol && iters < max_iterations) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += b(i, j);
            const double f = 1.0 / s;
            d1[i] *= f;
            for (std::size_t j = 0; j < n; ++j) b(i, j) *= f;
        }
        std::vector<double> col_sums(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) col_sums[j] += b(i, j);
        for (std::size_t j = 0; j < n; ++j) {
            const double f = 1.0 / col_sums[j];
            d2[j] *= f;
            for (std::size_t i = 0; i < n; ++i) b(i, j) *= f;
        }
        ++iters;
        dev = measure(b);
    }

    // b is rebuilt from the scalers so it matches diag(d1) A diag(d2) to rounding.
    ScalingResult result = finish(a, std::move(d1), std::move(d2), iters);
    if (std::max(result.row_deviation, result.col_deviation) > tol && !result.approximately_doubly_stochastic()) {
        throw ConvergenceError("sinkhorn_scale: sums outside [1/2, 2] after " + std::to_string(iters) + " iterations",
                               std::move(result));
    }
    return result;
}

double transfer_log_per(const ScalingResult& result) {
    double offset = 0.0;
    for (double d : result.d1) offset -= std::log(d);
    for (double d : result.d2) offset -= std::log(d);
    return offset;
}

} // namespace permest
