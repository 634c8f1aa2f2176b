#include "permest/exact.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

namespace permest {

namespace {

// Neumaier's variant of Kahan summation.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

void require_square(const DenseMatrix& a, std::size_t cap, const char* who) {
    if (!a.is_square()) throw DimensionError(std::string(who) + ": matrix must be square");
    if (a.rows() > cap) {
        throw CapacityError(std::string(who) + ": n = " + std::to_string(a.rows()) + " exceeds cap " +
                            std::to_string(cap));
    }
}

} // namespace

SignedLogValue SignedLogValue::from_double(double x) noexcept {
    if (x == 0.0) return {0, 0.0};
    return {x > 0.0 ? 1 : -1, std::log(std::abs(x))};
}

SignedLogValue SignedLogValue::from_log(double log_magnitude, int sign) noexcept {
    if (sign == 0) return {0, 0.0};
    return {sign > 0 ? 1 : -1, log_magnitude};
}

double SignedLogValue::to_double() const noexcept {
    if (sign == 0) return 0.0;
    return sign * std::exp(log_magnitude);
}

double SignedLogValue::log10_magnitude() const noexcept {
    if (sign == 0) return -std::numeric_limits<double>::infinity();
    return log_magnitude / std::log(10.0);
}

SignedLogValue SignedLogValue::operator*(const SignedLogValue& other) const noexcept {
    if (sign == 0 || other.sign == 0) return {0, 0.0};
    return {sign * other.sign, log_magnitude + other.log_magnitude};
}

double relative_difference(const SignedLogValue& x, const SignedLogValue& y) noexcept {
    if (x.sign == 0 && y.sign == 0) return 0.0;
    if (x.sign == 0 || y.sign == 0) return 1.0;
    const double big = std::max(x.log_magnitude, y.log_magnitude);
    const double xv = x.sign * std::exp(x.log_magnitude - big);
    const double yv = y.sign * std::exp(y.log_magnitude - big);
    return std::abs(xv - yv);
}

SignedLogValue per_naive(const DenseMatrix& a) {
    require_square(a, kNaivePermanentCap, "per_naive");
    const std::size_t n = a.rows();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    CompensatedSum total;
    do {
        double term = 1.0;
        for (std::size_t i = 0; i < n && term != 0.0; ++i) term *= a(i, perm[i]);
        total.add(term);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return SignedLogValue::from_double(total.value());
}

SignedLogValue per_ryser(const DenseMatrix& a) {
    require_square(a, kRyserPermanentCap, "per_ryser");
    const std::size_t n = a.rows();
    if (n == 0) return {1, 0.0};
    // per(A) = (-1)^n sum_S (-1)^{|S|} prod_i sum_{j in S} a_ij
    std::vector<double> row_sums(n, 0.0);
    CompensatedSum total;
    std::uint64_t gray = 0;
    const std::uint64_t count = std::uint64_t{1} << n;
    for (std::uint64_t k = 1; k < count; ++k) {
        const auto col = static_cast<std::size_t>(std::countr_zero(k));
        const std::uint64_t bit = std::uint64_t{1} << col;
        gray ^= bit;
        if (gray & bit) {
            for (std::size_t i = 0; i < n; ++i) row_sums[i] += a(i, col);
        } else {
            for (std::size_t i = 0; i < n; ++i) row_sums[i] -= a(i, col);
        }
        double prod = 1.0;
        for (std::size_t i = 0; i < n && prod != 0.0; ++i) prod *= row_sums[i];
        total.add((std::popcount(gray) & 1) ? -prod : prod);
    }
    const double value = (n & 1) ? -total.value() : total.value();
    return SignedLogValue::from_double(value);
}

DenseMatrix counterexample_matrix(std::size_t n, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("counterexample matrix: alpha must lie in (0, 1)");
    DenseMatrix b(n, n, alpha / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) b(i, i) = 1.0;
    return b;
}

SignedLogValue per_of_counterexample(std::size_t n, double alpha) {
    if (n > kRyserPermanentCap) throw CapacityError("per_of_counterexample: n exceeds Ryser cap");
    return per_ryser(counterexample_matrix(n, alpha));
}

SignedLogValue per_counterexample_closed_form(std::size_t n, double alpha) {
    if (n > kRyserPermanentCap) throw CapacityError("per_counterexample_closed_form: n exceeds Ryser cap");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("counterexample matrix: alpha must lie in (0, 1)");
    // D(k) = (k-1)(D(k-1) + D(k-2))
    std::vector<double> derangements(n + 1, 0.0);
    derangements[0] = 1.0;
    if (n >= 1) derangements[1] = 0.0;
    for (std::size_t k = 2; k <= n; ++k)
        derangements[k] = static_cast<double>(k - 1) * (derangements[k - 1] + derangements[k - 2]);
    const double off = alpha / static_cast<double>(n == 0 ? 1 : n);
    CompensatedSum total;
    for (std::size_t fixed = 0; fixed <= n; ++fixed) {
        const std::size_t moved = n - fixed;
        if (derangements[moved] == 0.0) continue;
        const double log_binom = std::lgamma(n + 1.0) - std::lgamma(fixed + 1.0) - std::lgamma(moved + 1.0);
        total.add(std::exp(log_binom + std::log(derangements[moved]) + static_cast<double>(moved) * std::log(off)));
    }
    return SignedLogValue::from_double(total.value());
}

} // namespace permest
