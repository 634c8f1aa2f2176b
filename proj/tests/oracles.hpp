#pragma once

#include <cmath>
#include <numbers>

namespace permest::testing {

// E f(log g^2) for g ~ N(0,1). With g = e^u the integrand 2 f(2u) phi(e^u) e^u
// is smooth on the whole line; composite Simpson on [-40, 6].
template <class F>
double log_chi2_expectation(F f) {
    const double lo = -40.0, hi = 6.0;
    const int steps = 200000;
    const double h = (hi - lo) / steps;
    auto integrand = [&](double u) {
        const double x = std::exp(u);
        return 2.0 * f(2.0 * u) * std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi) * x;
    };
    double sum = integrand(lo) + integrand(hi);
    for (int k = 1; k < steps; ++k) sum += (k % 2 ? 4.0 : 2.0) * integrand(lo + k * h);
    return sum * h / 3.0;
}

} // namespace permest::testing
