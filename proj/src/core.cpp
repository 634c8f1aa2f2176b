#include "permest/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>

namespace permest {

namespace {

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError(std::string(what) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()));
    }
}

} // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (!std::isfinite(fill)) throw DomainError("DenseMatrix: non-finite fill value");
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows_ * cols_) {
        throw DimensionError("DenseMatrix: expected " + std::to_string(rows_ * cols_) + " entries, got " +
                             std::to_string(data_.size()));
    }
    for (double x : data_) {
        if (!std::isfinite(x)) throw DomainError("DenseMatrix: entries must be finite");
    }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::ones(std::size_t rows, std::size_t cols) { return DenseMatrix(rows, cols, 1.0); }

DenseMatrix DenseMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.front().size();
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw DimensionError("DenseMatrix::from_rows: ragged rows");
        data.insert(data.end(), row.begin(), row.end());
    }
    return DenseMatrix(r, c, std::move(data));
}

DenseMatrix DenseMatrix::transposed() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

DenseMatrix DenseMatrix::leading_columns(std::size_t count) const {
    if (count > cols_) throw DimensionError("leading_columns: count exceeds column count");
    DenseMatrix out(rows_, count);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < count; ++j) out(i, j) = (*this)(i, j);
    return out;
}

DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "hadamard");
    DenseMatrix out(a.rows(), a.cols());
    auto x = a.data();
    auto y = b.data();
    auto z = out.data();
    for (std::size_t k = 0; k < z.size(); ++k) z[k] = x[k] * y[k];
    return out;
}

DenseMatrix entrywise_sqrt(const DenseMatrix& a) {
    DenseMatrix out(a.rows(), a.cols());
    auto x = a.data();
    auto z = out.data();
    for (std::size_t k = 0; k < z.size(); ++k) {
        if (x[k] < 0.0) throw DomainError("entrywise_sqrt: negative entry");
        z[k] = std::sqrt(x[k]);
    }
    return out;
}

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "add");
    DenseMatrix out(a.rows(), a.cols());
    auto x = a.data();
    auto y = b.data();
    auto z = out.data();
    for (std::size_t k = 0; k < z.size(); ++k) z[k] = x[k] + y[k];
    return out;
}

DenseMatrix scaled(const DenseMatrix& a, double c) {
    DenseMatrix out = a;
    for (double& x : out.data()) x *= c;
    return out;
}

bool all_nonnegative(const DenseMatrix& a) noexcept {
    return std::ranges::all_of(a.data(), [](double x) { return x >= 0.0; });
}

std::uint64_t fingerprint(const DenseMatrix& a) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const void* p, std::size_t len) {
        const auto* bytes = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= bytes[i];
            h *= 0x100000001b3ULL;
        }
    };
    const std::uint64_t shape[2] = {a.rows(), a.cols()};
    mix(shape, sizeof(shape));
    mix(a.data().data(), a.data().size_bytes());
    return h;
}

VarianceProfile::VarianceProfile(DenseMatrix stddev, double floor) : stddev_(std::move(stddev)), floor_(floor) {
    if (!(floor_ > 0.0 && floor_ <= 1.0)) throw DomainError("VarianceProfile: floor must lie in (0, 1]");
    for (double x : stddev_.data()) {
        if (x != 0.0 && (x < floor_ || x > 1.0)) {
            throw DomainError("VarianceProfile: entry " + std::to_string(x) + " outside {0} U [" +
                              std::to_string(floor_) + ", 1]");
        }
    }
}

VarianceProfile VarianceProfile::from_matrix(DenseMatrix stddev) {
    double floor = 1.0;
    for (double x : stddev.data())
        if (x > 0.0) floor = std::min(floor, x);
    return VarianceProfile(std::move(stddev), floor);
}

MeanMatrix::MeanMatrix(DenseMatrix mean, std::optional<double> norm_bound)
    : mean_(std::move(mean)), norm_bound_(norm_bound) {
    if (norm_bound_ && !(*norm_bound_ >= 1.0)) throw DomainError("MeanMatrix: K must be >= 1");
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

GaussianStream::GaussianStream(SeedSpec seed) : engine_(splitmix64(splitmix64(seed.root) + seed.stream)) {}

std::uint64_t GaussianStream::next_u64() { return engine_(); }

double GaussianStream::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t GaussianStream::below(std::uint64_t bound) {
    // Rejection sampling keeps the draw exactly uniform.
    const std::uint64_t limit = bound == 0 ? 0 : (~std::uint64_t{0} / bound) * bound;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % bound;
}

double GaussianStream::normal() {
    if (spare_) {
        const double z = *spare_;
        spare_.reset();
        return z;
    }
    const double u1 = 1.0 - uniform(); // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    return radius * std::cos(angle);
}

DenseMatrix sample_gaussian_matrix(std::size_t rows, std::size_t cols, SeedSpec seed) {
    GaussianStream rng(seed);
    DenseMatrix g(rows, cols);
    for (double& x : g.data()) x = rng.normal();
    return g;
}

DenseMatrix sample_w(const VarianceProfile& profile, const MeanMatrix* mean, SeedSpec seed) {
    if (mean) require_same_shape(profile.matrix(), mean->matrix(), "sample_w");
    DenseMatrix w = hadamard(profile.matrix(), sample_gaussian_matrix(profile.rows(), profile.cols(), seed));
    if (mean) {
        auto z = w.data();
        auto b = mean->matrix().data();
        for (std::size_t k = 0; k < z.size(); ++k) z[k] += b[k];
    }
    return w;
}

DenseMatrix sample_w(const VarianceProfile& profile, SeedSpec seed) { return sample_w(profile, nullptr, seed); }

} // namespace permest
