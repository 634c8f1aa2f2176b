#pragma once

// Dense matrices, variance/mean profiles and seeded Gaussian sampling of
// inhomogeneous matrices W = A (.) G + B.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace permest {

// Error hierarchy. The CLI maps each family onto an exit code.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DimensionError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct CapacityError : Error { using Error::Error; };
struct StructuralError : Error { using Error::Error; };
struct NumericError : Error { using Error::Error; };
struct InsufficientSamples : Error { using Error::Error; };

// Row-major matrix of finite doubles.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    // Throws DimensionError on size mismatch, DomainError on NaN/Inf.
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

    static DenseMatrix identity(std::size_t n);
    static DenseMatrix ones(std::size_t rows, std::size_t cols);
    static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool is_square() const noexcept { return rows_ == cols_; }

    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }
    std::span<const double> row(std::size_t i) const noexcept {
        return std::span<const double>(data_).subspan(i * cols_, cols_);
    }

    DenseMatrix transposed() const;
    // First `count` columns.
    DenseMatrix leading_columns(std::size_t count) const;

    bool operator==(const DenseMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix entrywise_sqrt(const DenseMatrix& a);
DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix scaled(const DenseMatrix& a, double c);
bool all_nonnegative(const DenseMatrix& a) noexcept;

// FNV-1a over shape and entry bytes.
std::uint64_t fingerprint(const DenseMatrix& a) noexcept;

// Standard deviations a_{ij}, each either exactly 0 or inside [floor, 1].
class VarianceProfile {
public:
    VarianceProfile(DenseMatrix stddev, double floor);
    // Floor taken as the smallest nonzero entry (1 when the matrix is zero).
    static VarianceProfile from_matrix(DenseMatrix stddev);

    const DenseMatrix& matrix() const noexcept { return stddev_; }
    double floor() const noexcept { return floor_; }
    std::size_t rows() const noexcept { return stddev_.rows(); }
    std::size_t cols() const noexcept { return stddev_.cols(); }

private:
    DenseMatrix stddev_;
    double floor_;
};

class MeanMatrix {
public:
    explicit MeanMatrix(DenseMatrix mean, std::optional<double> norm_bound = std::nullopt);

    const DenseMatrix& matrix() const noexcept { return mean_; }
    // User-declared K with ||E W|| <= K sqrt(n); never checked here.
    std::optional<double> norm_bound() const noexcept { return norm_bound_; }

private:
    DenseMatrix mean_;
    std::optional<double> norm_bound_;
};

struct SeedSpec {
    std::uint64_t root = 0;
    std::uint64_t stream = 0;

    SeedSpec with_stream(std::uint64_t s) const noexcept { return {root, s}; }
    // Stream used by trial t of an experiment whose base seed is *this.
    SeedSpec trial(std::uint64_t t) const noexcept { return {root, stream + t}; }
    bool operator==(const SeedSpec&) const = default;
};

// Deterministic generator for one (root, stream) pair.
//
// Engine: std::mt19937_64 seeded with splitmix64(splitmix64(root) + stream).
// Uniforms take the top 53 bits of each engine output. Normals are produced
// by the Box-Muller transform in pairs (cos branch first, then sin branch).
// Both choices are fixed so samples are bit-identical across runs of a build.
class GaussianStream {
public:
    explicit GaussianStream(SeedSpec seed);

    double uniform();          // [0, 1)
    double normal();           // N(0, 1)
    std::uint64_t next_u64();
    // Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound);

private:
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

DenseMatrix sample_gaussian_matrix(std::size_t rows, std::size_t cols, SeedSpec seed);

// W = profile (.) G + mean, G standard Gaussian drawn from `seed`.
DenseMatrix sample_w(const VarianceProfile& profile, const MeanMatrix* mean, SeedSpec seed);
DenseMatrix sample_w(const VarianceProfile& profile, SeedSpec seed);

} // namespace permest
