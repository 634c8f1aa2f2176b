#pragma once

// Singular values of inhomogeneous Gaussian matrices: small-ball tail
// experiments, the multi-level truncated log-determinant, and the
// log-determinant concentration / second-moment / Jensen-gap experiments.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "permest/core.hpp"

namespace permest {

struct SingularSpectrum {
    std::vector<double> values; // descending, size min(rows, cols)

    double smallest() const { return values.back(); }
    // 1-based s_k as in s_1 >= s_2 >= ...
    double s(std::size_t k) const { return values.at(k - 1); }
};

// Jacobi SVD (deterministic for fixed input). NumericError on failure.
SingularSpectrum singular_values(const DenseMatrix& w);

double operator_norm(const DenseMatrix& w);
// ||mean|| <= K sqrt(n) for the declared K; nullopt when K was not declared.
std::optional<bool> mean_norm_within_bound(const MeanMatrix& mean);

enum class ProfileKind { Complete, Identity };
ProfileKind parse_profile_kind(const std::string& name);
std::string to_string(ProfileKind kind);
VarianceProfile make_profile(ProfileKind kind, std::size_t n);

struct Interval {
    double low = 0.0;
    double high = 0.0;
};

// Wilson score interval for a binomial proportion (z = 1.96 gives 95%).
Interval wilson_interval(std::size_t hits, std::size_t trials, double z = 1.96);

struct TailExperimentConfig {
    // n x m profile; m == n probes s_n, m < n probes s_m.
    VarianceProfile profile;
    std::optional<MeanMatrix> mean;
    std::vector<double> grid; // positive, strictly ascending
    std::size_t trials = 1000;
    SeedSpec seed;
    std::size_t workers = 1;
    std::size_t bootstrap_resamples = 200;
};

struct TailPoint {
    double t = 0.0;
    std::size_t hits = 0;
    double frequency = 0.0;
    Interval ci;
};

struct TailCurve {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t trials = 0;
    // Per-trial normalized statistic, in trial order:
    //   square: s_n * sqrt(n); tall: s_m * sqrt(n) / (n - m).
    std::vector<double> statistic;
    std::vector<TailPoint> points;
    // Least-squares slope of log frequency against log t over points with hits.
    std::optional<double> slope;
    std::optional<Interval> slope_ci; // bootstrap percentile 95%

    // Consecutive-point frequency ratios P(t_{k+1}) / P(t_k), for pairs whose
    // lower point has at least `min_hits` hits.
    std::vector<double> consecutive_ratios(std::size_t min_hits) const;
    bool nondecreasing() const;
};

// Tail of the smallest singular value for any n x m profile with m <= n:
// square uses s_n sqrt(n), tall uses s_m sqrt(n) / (n - m).
TailCurve singular_value_tail(const TailExperimentConfig& config);

// P(s_n sqrt(n) <= t). Requires a square profile and at least 1000 trials.
TailCurve smallest_sv_tail(const TailExperimentConfig& config);

// P(s_m <= t (n - m) / sqrt(n)) for an n x m profile with n/2 < m <= n - 4,
// with a fitted slope and bootstrap CI.
TailCurve intermediate_sv_tail(const TailExperimentConfig& config);

// Levels n_k = max(1, floor(n 2^{-4k})) and floors eps_k = c0 n_k / sqrt(n)
// for k = 0..k*. Codimension l uses eps_k on [n_k + 1, n_{k-1}] and eps_{k*}
// for l <= l* = n_{k*}.
class TruncationSchedule {
public:
    TruncationSchedule(std::size_t n, std::size_t depth, double c0);

    std::size_t n() const noexcept { return n_; }
    std::size_t depth() const noexcept { return depth_; }
    double c0() const noexcept { return c0_; }
    const std::vector<std::size_t>& dims() const noexcept { return dims_; }
    const std::vector<double>& floors() const noexcept { return floors_; }
    std::size_t l_star() const noexcept { return dims_.back(); }

    double floor_for_codim(std::size_t l) const;
    // t_k = sqrt(tau) 2^{k + k*}
    double deviation_level(std::size_t k, double tau) const;

private:
    std::size_t n_;
    std::size_t depth_;
    double c0_;
    std::vector<std::size_t> dims_;
    std::vector<double> floors_;
};

inline constexpr double kDefaultTruncationC0 = 0.05;

// Throws DomainError when n 2^{-4 depth} < 1 or c0 <= 0.
TruncationSchedule build_truncation_schedule(std::size_t n, std::size_t depth, double c0 = kDefaultTruncationC0);
// Largest depth with n 2^{-4 depth} >= 1.
std::size_t max_truncation_depth(std::size_t n);

// sum_{l=0}^{n-1} 2 log(max(s_{n-l}, eps(l))).
double truncated_log_det(const SingularSpectrum& spectrum, const TruncationSchedule& schedule);

// The comparison bound (3/2) l* log n.
double truncation_gap_bound(const TruncationSchedule& schedule);

struct DeviationQuantiles {
    std::vector<double> levels; // probabilities
    std::vector<double> values; // quantiles of x - mean
};

struct ConcentrationPoint {
    std::size_t n = 0;
    std::size_t trials = 0;
    std::size_t degenerate = 0;
    std::vector<double> log_det2;       // per trial (finite draws only)
    std::vector<double> truncated;      // per trial, same draws
    double mean = 0.0;
    double std = 0.0;
    DeviationQuantiles quantiles;
    double truncated_mean = 0.0;        // estimate of Q(l*)
    double truncated_std = 0.0;
    DeviationQuantiles truncated_quantiles;
    std::size_t l_star = 0;
    std::size_t depth = 0;
    double gap_bound = 0.0;             // (3/2) l* log n
    double within_bound_fraction = 0.0; // |log det^2 - truncated| <= gap_bound
    double reference_scale = 0.0;       // (n log n)^{1/3}
};

struct ConcentrationConfig {
    ProfileKind profile = ProfileKind::Complete;
    std::vector<std::size_t> sweep;
    std::size_t trials = 1000;
    SeedSpec seed;
    std::optional<std::size_t> depth; // default: max_truncation_depth(n)
    double c0 = kDefaultTruncationC0;
    std::size_t workers = 1;
};

struct ConcentrationReport {
    std::vector<ConcentrationPoint> points;
    std::optional<double> std_slope; // log-log slope of std(log det^2) vs n
};

ConcentrationPoint concentration_point(const VarianceProfile& profile, std::size_t trials, SeedSpec seed,
                                       std::optional<std::size_t> depth, double c0, std::size_t workers);
ConcentrationReport concentration_experiment(const ConcentrationConfig& config);

struct SecondMomentPoint {
    std::size_t n = 0;
    std::size_t trials = 0;
    std::size_t degenerate = 0;
    double mean_square = 0.0;  // E[log^2 det^2]
    double standard_error = 0.0;
    double ratio = 0.0;        // mean_square / n^3
};

// Requires a generalized diagonal in the support of the profile.
SecondMomentPoint second_moment(const VarianceProfile& profile, std::size_t trials, SeedSpec seed,
                                std::size_t workers = 1);

struct SecondMomentReport {
    std::vector<SecondMomentPoint> points;
    double max_ratio = 0.0;
};

SecondMomentReport second_moment_check(ProfileKind kind, const std::vector<std::size_t>& sweep, std::size_t trials,
                                       SeedSpec seed, std::size_t workers = 1);

struct GapReport {
    std::size_t n = 0;
    double alpha = 0.0;
    std::size_t trials = 0;
    std::size_t degenerate = 0;
    double log_per = 0.0;
    double mean_log_det2 = 0.0;
    double std_log_det2 = 0.0;
    double gap = 0.0;           // log per - mean log det^2
    double gap_per_n = 0.0;
    double ci_halfwidth = 0.0;  // 95% half width of the gap
};

// Jensen gap log per(B) - E log det^2(sqrt(B) (.) G) for an arbitrary
// nonnegative square B (n <= 20).
GapReport jensen_gap(const DenseMatrix& b, std::size_t trials, SeedSpec seed, std::size_t workers = 1);

// Unit diagonal, alpha/n elsewhere.
GapReport counterexample_gap(std::size_t n, double alpha, std::size_t trials, SeedSpec seed, std::size_t workers = 1);

inline constexpr std::size_t kGapDimensionCap = 20;

// Ordinary least-squares slope of y on x.
double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace permest
