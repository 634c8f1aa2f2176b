#include "permest/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "permest/estimator.hpp"
#include "permest/exact.hpp"
#include "permest/graph.hpp"
#include "permest/parallel.hpp"

namespace permest {

namespace {

Eigen::MatrixXd to_eigen(const DenseMatrix& w) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(w.rows()), static_cast<Eigen::Index>(w.cols()));
    for (std::size_t i = 0; i < w.rows(); ++i)
        for (std::size_t j = 0; j < w.cols(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = w(i, j);
    return m;
}

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Linear interpolation between order statistics.
double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) return 0.0;
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

DeviationQuantiles deviation_quantiles(const std::vector<double>& x, double mean) {
    DeviationQuantiles q;
    q.levels = {0.05, 0.25, 0.5, 0.75, 0.95};
    std::vector<double> sorted(x);
    std::ranges::sort(sorted);
    for (double p : q.levels) q.values.push_back(quantile_sorted(sorted, p) - mean);
    return q;
}

void validate_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw DomainError("tail experiment: threshold grid is empty");
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (!(grid[k] > 0.0)) throw DomainError("tail experiment: grid values must be positive");
        if (k > 0 && !(grid[k] > grid[k - 1])) throw DomainError("tail experiment: grid must be strictly ascending");
    }
}

std::vector<TailPoint> tally(const std::vector<double>& statistic, const std::vector<double>& grid) {
    std::vector<double> sorted(statistic);
    std::ranges::sort(sorted);
    std::vector<TailPoint> points;
    for (double t : grid) {
        TailPoint p;
        p.t = t;
        p.hits = static_cast<std::size_t>(std::ranges::upper_bound(sorted, t) - sorted.begin());
        p.frequency = sorted.empty() ? 0.0 : static_cast<double>(p.hits) / static_cast<double>(sorted.size());
        p.ci = wilson_interval(p.hits, sorted.size());
        points.push_back(p);
    }
    return points;
}

std::optional<double> fitted_slope(const std::vector<TailPoint>& points) {
    std::vector<double> x, y;
    for (const auto& p : points) {
        if (p.hits == 0) continue;
        x.push_back(std::log(p.t));
        y.push_back(std::log(p.frequency));
    }
    if (x.size() < 2) return std::nullopt;
    return least_squares_slope(x, y);
}

// Normalized statistic per trial, computed in parallel and stored by trial index.
std::vector<double> tail_statistic(const TailExperimentConfig& c, double scale) {
    std::vector<double> stat(c.trials);
    const MeanMatrix* mean = c.mean ? &*c.mean : nullptr;
    parallel_for(c.trials, c.workers, [&](std::size_t t) {
        stat[t] = singular_values(sample_w(c.profile, mean, c.seed.trial(t))).smallest() * scale;
    });
    return stat;
}

TailCurve build_curve(const TailExperimentConfig& c, std::vector<double> statistic) {
    TailCurve curve;
    curve.rows = c.profile.rows();
    curve.cols = c.profile.cols();
    curve.trials = c.trials;
    curve.points = tally(statistic, c.grid);
    curve.slope = fitted_slope(curve.points);
    curve.statistic = std::move(statistic);
    return curve;
}

} // namespace

SingularSpectrum singular_values(const DenseMatrix& w) {
    SingularSpectrum s;
    if (w.rows() == 0 || w.cols() == 0) return s;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(w));
    if (svd.info() != Eigen::Success) {
        throw NumericError("singular_values: SVD failed for matrix fingerprint " + std::to_string(fingerprint(w)));
    }
    const auto& v = svd.singularValues();
    s.values.assign(v.data(), v.data() + v.size());
    std::ranges::sort(s.values, std::greater<>());
    return s;
}

double operator_norm(const DenseMatrix& w) {
    const auto s = singular_values(w);
    return s.values.empty() ? 0.0 : s.values.front();
}

std::optional<bool> mean_norm_within_bound(const MeanMatrix& mean) {
    if (!mean.norm_bound()) return std::nullopt;
    const double n = static_cast<double>(std::max(mean.matrix().rows(), mean.matrix().cols()));
    return operator_norm(mean.matrix()) <= *mean.norm_bound() * std::sqrt(n);
}

ProfileKind parse_profile_kind(const std::string& name) {
    if (name == "complete") return ProfileKind::Complete;
    if (name == "identity") return ProfileKind::Identity;
    throw DomainError("unknown profile kind '" + name + "' (expected complete|identity)");
}

std::string to_string(ProfileKind kind) { return kind == ProfileKind::Complete ? "complete" : "identity"; }

VarianceProfile make_profile(ProfileKind kind, std::size_t n) {
    return VarianceProfile(kind == ProfileKind::Complete ? DenseMatrix::ones(n, n) : DenseMatrix::identity(n), 1.0);
}

Interval wilson_interval(std::size_t hits, std::size_t trials, double z) {
    if (trials == 0) return {0.0, 1.0};
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(hits) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

std::vector<double> TailCurve::consecutive_ratios(std::size_t min_hits) const {
    std::vector<double> out;
    for (std::size_t k = 0; k + 1 < points.size(); ++k) {
        if (points[k].hits >= min_hits) out.push_back(points[k + 1].frequency / points[k].frequency);
    }
    return out;
}

bool TailCurve::nondecreasing() const {
    for (std::size_t k = 0; k + 1 < points.size(); ++k)
        if (points[k + 1].frequency < points[k].frequency) return false;
    return std::ranges::all_of(points, [](const TailPoint& p) { return p.frequency >= 0.0 && p.frequency <= 1.0; });
}

TailCurve singular_value_tail(const TailExperimentConfig& config) {
    const std::size_t n = config.profile.rows();
    const std::size_t m = config.profile.cols();
    if (m == 0 || m > n) throw DimensionError("singular_value_tail: need 1 <= cols <= rows");
    validate_grid(config.grid);
    const double root_n = std::sqrt(static_cast<double>(n));
    const double scale = m == n ? root_n : root_n / static_cast<double>(n - m);
    return build_curve(config, tail_statistic(config, scale));
}

TailCurve smallest_sv_tail(const TailExperimentConfig& config) {
    if (config.profile.rows() != config.profile.cols()) throw DimensionError("smallest_sv_tail: profile must be square");
    if (config.trials < 1000) throw DomainError("smallest_sv_tail: at least 1000 trials required");
    return singular_value_tail(config);
}

TailCurve intermediate_sv_tail(const TailExperimentConfig& config) {
    const std::size_t n = config.profile.rows();
    const std::size_t m = config.profile.cols();
    if (!(2 * m > n && m + 4 <= n)) {
        throw DomainError("intermediate_sv_tail: need n/2 < m <= n - 4 (got n = " + std::to_string(n) +
                          ", m = " + std::to_string(m) + ")");
    }
    if (config.trials < 1000) throw DomainError("intermediate_sv_tail: at least 1000 trials required");
    TailCurve curve = singular_value_tail(config);

    // Bootstrap over trials; streams after the trial streams keep it disjoint.
    GaussianStream rng(config.seed.trial(config.trials));
    std::vector<double> slopes;
    std::vector<double> resample(curve.statistic.size());
    for (std::size_t b = 0; b < config.bootstrap_resamples; ++b) {
        for (auto& x : resample) x = curve.statistic[rng.below(curve.statistic.size())];
        if (auto s = fitted_slope(tally(resample, config.grid))) slopes.push_back(*s);
    }
    if (slopes.size() >= 2) {
        std::ranges::sort(slopes);
        curve.slope_ci = Interval{quantile_sorted(slopes, 0.025), quantile_sorted(slopes, 0.975)};
    }
    return curve;
}

TruncationSchedule::TruncationSchedule(std::size_t n, std::size_t depth, double c0) : n_(n), depth_(depth), c0_(c0) {
    if (n == 0) throw DomainError("truncation schedule: n must be positive");
    if (!(c0 > 0.0)) throw DomainError("truncation schedule: c0 must be positive");
    if (depth > max_truncation_depth(n)) {
        throw DomainError("truncation schedule: depth " + std::to_string(depth) + " too large for n = " +
                          std::to_string(n));
    }
    const double root_n = std::sqrt(static_cast<double>(n));
    for (std::size_t k = 0; k <= depth; ++k) {
        const double exact = std::ldexp(static_cast<double>(n), -4 * static_cast<int>(k));
        const auto dim = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(exact)));
        dims_.push_back(dim);
        floors_.push_back(c0 * static_cast<double>(dim) / root_n);
    }
}

double TruncationSchedule::floor_for_codim(std::size_t l) const {
    if (l <= l_star()) return floors_.back();
    for (std::size_t k = 1; k <= depth_; ++k) {
        if (l >= dims_[k] + 1 && l <= dims_[k - 1]) return floors_[k];
    }
    throw DomainError("truncation schedule: codimension " + std::to_string(l) + " out of range");
}

double TruncationSchedule::deviation_level(std::size_t k, double tau) const {
    return std::sqrt(tau) * std::ldexp(1.0, static_cast<int>(k + depth_));
}

TruncationSchedule build_truncation_schedule(std::size_t n, std::size_t depth, double c0) {
    return TruncationSchedule(n, depth, c0);
}

std::size_t max_truncation_depth(std::size_t n) {
    std::size_t k = 0;
    while (4 * (k + 1) < 64 && (n >> (4 * (k + 1))) != 0) ++k;
    return k;
}

double truncated_log_det(const SingularSpectrum& spectrum, const TruncationSchedule& schedule) {
    const std::size_t n = schedule.n();
    if (spectrum.values.size() != n) throw DimensionError("truncated_log_det: spectrum size differs from schedule n");
    double total = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        const double s = spectrum.values[n - l - 1]; // s_{n-l}
        total += 2.0 * std::log(std::max(s, schedule.floor_for_codim(l)));
    }
    return total;
}

double truncation_gap_bound(const TruncationSchedule& schedule) {
    return 1.5 * static_cast<double>(schedule.l_star()) * std::log(static_cast<double>(schedule.n()));
}

ConcentrationPoint concentration_point(const VarianceProfile& profile, std::size_t trials, SeedSpec seed,
                                       std::optional<std::size_t> depth, double c0, std::size_t workers) {
    if (profile.rows() != profile.cols()) throw DimensionError("concentration: profile must be square");
    const std::size_t n = profile.rows();
    const auto schedule = build_truncation_schedule(n, depth.value_or(max_truncation_depth(n)), c0);

    std::vector<std::optional<double>> raw(trials);
    std::vector<double> trunc(trials);
    parallel_for(trials, workers, [&](std::size_t t) {
        const DenseMatrix w = sample_w(profile, seed.trial(t));
        raw[t] = log_det_sq(w);
        trunc[t] = truncated_log_det(singular_values(w), schedule);
    });

    ConcentrationPoint p;
    p.n = n;
    p.trials = trials;
    p.l_star = schedule.l_star();
    p.depth = schedule.depth();
    p.gap_bound = truncation_gap_bound(schedule);
    std::size_t within = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        if (!raw[t]) {
            ++p.degenerate;
            continue;
        }
        p.log_det2.push_back(*raw[t]);
        p.truncated.push_back(trunc[t]);
        if (std::abs(*raw[t] - trunc[t]) <= p.gap_bound) ++within;
    }
    // A degenerate draw has log det^2 = -inf, so it always violates the bound.
    p.within_bound_fraction = trials ? static_cast<double>(within) / static_cast<double>(trials) : 0.0;
    p.mean = mean_of(p.log_det2);
    p.std = sample_std(p.log_det2, p.mean);
    p.quantiles = deviation_quantiles(p.log_det2, p.mean);
    p.truncated_mean = mean_of(p.truncated);
    p.truncated_std = sample_std(p.truncated, p.truncated_mean);
    p.truncated_quantiles = deviation_quantiles(p.truncated, p.truncated_mean);
    const double nd = static_cast<double>(n);
    p.reference_scale = std::cbrt(nd * std::log(nd));
    return p;
}

ConcentrationReport concentration_experiment(const ConcentrationConfig& config) {
    if (config.sweep.empty()) throw DomainError("concentration: empty dimension sweep");
    ConcentrationReport report;
    for (std::size_t n : config.sweep) {
        report.points.push_back(
            concentration_point(make_profile(config.profile, n), config.trials, config.seed, config.depth, config.c0,
                                config.workers));
    }
    std::vector<double> x, y;
    for (const auto& p : report.points) {
        if (p.std > 0.0) {
            x.push_back(std::log(static_cast<double>(p.n)));
            y.push_back(std::log(p.std));
        }
    }
    if (x.size() >= 2) report.std_slope = least_squares_slope(x, y);
    return report;
}

SecondMomentPoint second_moment(const VarianceProfile& profile, std::size_t trials, SeedSpec seed,
                                std::size_t workers) {
    if (profile.rows() != profile.cols()) throw DimensionError("second_moment: profile must be square");
    if (!has_perfect_matching(graph_from_matrix(profile.matrix()))) {
        throw DomainError("second_moment: profile support has no generalized diagonal");
    }
    std::vector<std::optional<double>> draws(trials);
    parallel_for(trials, workers, [&](std::size_t t) { draws[t] = log_det_sq(sample_w(profile, seed.trial(t))); });

    SecondMomentPoint p;
    p.n = profile.rows();
    p.trials = trials;
    std::vector<double> squares;
    for (const auto& d : draws) {
        if (d) {
            squares.push_back(*d * *d);
        } else {
            ++p.degenerate;
        }
    }
    p.mean_square = mean_of(squares);
    p.standard_error =
        squares.size() > 1 ? sample_std(squares, p.mean_square) / std::sqrt(static_cast<double>(squares.size())) : 0.0;
    const double n = static_cast<double>(p.n);
    p.ratio = p.mean_square / (n * n * n);
    return p;
}

SecondMomentReport second_moment_check(ProfileKind kind, const std::vector<std::size_t>& sweep, std::size_t trials,
                                       SeedSpec seed, std::size_t workers) {
    SecondMomentReport report;
    for (std::size_t n : sweep) {
        report.points.push_back(second_moment(make_profile(kind, n), trials, seed, workers));
        report.max_ratio = std::max(report.max_ratio, report.points.back().ratio);
    }
    return report;
}

GapReport jensen_gap(const DenseMatrix& b, std::size_t trials, SeedSpec seed, std::size_t workers) {
    if (!b.is_square()) throw DimensionError("jensen_gap: matrix must be square");
    if (b.rows() > kGapDimensionCap) {
        throw CapacityError("jensen_gap: n = " + std::to_string(b.rows()) + " exceeds cap " +
                            std::to_string(kGapDimensionCap));
    }
    const SignedLogValue per = per_ryser(b);
    if (per.sign <= 0) throw DomainError("jensen_gap: per(B) must be positive");
    const EstimatorRun run = run_estimator(b, trials, seed, workers);
    const EstimatorStats stats = summarize(run);

    GapReport r;
    r.n = b.rows();
    r.trials = trials;
    r.degenerate = run.degenerate;
    r.log_per = per.log_magnitude;
    r.mean_log_det2 = stats.mean_log_det2;
    r.std_log_det2 = stats.std_log_det2;
    r.gap = r.log_per - r.mean_log_det2;
    r.gap_per_n = r.gap / static_cast<double>(r.n);
    r.ci_halfwidth = 1.96 * stats.std_log_det2 / std::sqrt(static_cast<double>(stats.count));
    return r;
}

GapReport counterexample_gap(std::size_t n, double alpha, std::size_t trials, SeedSpec seed, std::size_t workers) {
    GapReport r = jensen_gap(counterexample_matrix(n, alpha), trials, seed, workers);
    r.alpha = alpha;
    return r;
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw DomainError("least_squares_slope: need >= 2 paired points");
    const double mx = mean_of(x);
    const double my = mean_of(y);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
    }
    if (sxx == 0.0) throw DomainError("least_squares_slope: x values are all equal");
    return sxy / sxx;
}

} // namespace permest
