#include "permest/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "permest/estimator.hpp"
#include "permest/exact.hpp"
#include "permest/graph.hpp"
#include "permest/matrix_io.hpp"
#include "permest/scaling.hpp"
#include "permest/spectrum.hpp"

namespace permest::cli {

using nlohmann::json;

namespace {

// Common flags shared by the subcommands.
struct Options {
    // matrix/graph inputs
    std::string matrix;
    std::string graph;
    std::string profile;
    std::string method = "ryser";
    // stochastic settings
    std::optional<std::uint64_t> seed;
    std::uint64_t stream = 0;
    std::size_t samples = 0;
    std::size_t trials = 0;
    std::size_t workers = 1;
    bool exact = false;
    bool record_samples = false;
    // graph check
    double delta = 0.0;
    double kappa = 0.0;
    std::optional<double> r;
    std::string mode = "exhaustive";
    std::size_t cap = 22;
    bool no_prune = false;
    // scaling
    double tol = kDefaultScalingTolerance;
    std::size_t max_iter = kDefaultScalingIterations;
    std::string b_out;
    // spectrum
    std::size_t codim = 0;
    std::vector<double> grid;
    std::vector<std::size_t> sweep;
    std::string profile_kind = "complete";
    std::optional<std::size_t> depth;
    double c0 = kDefaultTruncationC0;
    std::size_t n = 0;
    double alpha = 0.1;
    bool control = false;
    std::size_t bootstrap = 200;
    // output
    std::string out_dir;
    std::string csv;
    std::string manifest;
};

std::string timestamp_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

SeedSpec require_seed(const Options& o) {
    if (!o.seed) throw CLI::ValidationError("--seed", "a root seed is required for stochastic subcommands");
    return SeedSpec{*o.seed, o.stream};
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json signed_log_json(const SignedLogValue& v) {
    json j{{"sign", v.sign}};
    j["log_magnitude"] = v.sign == 0 ? json(nullptr) : number_or_null(v.log_magnitude);
    j["log10_magnitude"] = v.sign == 0 ? json(nullptr) : number_or_null(v.log10_magnitude());
    const double value = v.to_double();
    j["value_if_representable"] = number_or_null(value);
    return j;
}

json interval_json(const Interval& i) { return json::array({i.low, i.high}); }

json quantiles_json(const DeviationQuantiles& q) { return {{"levels", q.levels}, {"values", q.values}}; }

// Accepts a matrix file or one of the builtin "complete:N" / "identity:N".
VarianceProfile load_profile(const std::string& spec) {
    const auto colon = spec.find(':');
    if (colon != std::string::npos && !std::filesystem::exists(spec)) {
        const std::string kind = spec.substr(0, colon);
        const auto n = static_cast<std::size_t>(std::stoul(spec.substr(colon + 1)));
        return make_profile(parse_profile_kind(kind), n);
    }
    return VarianceProfile::from_matrix(io::load_matrix(spec));
}

// ---------------------------------------------------------------- commands

json cmd_exact(const Options& o, int& code) {
    const DenseMatrix a = io::load_matrix(o.matrix);
    SignedLogValue v;
    if (o.method == "naive") {
        v = per_naive(a);
    } else if (o.method == "ryser") {
        v = per_ryser(a);
    } else {
        throw CLI::ValidationError("--method", "expected naive|ryser");
    }
    code = kSuccess;
    json j = signed_log_json(v);
    j["config"] = {{"command", "exact"}, {"method", o.method}, {"matrix", o.matrix}, {"n", a.rows()}};
    return j;
}

json estimate_json(const DenseMatrix& a, std::size_t samples, SeedSpec seed, std::size_t workers, bool with_exact,
                   bool record) {
    const EstimatorRun run = run_estimator(a, samples, seed, workers);
    const EstimatorStats stats = summarize(run);
    json j{{"mean_log_det2", stats.mean_log_det2},
           {"std_log_det2", stats.std_log_det2},
           {"log_per_estimate", number_or_null(stats.per_estimate.log_magnitude)},
           {"log_standard_error", number_or_null(stats.log_standard_error)},
           {"n_samples", stats.count},
           {"n_degenerate", run.degenerate},
           {"profile_fingerprint", run.profile_fingerprint}};
    if (with_exact) {
        const auto per = per_ryser(a);
        j["log_per_exact"] = per.sign > 0 ? json(per.log_magnitude) : json(nullptr);
    }
    if (record) j["samples"] = run.samples;
    return j;
}

json cmd_estimate(const Options& o, int& code) {
    const DenseMatrix a = io::load_matrix(o.matrix);
    const SeedSpec seed = require_seed(o);
    json j = estimate_json(a, o.samples, seed, o.workers, o.exact, o.record_samples);
    j["config"] = {{"command", "estimate"}, {"matrix", o.matrix},   {"samples", o.samples},
                   {"seed", seed.root},     {"stream", seed.stream}, {"exact", o.exact}};
    code = kSuccess;
    return j;
}

BipartiteGraph graph_input(const Options& o) {
    if (!o.graph.empty()) return load_graph(o.graph);
    if (o.matrix.empty()) throw CLI::ValidationError("check-graph", "one of --graph or --matrix is required");
    const DenseMatrix a = io::load_matrix(o.matrix);
    return o.r ? graph_from_threshold(a, *o.r) : graph_from_matrix(a);
}

ConnectivityReport run_check(const BipartiteGraph& g, const ConnectivityParams& p, const std::string& mode,
                             const Options& o) {
    if (mode == "exhaustive") return check_broadly_connected(g, p, Exhaustive{o.cap, !o.no_prune});
    if (mode == "randomized") {
        if (o.trials == 0) throw CLI::ValidationError("--trials", "randomized mode needs --trials > 0");
        return check_broadly_connected(g, p, Randomized{o.trials, require_seed(o)});
    }
    throw CLI::ValidationError("--mode", "expected exhaustive|randomized");
}

json cmd_check_graph(const Options& o, int& code) {
    const BipartiteGraph g = graph_input(o);
    const ConnectivityParams params(o.delta, o.kappa);
    const ConnectivityReport report = run_check(g, params, o.mode, o);
    json j = report_to_json(report);
    j["config"] = {{"command", "check-graph"}, {"delta", o.delta}, {"kappa", o.kappa}, {"mode", o.mode},
                   {"m", g.left_size()},       {"n", g.right_size()}, {"edges", g.edge_count()}};
    if (o.r) j["config"]["r"] = *o.r;
    if (o.mode == "randomized") {
        j["config"]["trials"] = o.trials;
        j["config"]["seed"] = *o.seed;
    }
    code = report.verdict == Verdict::Refuted ? kRefuted : kSuccess;
    return j;
}

json scaling_json(const ScalingResult& r) {
    return {{"d1", r.d1},
            {"d2", r.d2},
            {"row_dev", r.row_deviation},
            {"col_dev", r.col_deviation},
            {"iters", r.iterations},
            {"approximately_doubly_stochastic", r.approximately_doubly_stochastic()},
            {"log_per_offset", transfer_log_per(r)}};
}

std::string default_artifact(const Options& o, const std::string& name) {
    if (o.out_dir.empty()) return {};
    return (std::filesystem::path(o.out_dir) / name).string();
}

json cmd_scale(const Options& o, int& code) {
    const DenseMatrix a = io::load_matrix(o.matrix);
    const ScalingResult r = sinkhorn_scale(a, o.tol, o.max_iter);
    json j = scaling_json(r);
    const std::string b_path = !o.b_out.empty() ? o.b_out : default_artifact(o, "b.csv");
    if (!b_path.empty()) {
        io::save_matrix(b_path, r.b);
        j["b_file"] = b_path;
    } else {
        j["b_file"] = nullptr;
    }
    j["config"] = {{"command", "scale"}, {"matrix", o.matrix}, {"tol", o.tol}, {"max_iter", o.max_iter}};
    code = kSuccess;
    return j;
}

json tail_json(const TailCurve& c, bool record) {
    json points = json::array();
    for (const auto& p : c.points) {
        points.push_back({{"t", p.t}, {"hits", p.hits}, {"frequency", p.frequency}, {"ci95", interval_json(p.ci)}});
    }
    json j{{"rows", c.rows}, {"cols", c.cols}, {"trials", c.trials}, {"points", points},
           {"nondecreasing", c.nondecreasing()}, {"consecutive_ratios_30", c.consecutive_ratios(30)}};
    j["slope"] = c.slope ? json(*c.slope) : json(nullptr);
    j["slope_ci95"] = c.slope_ci ? interval_json(*c.slope_ci) : json(nullptr);
    if (record) j["statistic"] = c.statistic;
    return j;
}

void write_tail_csv(const std::string& path, const TailCurve& c) {
    std::ofstream out(path);
    out << "t,hits,frequency,ci_low,ci_high\n";
    for (const auto& p : c.points) {
        out << io::format_double(p.t) << ',' << p.hits << ',' << io::format_double(p.frequency) << ','
            << io::format_double(p.ci.low) << ',' << io::format_double(p.ci.high) << '\n';
    }
}

json cmd_tail(const Options& o, bool intermediate, int& code, std::vector<std::string>& artifacts) {
    VarianceProfile full = load_profile(o.profile);
    if (intermediate && o.codim < 4) throw CLI::ValidationError("--codim", "intermediate-tail needs --codim >= 4");
    if (o.codim >= full.cols()) throw CLI::ValidationError("--codim", "codimension must be below the column count");
    VarianceProfile profile = o.codim == 0 ? full
                                           : VarianceProfile(full.matrix().leading_columns(full.cols() - o.codim),
                                                             full.floor());
    TailExperimentConfig config{profile, std::nullopt, o.grid, o.trials, require_seed(o), o.workers, o.bootstrap};
    const TailCurve curve = o.codim == 0 ? smallest_sv_tail(config) : intermediate_sv_tail(config);
    json j = tail_json(curve, o.record_samples);
    j["config"] = {{"command", intermediate ? "spectrum intermediate-tail" : "spectrum tail"},
                   {"profile", o.profile},
                   {"codim", o.codim},
                   {"grid", o.grid},
                   {"trials", o.trials},
                   {"seed", *o.seed},
                   {"stream", o.stream},
                   {"bootstrap", o.bootstrap}};
    if (!o.csv.empty()) {
        write_tail_csv(o.csv, curve);
        artifacts.push_back(o.csv);
    }
    code = kSuccess;
    return j;
}

json cmd_concentration(const Options& o, int& code, std::vector<std::string>& artifacts) {
    ConcentrationConfig config;
    config.profile = parse_profile_kind(o.profile_kind);
    config.sweep = o.sweep;
    config.trials = o.trials;
    config.seed = require_seed(o);
    config.depth = o.depth;
    config.c0 = o.c0;
    config.workers = o.workers;
    const ConcentrationReport report = concentration_experiment(config);
    json points = json::array();
    for (const auto& p : report.points) {
        json pj{{"n", p.n},
                {"trials", p.trials},
                {"n_degenerate", p.degenerate},
                {"mean_log_det2", p.mean},
                {"std_log_det2", p.std},
                {"deviation_quantiles", quantiles_json(p.quantiles)},
                {"truncated_mean", p.truncated_mean},
                {"truncated_std", p.truncated_std},
                {"truncated_deviation_quantiles", quantiles_json(p.truncated_quantiles)},
                {"depth", p.depth},
                {"l_star", p.l_star},
                {"gap_bound", p.gap_bound},
                {"within_bound_fraction", p.within_bound_fraction},
                {"reference_scale", p.reference_scale}};
        if (o.record_samples) pj["log_det2"] = p.log_det2;
        points.push_back(pj);
    }
    json j{{"points", points}};
    j["std_slope"] = report.std_slope ? json(*report.std_slope) : json(nullptr);
    j["config"] = {{"command", "spectrum concentration"}, {"profile_kind", o.profile_kind}, {"n_sweep", o.sweep},
                   {"trials", o.trials}, {"seed", *o.seed}, {"c0", o.c0}};
    j["config"]["depth"] = o.depth ? json(*o.depth) : json(nullptr);
    if (!o.csv.empty()) {
        std::ofstream out(o.csv);
        out << "n,std_log_det2,truncated_std,within_bound_fraction\n";
        for (const auto& p : report.points) {
            out << p.n << ',' << io::format_double(p.std) << ',' << io::format_double(p.truncated_std) << ','
                << io::format_double(p.within_bound_fraction) << '\n';
        }
        artifacts.push_back(o.csv);
    }
    code = kSuccess;
    return j;
}

json gap_json(const GapReport& g) {
    return {{"n", g.n},
            {"alpha", g.alpha},
            {"trials", g.trials},
            {"n_degenerate", g.degenerate},
            {"log_per", g.log_per},
            {"mean_log_det2", g.mean_log_det2},
            {"std_log_det2", g.std_log_det2},
            {"gap", g.gap},
            {"gap_per_n", g.gap_per_n},
            {"ci95_halfwidth", g.ci_halfwidth}};
}

json cmd_counterexample(const Options& o, int& code) {
    const SeedSpec seed = require_seed(o);
    json j;
    j["counterexample"] = gap_json(counterexample_gap(o.n, o.alpha, o.trials, seed, o.workers));
    if (o.control) {
        const std::size_t n = o.n;
        j["control_uniform"] = gap_json(jensen_gap(DenseMatrix(n, n, 1.0 / static_cast<double>(n)), o.trials, seed, o.workers));
    }
    j["config"] = {{"command", "spectrum counterexample"}, {"n", o.n},       {"alpha", o.alpha},
                   {"trials", o.trials},                   {"seed", *o.seed}, {"control", o.control}};
    code = kSuccess;
    return j;
}

json cmd_second_moment(const Options& o, int& code) {
    const SeedSpec seed = require_seed(o);
    const auto report = second_moment_check(parse_profile_kind(o.profile_kind), o.sweep, o.trials, seed, o.workers);
    json points = json::array();
    for (const auto& p : report.points) {
        points.push_back({{"n", p.n},
                          {"trials", p.trials},
                          {"n_degenerate", p.degenerate},
                          {"mean_log2_det2", p.mean_square},
                          {"standard_error", p.standard_error},
                          {"ratio_n3", p.ratio}});
    }
    json j{{"points", points}, {"max_ratio", report.max_ratio}};
    j["config"] = {{"command", "spectrum second-moment"}, {"profile_kind", o.profile_kind}, {"n_sweep", o.sweep},
                   {"trials", o.trials}, {"seed", *o.seed}};
    code = kSuccess;
    return j;
}

// Scale, threshold graph, connectivity check, estimate on B, transfer to A.
json cmd_pipeline(const Options& o, int& code, std::vector<std::string>& artifacts) {
    json j;
    j["config"] = {{"command", "pipeline"}, {"matrix", o.matrix}, {"delta", o.delta},   {"kappa", o.kappa},
                   {"samples", o.samples},  {"tol", o.tol},       {"max_iter", o.max_iter}};
    j["config"]["r"] = o.r ? json(*o.r) : json(nullptr);
    j["config"]["seed"] = o.seed ? json(*o.seed) : json(nullptr);
    std::string stage = "input";
    try {
        const SeedSpec seed = require_seed(o);
        if (!o.r) throw CLI::ValidationError("--r", "pipeline needs --r");
        const DenseMatrix a = io::load_matrix(o.matrix);
        const ConnectivityParams params(o.delta, o.kappa);

        stage = "scale";
        const ScalingResult scaling = sinkhorn_scale(a, o.tol, o.max_iter);
        j["scaling"] = scaling_json(scaling);
        const std::string b_path = !o.b_out.empty() ? o.b_out : default_artifact(o, "b.csv");
        if (!b_path.empty()) {
            io::save_matrix(b_path, scaling.b);
            artifacts.push_back(b_path);
            j["scaling"]["b_file"] = b_path;
        }

        stage = "graph";
        const BipartiteGraph g = graph_from_threshold(scaling.b, *o.r);
        j["graph"] = {{"m", g.left_size()}, {"n", g.right_size()}, {"edges", g.edge_count()}};

        stage = "connectivity";
        const std::string mode = g.left_size() <= o.cap ? "exhaustive" : "randomized";
        Options check = o;
        if (mode == "randomized" && check.trials == 0) check.trials = 10000;
        const ConnectivityReport report = run_check(g, params, mode, check);
        j["connectivity"] = report_to_json(report);
        j["connectivity"]["mode"] = mode;

        stage = "estimate";
        json est = estimate_json(scaling.b, o.samples, seed, o.workers, o.exact, o.record_samples);
        const double offset = transfer_log_per(scaling);
        j["estimate"] = est;
        j["log_per_offset"] = offset;
        j["log_per_estimate"] =
            est["log_per_estimate"].is_null() ? json(nullptr) : json(est["log_per_estimate"].get<double>() + offset);
        if (o.exact) {
            const auto per = per_ryser(a);
            j["log_per_exact"] = per.sign > 0 ? json(per.log_magnitude) : json(nullptr);
        }
        code = report.verdict == Verdict::Refuted ? kRefuted : kSuccess;
    } catch (const ConvergenceError& e) {
        j["scaling"] = scaling_json(e.best_so_far);
        j["error"] = {{"stage", stage}, {"message", e.what()}};
        code = kRefuted;
    } catch (const StructuralError& e) {
        j["error"] = {{"stage", stage}, {"message", e.what()}};
        code = kRefuted;
    } catch (const NumericError& e) {
        j["error"] = {{"stage", stage}, {"message", e.what()}};
        code = kNumericError;
    } catch (const InsufficientSamples& e) {
        j["error"] = {{"stage", stage}, {"message", e.what()}};
        code = kNumericError;
    } catch (const CLI::Error&) {
        throw;
    } catch (const Error& e) {
        j["error"] = {{"stage", stage}, {"message", e.what()}};
        code = kUsageError;
    }
    return j;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << text;
}

int map_error(const std::exception& e, std::ostream& err) {
    err << "error: " << e.what() << '\n';
    if (dynamic_cast<const ConvergenceError*>(&e) || dynamic_cast<const StructuralError*>(&e)) return kRefuted;
    if (dynamic_cast<const NumericError*>(&e) || dynamic_cast<const InsufficientSamples*>(&e)) return kNumericError;
    return kUsageError;
}

} // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    if (const char* env = std::getenv(kOutDirEnv)) o.out_dir = env;

    CLI::App app{"Randomized permanent estimation and random-matrix experiments", "permest"};
    app.require_subcommand(1);
    app.set_version_flag("--version", PERMEST_VERSION);

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--out", o.out_dir, "Directory for report, manifest and artifacts");
        sub->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
    };
    auto add_seed = [&](CLI::App* sub) {
        sub->add_option("--seed", o.seed, "Root seed (required)");
        sub->add_option("--stream", o.stream, "Base stream index");
        sub->add_flag("--record-samples", o.record_samples, "Embed per-trial values in the report");
    };

    auto* exact = app.add_subcommand("exact", "Exact permanent");
    exact->add_option("--method", o.method, "naive|ryser")->check(CLI::IsMember({"naive", "ryser"}));
    exact->add_option("--matrix", o.matrix, "Matrix file (.csv or .json)")->required();
    add_common(exact);

    auto* estimate = app.add_subcommand("estimate", "Monte Carlo permanent estimate");
    estimate->add_option("--matrix", o.matrix)->required();
    estimate->add_option("--samples", o.samples)->required()->check(CLI::PositiveNumber);
    estimate->add_flag("--exact", o.exact, "Also compute the exact permanent (Ryser)");
    add_seed(estimate);
    add_common(estimate);

    auto* check = app.add_subcommand("check-graph", "Check (delta, kappa) broad connectedness");
    check->add_option("--graph", o.graph, "Graph JSON {m, n, edges}");
    check->add_option("--matrix", o.matrix, "Build the graph from a matrix support");
    check->add_option("--r", o.r, "With --matrix: edge iff b_ij >= r/n");
    check->add_option("--delta", o.delta)->required();
    check->add_option("--kappa", o.kappa)->required();
    check->add_option("--mode", o.mode)->check(CLI::IsMember({"exhaustive", "randomized"}));
    check->add_option("--trials", o.trials, "Random subsets (randomized mode)");
    check->add_option("--cap", o.cap, "Largest m for exhaustive mode");
    check->add_flag("--no-prune", o.no_prune, "Enumerate every subset size");
    check->add_option("--seed", o.seed);
    add_common(check);

    auto* scale = app.add_subcommand("scale", "Sinkhorn scaling to near doubly stochastic");
    scale->add_option("--matrix", o.matrix)->required();
    scale->add_option("--tol", o.tol);
    scale->add_option("--max-iter", o.max_iter);
    scale->add_option("--b-out", o.b_out, "Where to write the scaled matrix");
    add_common(scale);

    auto* spectrum = app.add_subcommand("spectrum", "Singular-value experiments");
    spectrum->require_subcommand(1);
    auto add_tail = [&](CLI::App* sub) {
        sub->add_option("--profile", o.profile, "Profile file or complete:N / identity:N")->required();
        sub->add_option("--codim", o.codim, "Drop this many trailing columns");
        sub->add_option("--grid", o.grid, "Thresholds t")->delimiter(',')->required();
        sub->add_option("--trials", o.trials)->required();
        sub->add_option("--bootstrap", o.bootstrap);
        sub->add_option("--csv", o.csv);
        add_seed(sub);
        add_common(sub);
    };
    auto* tail = spectrum->add_subcommand("tail", "Small-ball tail of s_n (or s_m with --codim)");
    add_tail(tail);
    auto* itail = spectrum->add_subcommand("intermediate-tail", "Small-ball tail of s_m, m = n - codim");
    add_tail(itail);

    auto* conc = spectrum->add_subcommand("concentration", "Spread of log det^2 across a dimension sweep");
    conc->add_option("--n-sweep", o.sweep)->delimiter(',')->required();
    conc->add_option("--profile-kind", o.profile_kind)->check(CLI::IsMember({"complete", "identity"}));
    conc->add_option("--trials", o.trials)->required();
    conc->add_option("--depth", o.depth, "Truncation depth k*");
    conc->add_option("--c0", o.c0, "Truncation floor constant");
    conc->add_option("--csv", o.csv);
    add_seed(conc);
    add_common(conc);

    auto* cex = spectrum->add_subcommand("counterexample", "Jensen gap for the unit-diagonal matrix");
    cex->add_option("--n", o.n)->required();
    cex->add_option("--alpha", o.alpha);
    cex->add_option("--trials", o.trials)->required();
    cex->add_flag("--control", o.control, "Also run the all-entries-equal control");
    add_seed(cex);
    add_common(cex);

    auto* second = spectrum->add_subcommand("second-moment", "E log^2 det^2 against n^3");
    second->add_option("--n-sweep", o.sweep)->delimiter(',')->required();
    second->add_option("--profile-kind", o.profile_kind)->check(CLI::IsMember({"complete", "identity"}));
    second->add_option("--trials", o.trials)->required();
    add_seed(second);
    add_common(second);

    auto* pipeline = app.add_subcommand("pipeline", "Scale, check connectivity, estimate");
    pipeline->add_option("--matrix", o.matrix)->required();
    pipeline->add_option("--r", o.r)->required();
    pipeline->add_option("--delta", o.delta)->required();
    pipeline->add_option("--kappa", o.kappa)->required();
    pipeline->add_option("--samples", o.samples)->required()->check(CLI::PositiveNumber);
    pipeline->add_option("--tol", o.tol);
    pipeline->add_option("--max-iter", o.max_iter);
    pipeline->add_option("--trials", o.trials, "Random subsets when the graph is too large for exhaustive mode");
    pipeline->add_option("--cap", o.cap);
    pipeline->add_option("--b-out", o.b_out);
    pipeline->add_flag("--exact", o.exact);
    add_seed(pipeline);
    add_common(pipeline);

    auto* rerun = app.add_subcommand("rerun", "Replay the command recorded in a manifest");
    rerun->add_option("--manifest", o.manifest)->required();

    std::vector<std::string> argv_store{"permest"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_store) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::CallForVersion&) {
        out << PERMEST_VERSION << '\n';
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n' << app.help();
        return kUsageError;
    }

    if (rerun->parsed()) {
        std::ifstream in(o.manifest);
        if (!in) {
            err << "error: cannot open manifest '" << o.manifest << "'\n";
            return kUsageError;
        }
        json m;
        try {
            in >> m;
            return dispatch(m.at("argv").get<std::vector<std::string>>(), out, err);
        } catch (const json::exception& e) {
            err << "error: bad manifest: " << e.what() << '\n';
            return kUsageError;
        }
    }

    const std::string started = timestamp_utc();
    if (!o.out_dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(o.out_dir, ec);
        if (ec) {
            err << "error: cannot create output directory '" << o.out_dir << "': " << ec.message() << '\n';
            return kUsageError;
        }
    }
    std::string command;
    std::vector<std::string> artifacts;
    int code = kSuccess;
    json report;
    try {
        if (exact->parsed()) {
            command = "exact";
            report = cmd_exact(o, code);
        } else if (estimate->parsed()) {
            command = "estimate";
            report = cmd_estimate(o, code);
        } else if (check->parsed()) {
            command = "check-graph";
            report = cmd_check_graph(o, code);
        } else if (scale->parsed()) {
            command = "scale";
            report = cmd_scale(o, code);
            if (report["b_file"].is_string()) artifacts.push_back(report["b_file"].get<std::string>());
        } else if (tail->parsed() || itail->parsed()) {
            command = tail->parsed() ? "spectrum-tail" : "spectrum-intermediate-tail";
            report = cmd_tail(o, itail->parsed(), code, artifacts);
        } else if (conc->parsed()) {
            command = "spectrum-concentration";
            report = cmd_concentration(o, code, artifacts);
        } else if (cex->parsed()) {
            command = "spectrum-counterexample";
            report = cmd_counterexample(o, code);
        } else if (second->parsed()) {
            command = "spectrum-second-moment";
            report = cmd_second_moment(o, code);
        } else if (pipeline->parsed()) {
            command = "pipeline";
            report = cmd_pipeline(o, code, artifacts);
        }
    } catch (const CLI::Error& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsageError;
    } catch (const ConvergenceError& e) {
        report = scaling_json(e.best_so_far);
        report["error"] = e.what();
        out << report.dump(2) << '\n';
        return map_error(e, err);
    } catch (const std::exception& e) {
        return map_error(e, err);
    }

    report["tool_version"] = PERMEST_VERSION;
    const std::string text = report.dump(2) + "\n";
    out << text;

    if (!o.out_dir.empty()) {
        const auto report_path = (std::filesystem::path(o.out_dir) / (command + ".json")).string();
        write_text(report_path, text);
        artifacts.insert(artifacts.begin(), report_path);
        json manifest{{"command", command},
                      {"argv", args},
                      {"parameters", report.value("config", json::object())},
                      {"root_seed", o.seed ? json(*o.seed) : json(nullptr)},
                      {"tool_version", PERMEST_VERSION},
                      {"started_at", started},
                      {"finished_at", timestamp_utc()},
                      {"exit_code", code},
                      {"artifacts", artifacts}};
        write_text((std::filesystem::path(o.out_dir) / (command + ".manifest.json")).string(), manifest.dump(2) + "\n");
    }
    return code;
}

} // namespace permest::cli
