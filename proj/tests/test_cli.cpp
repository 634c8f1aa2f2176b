#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "permest/cli.hpp"
#include "permest/exact.hpp"
#include "permest/graph.hpp"
#include "permest/matrix_io.hpp"

using namespace permest;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
    json report() const { return json::parse(out); }
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::dispatch(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("permest_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string file(const std::string& name) const { return (dir_ / name).string(); }
    std::string write_matrix(const std::string& name, const DenseMatrix& m) const {
        io::save_matrix(file(name), m);
        return file(name);
    }

    fs::path dir_;
};

DenseMatrix random_positive(std::size_t n, std::uint64_t seed, double lo, double hi) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    DenseMatrix a(n, n);
    for (double& x : a.data()) x = u(gen);
    return a;
}

} // namespace

TEST_F(CliTest, ExactRyserOnesFour) {
    const auto r = run({"exact", "--method", "ryser", "--matrix", write_matrix("ones4.csv", DenseMatrix::ones(4, 4))});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = r.report();
    EXPECT_NEAR(j["value_if_representable"].get<double>(), 24.0, 1e-9);
    EXPECT_EQ(j["sign"], 1);
    EXPECT_NEAR(j["log10_magnitude"].get<double>(), std::log10(24.0), 1e-12);
}

TEST_F(CliTest, CheckGraphCompleteVerified) {
    {
        std::ofstream g(file("complete8.json"));
        g << graph_to_json(BipartiteGraph::complete(8, 8)).dump();
    }
    const auto r = run({"check-graph", "--graph", file("complete8.json"), "--delta", "1", "--kappa", "0.4", "--mode",
                        "exhaustive"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.report()["verdict"], "Verified");
}

TEST_F(CliTest, CheckGraphRefutedExitsTwo) {
    {
        std::ofstream g(file("pm.json"));
        g << graph_to_json(BipartiteGraph::perfect_matching(8)).dump();
    }
    const auto r =
        run({"check-graph", "--graph", file("pm.json"), "--delta", "0.5", "--kappa", "0.2", "--mode", "exhaustive"});
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(r.report()["verdict"], "Refuted");
}

TEST_F(CliTest, PipelineEqualsComposition) {
    const auto a = write_matrix("a.csv", random_positive(6, 1, 0.8, 1.0));
    const auto p = run({"pipeline", "--matrix", a, "--r", "0.5", "--delta", "0.3", "--kappa", "0.1", "--samples",
                        "1000", "--seed", "7"});
    ASSERT_EQ(p.code, 0) << p.err;
    const auto pj = p.report();

    const auto s = run({"scale", "--matrix", a, "--b-out", file("b.csv")});
    ASSERT_EQ(s.code, 0) << s.err;
    const auto sj = s.report();
    const auto c = run({"check-graph", "--matrix", file("b.csv"), "--r", "0.5", "--delta", "0.3", "--kappa", "0.1",
                        "--mode", "exhaustive"});
    ASSERT_EQ(c.code, 0) << c.err;
    const auto e = run({"estimate", "--matrix", file("b.csv"), "--samples", "1000", "--seed", "7"});
    ASSERT_EQ(e.code, 0) << e.err;
    const auto ej = e.report();

    EXPECT_EQ(pj["scaling"]["d1"], sj["d1"]);
    EXPECT_EQ(pj["scaling"]["log_per_offset"], sj["log_per_offset"]);
    EXPECT_EQ(pj["connectivity"]["verdict"], c.report()["verdict"]);
    EXPECT_EQ(pj["estimate"]["mean_log_det2"], ej["mean_log_det2"]);
    EXPECT_EQ(pj["estimate"]["log_per_estimate"], ej["log_per_estimate"]);
    EXPECT_EQ(pj["log_per_estimate"].get<double>(),
              ej["log_per_estimate"].get<double>() + sj["log_per_offset"].get<double>());
}

TEST_F(CliTest, PipelineCounterexampleShapeVerified) {
    const auto a = write_matrix("unit_diag.csv", counterexample_matrix(8, 0.1));
    const auto r = run({"pipeline", "--matrix", a, "--r", "0.05", "--delta", "0.3", "--kappa", "0.1", "--samples",
                        "2000", "--seed", "3", "--exact"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = r.report();
    EXPECT_EQ(j["connectivity"]["verdict"], "Verified");
    EXPECT_EQ(j["graph"]["edges"], 64);
    EXPECT_TRUE(j["log_per_exact"].is_number());
    EXPECT_TRUE(j["log_per_estimate"].is_number());
}

TEST_F(CliTest, PipelineZeroRowStructuralError) {
    const auto a = write_matrix("z.csv", DenseMatrix::from_rows({{1, 1}, {0, 0}}));
    const auto r =
        run({"pipeline", "--matrix", a, "--r", "0.5", "--delta", "0.3", "--kappa", "0.1", "--samples", "10", "--seed",
             "1"});
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(r.report()["error"]["stage"], "scale");
}

TEST_F(CliTest, DoublyStochasticMatchesDirectEstimate) {
    const auto uniform = write_matrix("u.csv", DenseMatrix(5, 5, 0.2));
    const auto p = run({"pipeline", "--matrix", uniform, "--r", "0.5", "--delta", "0.3", "--kappa", "0.1",
                        "--samples", "500", "--seed", "2"});
    ASSERT_EQ(p.code, 0) << p.err;
    const auto e = run({"estimate", "--matrix", uniform, "--samples", "500", "--seed", "2"});
    const auto pj = p.report();
    EXPECT_LE(pj["scaling"]["iters"].get<int>(), 1);
    EXPECT_NEAR(pj["log_per_estimate"].get<double>(), e.report()["log_per_estimate"].get<double>(), 1e-12);
}

TEST_F(CliTest, UsageErrors) {
    EXPECT_EQ(run({"frobnicate"}).code, 1);
    EXPECT_EQ(run({}).code, 1);
    const auto a = write_matrix("i.csv", DenseMatrix::identity(3));
    EXPECT_EQ(run({"estimate", "--matrix", a, "--samples", "10"}).code, 1); // no seed
    EXPECT_EQ(run({"exact", "--method", "bogus", "--matrix", a}).code, 1);
    EXPECT_EQ(run({"exact", "--matrix", file("missing.csv")}).code, 1);
    EXPECT_EQ(run({"spectrum", "intermediate-tail", "--profile", "complete:16", "--codim", "2", "--grid", "0.1",
                   "--trials", "1000", "--seed", "1"})
                  .code,
              1);
}

TEST_F(CliTest, ExactCapacityError) {
    const auto a = write_matrix("big.csv", DenseMatrix::identity(11));
    EXPECT_EQ(run({"exact", "--method", "naive", "--matrix", a}).code, 1);
}

TEST_F(CliTest, EstimateZeroMatrixInsufficientSamples) {
    const auto a = write_matrix("zero.csv", DenseMatrix(3, 3));
    EXPECT_EQ(run({"estimate", "--matrix", a, "--samples", "5", "--seed", "1"}).code, 3);
}

TEST_F(CliTest, ReportRoundTrips) {
    const auto r = run({"spectrum", "counterexample", "--n", "6", "--trials", "200", "--seed", "4", "--control"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = r.report();
    EXPECT_EQ(j.dump(2) + "\n", r.out);
    EXPECT_EQ(json::parse(j.dump()), j);
}

TEST_F(CliTest, ManifestRerunIsByteIdentical) {
    const auto a = write_matrix("a.csv", random_positive(5, 2, 0.1, 1.0));
    const std::vector<std::vector<std::string>> commands{
        {"estimate", "--matrix", a, "--samples", "300", "--seed", "5", "--record-samples"},
        {"spectrum", "tail", "--profile", "complete:8", "--grid", "0.05,0.1,0.2", "--trials", "1000", "--seed", "6",
         "--csv", file("tail.csv")},
        {"spectrum", "concentration", "--n-sweep", "4,8", "--trials", "100", "--seed", "7"},
        {"pipeline", "--matrix", a, "--r", "0.3", "--delta", "0.3", "--kappa", "0.1", "--samples", "200", "--seed",
         "8"},
    };
    for (std::size_t k = 0; k < commands.size(); ++k) {
        const fs::path out = dir_ / ("run" + std::to_string(k));
        auto args = commands[k];
        args.push_back("--out");
        args.push_back(out.string());
        const auto first = run(args);
        ASSERT_EQ(first.code, 0) << k << first.err << first.out;

        fs::path manifest;
        std::map<std::string, std::string> before;
        for (const auto& entry : fs::directory_iterator(out)) {
            const auto name = entry.path().filename().string();
            if (name.ends_with(".manifest.json")) manifest = entry.path();
            else before[name] = slurp(entry.path());
        }
        ASSERT_FALSE(manifest.empty());
        const auto recorded = json::parse(slurp(manifest));
        EXPECT_EQ(recorded["exit_code"], 0);
        EXPECT_FALSE(recorded["artifacts"].empty());

        const auto again = run({"rerun", "--manifest", manifest.string()});
        ASSERT_EQ(again.code, 0) << again.err;
        EXPECT_EQ(again.out, first.out);
        for (const auto& [name, bytes] : before) EXPECT_EQ(slurp(out / name), bytes) << name;
    }
}

TEST_F(CliTest, WorkersDoNotChangeSamples) {
    const auto a = write_matrix("a.csv", random_positive(7, 3, 0.0, 1.0));
    const auto serial = run({"estimate", "--matrix", a, "--samples", "400", "--seed", "9", "--record-samples"});
    const auto parallel =
        run({"estimate", "--matrix", a, "--samples", "400", "--seed", "9", "--record-samples", "--workers", "4"});
    ASSERT_EQ(serial.code, 0);
    ASSERT_EQ(parallel.code, 0);
    EXPECT_EQ(serial.report()["samples"], parallel.report()["samples"]);
    EXPECT_EQ(serial.out, parallel.out);
}

TEST_F(CliTest, OutDirFromEnvironment) {
    const auto a = write_matrix("i.csv", DenseMatrix::identity(3));
    const fs::path out = dir_ / "envout";
    ::setenv(cli::kOutDirEnv, out.c_str(), 1);
    const auto r = run({"exact", "--matrix", a});
    ::unsetenv(cli::kOutDirEnv);
    ASSERT_EQ(r.code, 0);
    EXPECT_TRUE(fs::exists(out / "exact.json"));
    EXPECT_TRUE(fs::exists(out / "exact.manifest.json"));
}

TEST_F(CliTest, BinaryExitCodes) {
    const char* exe = std::getenv("PERMEST_CLI");
    if (!exe) GTEST_SKIP() << "PERMEST_CLI not set";
    const auto a = write_matrix("ones4.csv", DenseMatrix::ones(4, 4));
    const std::string quiet = " > /dev/null 2>&1";
    EXPECT_EQ(WEXITSTATUS(std::system((std::string(exe) + " exact --matrix " + a + quiet).c_str())), 0);
    EXPECT_EQ(WEXITSTATUS(std::system((std::string(exe) + " nonsense" + quiet).c_str())), 1);
}
