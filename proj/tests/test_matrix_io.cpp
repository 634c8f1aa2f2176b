#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "permest/matrix_io.hpp"

using namespace permest;

TEST(MatrixCsv, ParsesRowsAndSkipsBlankLines) {
    std::istringstream in("1, 2.5,3\n\n-4,5e-1,6\r\n");
    const auto m = io::read_matrix_csv(in);
    EXPECT_EQ(m, DenseMatrix::from_rows({{1, 2.5, 3}, {-4, 0.5, 6}}));
}

TEST(MatrixCsv, RejectsNanInfAndRagged) {
    std::istringstream nan_in("1,nan\n");
    EXPECT_THROW(io::read_matrix_csv(nan_in), io::ParseError);
    std::istringstream inf_in("inf\n");
    EXPECT_THROW(io::read_matrix_csv(inf_in), io::ParseError);
    std::istringstream ragged("1,2\n3\n");
    EXPECT_THROW(io::read_matrix_csv(ragged), io::ParseError);
    std::istringstream junk("1,abc\n");
    EXPECT_THROW(io::read_matrix_csv(junk), io::ParseError);
}

TEST(MatrixJson, RejectsBadEnvelope) {
    EXPECT_THROW(io::matrix_from_json(nlohmann::json{{"rows", 2}, {"cols", 2}, {"data", {1, 2, 3}}}), DimensionError);
    EXPECT_THROW(io::matrix_from_json(nlohmann::json{{"rows", 1}, {"cols", 1}, {"data", {"x"}}}), io::ParseError);
    EXPECT_THROW(io::matrix_from_json(nlohmann::json{{"rows", 1}}), io::ParseError);
    // NaN is not representable in JSON text; the parser itself rejects it.
    EXPECT_THROW((void)nlohmann::json::parse(R"({"rows":1,"cols":1,"data":[NaN]})"), nlohmann::json::exception);
}

TEST(MatrixIo, FilesRoundTripBitExact) {
    std::mt19937_64 gen(11);
    std::normal_distribution<double> dist;
    std::vector<double> data(12);
    for (double& x : data) x = dist(gen) * 1e-3;
    const DenseMatrix m(3, 4, data);
    const auto dir = std::filesystem::temp_directory_path() / "permest_io_test";
    std::filesystem::create_directories(dir);
    for (const char* name : {"m.csv", "m.json"}) {
        const auto path = (dir / name).string();
        io::save_matrix(path, m);
        EXPECT_EQ(io::load_matrix(path), m) << name;
    }
}

TEST(FormatDouble, ShortestRoundTrip) {
    EXPECT_EQ(io::format_double(0.1), "0.1");
    EXPECT_EQ(io::format_double(24), "24");
    const double x = 1.0 / 3.0;
    EXPECT_EQ(std::stod(io::format_double(x)), x);
}
