#include "permest/matrix_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace permest::io {

namespace {

double parse_double(std::string_view token, std::size_t line) {
    while (!token.empty() && (token.front() == ' ' || token.front() == '\t')) token.remove_prefix(1);
    while (!token.empty() && (token.back() == ' ' || token.back() == '\t' || token.back() == '\r'))
        token.remove_suffix(1);
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) {
        throw ParseError("CSV line " + std::to_string(line) + ": cannot parse '" + std::string(token) + "'");
    }
    if (!std::isfinite(value)) throw ParseError("CSV line " + std::to_string(line) + ": NaN/Inf not allowed");
    return value;
}

} // namespace

DenseMatrix read_matrix_csv(std::istream& in) {
    std::vector<double> data;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::size_t count = 0;
        std::string_view rest(line);
        while (true) {
            const auto comma = rest.find(',');
            data.push_back(parse_double(rest.substr(0, comma), line_no));
            ++count;
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (rows == 0) {
            cols = count;
        } else if (count != cols) {
            throw ParseError("CSV line " + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                             " columns, got " + std::to_string(count));
        }
        ++rows;
    }
    return DenseMatrix(rows, cols, std::move(data));
}

std::string format_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, ptr);
}

void write_matrix_csv(std::ostream& out, const DenseMatrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

DenseMatrix matrix_from_json(const nlohmann::json& j) {
    try {
        const auto rows = j.at("rows").get<std::size_t>();
        const auto cols = j.at("cols").get<std::size_t>();
        std::vector<double> data;
        for (const auto& v : j.at("data")) {
            if (!v.is_number()) throw ParseError("matrix JSON: non-numeric entry");
            data.push_back(v.get<double>());
        }
        return DenseMatrix(rows, cols, std::move(data));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("matrix JSON: ") + e.what());
    } catch (const DomainError& e) {
        throw ParseError(std::string("matrix JSON: ") + e.what());
    }
}

nlohmann::json matrix_to_json(const DenseMatrix& m) {
    return {{"rows", m.rows()},
            {"cols", m.cols()},
            {"data", std::vector<double>(m.data().begin(), m.data().end())}};
}

DenseMatrix load_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open matrix file '" + path + "'");
    if (path.ends_with(".json")) {
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("matrix JSON '" + path + "': " + e.what());
        }
        return matrix_from_json(j);
    }
    try {
        return read_matrix_csv(in);
    } catch (const DomainError& e) {
        throw ParseError(std::string("matrix CSV: ") + e.what());
    }
}

void save_matrix(const std::string& path, const DenseMatrix& m) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write matrix file '" + path + "'");
    if (path.ends_with(".json")) {
        out << matrix_to_json(m).dump() << '\n';
    } else {
        write_matrix_csv(out, m);
    }
}

} // namespace permest::io
