#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "permest/core.hpp"

namespace permest::io {

struct ParseError : Error { using Error::Error; };

// CSV: one row per line, comma-separated decimal floats. Blank lines ignored.
DenseMatrix read_matrix_csv(std::istream& in);
void write_matrix_csv(std::ostream& out, const DenseMatrix& m);

// JSON envelope {"rows": r, "cols": c, "data": [row-major entries]}.
DenseMatrix matrix_from_json(const nlohmann::json& j);
nlohmann::json matrix_to_json(const DenseMatrix& m);

// Dispatches on extension: ".json" uses the envelope, anything else CSV.
DenseMatrix load_matrix(const std::string& path);
void save_matrix(const std::string& path, const DenseMatrix& m);

// Shortest decimal form that parses back to the same double.
std::string format_double(double x);

} // namespace permest::io
