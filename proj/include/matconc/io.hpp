#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "matconc/coverage.hpp"
#include "matconc/power.hpp"
#include "matconc/symmat.hpp"

namespace matconc::io {

using Json = nlohmann::json;

/// Relative asymmetry above which a matrix literal is rejected.
inline constexpr double kAsymmetryTol = 1e-6;

/// Matrix literal: nested rows, {"diag": [...]}, or {"identity": d, "scale": s}.
SymMat parse_matrix(const Json& j, const std::string& where = "matrix");
Json matrix_to_json(const SymMat& m);

GeneratorPtr parse_generator(const Json& j);
McConfig parse_mc(const Json& j, McConfig base = {});
CoverageCase parse_case(const Json& j);
GammaSchedule parse_gamma_schedule(const Json& j);
PowerConfig parse_power_config(const Json& j);

/// Parse JSON text; errors become ConfigError.
Json parse_json(const std::string& text, const std::string& where);
std::string read_file(const std::string& path);
/// Write to a sibling temporary file and rename over the target.
void write_atomic(const std::string& path, const std::string& content);

/// Default seed: MATCONC_SEED when set and valid, otherwise the built-in constant.
std::uint64_t default_seed();

}  // namespace matconc::io
