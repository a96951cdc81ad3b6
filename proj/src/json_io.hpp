#pragma once

// Private JSON helpers shared by the stats, config and design file formats.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "statsel/scenario.hpp"

namespace statsel::detail {

using nlohmann::json;

/// Row-major array of [re, im] pairs plus explicit shape.
json complex_matrix_to_json(const CMatrix& m);
CMatrix complex_matrix_from_json(const json& j, const char* what);

/// Row-major array of reals plus explicit shape.
json real_matrix_to_json(const RMatrix& m);
RMatrix real_matrix_from_json(const json& j, const char* what);

/// Linear-unit encoding used when a config is embedded in another file.
json config_to_json(const SystemConfig& config);

/// Accepts linear keys (noise_power, power_budgets, path_gains) or their
/// logarithmic variants (noise_power_dbm, power_budgets_dbm, path_gains_db).
/// Scalars broadcast to all users. Validates the result.
SystemConfig config_from_json(const json& j);

/// Parses text, converting parse errors to IoError with a line number.
json parse_json_text(const std::string& text, const std::string& source);
json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace statsel::detail
