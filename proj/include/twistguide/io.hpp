#pragma once

#include "twistguide/coupling.hpp"
#include "twistguide/effective.hpp"
#include "twistguide/geometry.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace twg {

using json = nlohmann::json;

inline constexpr const char* config_schema = "twistguide-config/1";
inline constexpr const char* report_schema = "twistguide-report/1";
inline constexpr const char* tool_version = "0.3.0";
inline constexpr const char* output_dir_env = "TWG_OUTPUT_DIR";

/// Decimal text with 17 significant digits ("nan", "inf", "-inf" for non-finite values).
std::string format_number(double x);

/// JSON text with every floating-point number at 17 significant digits.
/// Object keys are emitted in sorted order.
std::string dump_json(const json& j, int indent = 2);

/// FNV-1a 64-bit hash of the canonical (compact, sorted-key) dump.
std::string config_hash(const json& j);

/// Reads and parses a JSON file; ConfigError on I/O or syntax errors.
json read_json_file(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Whitespace-separated columns, one row per line, optional "# " header.
std::string format_columns(const std::vector<std::string>& header, const std::vector<std::vector<double>>& columns);

// Config fragments. All parsers throw ConfigError naming the offending path.

/// {"shape": "rectangle", "width", "height"} | {"shape": "ellipse", "a", "b"} |
/// {"shape": "polygon", "vertices": [[x, y], ...]}, optional "offset": [x, y].
CrossSectionShape parse_shape(const json& j, const std::string& where);

/// {"mean", "cos": [...], "sin": [...]} or {"coefficients": [[re, im], ...]} (m = -M..M).
TwistProfile parse_twist(const json& j, const std::string& where);

/// {"family": "power", "c", "alpha"} and the other families of DecayProfile.
DecayProfile parse_decay(const json& j, const std::string& where);

/// Synthetic coupling function {"mean", "cos": [...], "sin": [...], "samples": n}.
CouplingFunction parse_periodic(const json& j, const std::string& where);

json to_json(const CrossSectionShape& shape);
json to_json(const TwistProfile& beta);
json to_json(const DecayProfile& eps);

// Small typed accessors used by the config readers.
double get_number(const json& j, const std::string& key, const std::string& where);
double get_number(const json& j, const std::string& key, double fallback, const std::string& where);
int get_int(const json& j, const std::string& key, int fallback, const std::string& where);
bool get_bool(const json& j, const std::string& key, bool fallback, const std::string& where);
std::string get_string(const json& j, const std::string& key, const std::string& fallback, const std::string& where);
std::vector<double> get_numbers(const json& j, const std::string& key, const std::string& where);
/// ConfigError when `j` has a key outside `allowed`.
void check_keys(const json& j, const std::vector<std::string>& allowed, const std::string& where);

} // namespace twg
