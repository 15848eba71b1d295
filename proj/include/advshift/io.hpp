#pragma once

// Output formatting (shortest round-trip doubles, schema-tagged CSV and JSON)
// and the flat key = value config format.

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "advshift/experiments.hpp"

namespace advshift {

/// Shortest decimal that parses back to the same double; "nan", "inf", "-inf".
std::string format_double(double v);
/// Inverse of format_double. Throws std::invalid_argument on malformed text.
double parse_double(std::string_view text);

struct CsvTable {
    std::string schema;  ///< e.g. "advshift.trajectory/1"
    /// Extra "# key: value" lines after the schema line (version, seed, config echo).
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

/// First line "# schema: <schema>", then the meta lines, the column header and rows.
/// Throws std::runtime_error on I/O failure.
void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

/// Writes `doc` with "schema" as its first key.
void write_json(const std::filesystem::path& path, const std::string& schema, const nlohmann::ordered_json& doc);

struct ParsedConfig {
    ExperimentConfig base;
    /// sweep.<key> = v1, v2, ... axes in file order
    std::vector<std::pair<std::string, std::vector<std::string>>> axes;
};

/// Lines are `key = value`; `#` starts a comment. Unknown or repeated keys
/// throw ConfigError naming the key.
ParsedConfig parse_config(std::string_view text);
/// Throws ConfigError("config", ...) if the file cannot be read.
ParsedConfig load_config(const std::filesystem::path& path);
/// Applies one key to a config; throws ConfigError on unknown keys or bad values.
void apply_config_key(ExperimentConfig& cfg, const std::string& key, const std::string& value);
/// Cartesian product of the sweep axes over the base config (just the base if none).
std::vector<ExperimentConfig> expand_grid(const ParsedConfig& parsed);

const std::vector<std::string>& config_keys();
nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg);

}  // namespace advshift
