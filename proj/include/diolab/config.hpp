#pragma once

#include <string>

#include <json.hpp>

#include "diolab/experiment.hpp"

namespace diolab {

// Experiment config plus the I/O fields that do not live on ExperimentConfig.
struct ParsedConfig {
    ExperimentConfig experiment;
    std::string output_path = "results";
    nlohmann::json echo;  // every defaulted field filled in explicitly
};

// Schema-validated parse; unknown keys and out-of-range values are rejected
// with the offending key path in the ConfigError message.
ParsedConfig parse_config_text(const std::string& text);
ParsedConfig parse_config_file(const std::string& path);

// Applies a `--set key=value` override to a raw JSON document; dotted keys
// descend into objects, values are parsed as JSON with a string fallback.
void apply_override(nlohmann::json& doc, const std::string& key_eq_value);

nlohmann::json record_to_json(const RunRecord& record);
RunRecord record_from_json(const nlohmann::json& j);

// Writes <path>.json (full record) and <path>.csv (RFC-4180 plot table with
// header scale,statistic,value,stderr,samples); floats printed with 17
// significant digits.
void write_results(const RunRecord& record, const std::string& path_stem);

// The CSV table alone, as a string (used for golden-file comparison).
std::string results_csv(const RunRecord& record);

}  // namespace diolab
