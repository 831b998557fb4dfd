#pragma once

#include <filesystem>
#include <string>

#include "wakd/pipeline.hpp"

namespace wakd {

// JSON experiment configuration. Every field is optional and falls back to
// the built-in default; unknown keys are rejected naming the offending key.
// Malformed JSON raises ConfigError with line/column context.
ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Canonical (alphabetically keyed, 2-space indented) JSON form of a config;
// parsing the output reproduces the same config and the same canonical text.
std::string canonical_config_json(const ExperimentConfig& config);

} // namespace wakd
