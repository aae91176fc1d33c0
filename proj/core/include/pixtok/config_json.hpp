#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "pixtok/config.hpp"

namespace pixtok {

using Json = nlohmann::ordered_json;

// Strict conversions: unknown keys and wrong types raise ConfigError naming
// the offending key path. Missing keys keep their defaults.
Json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const Json& j);
Json to_json(const MaeConfig& cfg);
MaeConfig mae_config_from_json(const Json& j);
Json to_json(const PermutationMap& perm);
PermutationMap permutation_from_json(const Json& j);
Json to_json(const ExperimentConfig& cfg);

// Relative paths inside the document resolve against `base_dir`.
ExperimentConfig experiment_config_from_json(const Json& j,
                                             const std::filesystem::path& base_dir = {});

// Reads, parses, resolves paths against the file's directory and validates.
// A missing or unreadable file is a ConfigError naming the path.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

Json parse_json_text(const std::string& text, const std::string& origin);

}  // namespace pixtok
