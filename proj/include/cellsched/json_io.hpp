#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>

#include "cellsched/env.hpp"

namespace cellsched {

nlohmann::json env_config_to_json(const EnvConfig& cfg);
// Strict: unknown keys raise ConfigError naming the path.
EnvConfig env_config_from_json(const nlohmann::json& j,
                               const std::string& path_prefix = "env");

// Canonical single-line serialization used in file headers and hashes.
std::string to_canonical_string(const nlohmann::json& j);

}  // namespace cellsched
