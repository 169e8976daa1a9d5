#pragma once

#include "telewip/worlds.hpp"

#include "json.hpp"

#include <string>

namespace telewip {

inline constexpr int kMapSchemaVersion = 1;

nlohmann::json map_to_json(const MapSpec& map);

/// Throws std::runtime_error on schema or version mismatch.
MapSpec map_from_json(const nlohmann::json& j);

void save_map(const MapSpec& map, const std::string& path);
MapSpec load_map(const std::string& path);

}  // namespace telewip
