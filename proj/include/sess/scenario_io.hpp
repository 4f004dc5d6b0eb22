// Scenario file format: one JSON document mirroring ScenarioConfig field
// names. See docs/scenario-format.md for the schema.
#pragma once

#include <string>

#include "sess/model.hpp"

namespace sess {

/// Parses a scenario document. Throws std::runtime_error with a field path
/// on malformed input. Does not validate invariants; see validate_scenario.
ScenarioConfig parse_scenario(const std::string& json_text);

/// Reads and parses a scenario file. Throws std::runtime_error if unreadable.
ScenarioConfig load_scenario(const std::string& path);

/// Serializes with stable key order and 2-space indentation, so identical
/// configs produce byte-identical files.
std::string scenario_to_json(const ScenarioConfig& cfg);

void save_scenario(const ScenarioConfig& cfg, const std::string& path);

} // namespace sess
