#pragma once

#include <map>
#include <string>

#include "fslsim/actors.hpp"

namespace fslsim {

// Raw sectioned key/value view of a config file: "section.key" -> value.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config_text(const std::string& text);
ConfigMap parse_config_file(const std::string& path);

// Builds and validates a ScenarioConfig from [scenario]/[train] keys.
// Unknown keys and invalid values throw std::invalid_argument.
ScenarioConfig scenario_from_config(const ConfigMap& kv);

// Echo used by the run manifest.
std::string scenario_to_text(const ScenarioConfig& cfg);

}  // namespace fslsim
