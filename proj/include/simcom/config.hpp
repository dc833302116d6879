#pragma once

// Flat `key = value` configuration text with dotted sections.
//
//   # comment
//   rounds = 500
//   grid.snr_dbs = 5, 10, 20
//   corpus.citation_range = 1, 10
//
// Unknown keys are hard errors; every offending key is named in the message.

#include "simcom/protocol.hpp"

#include <istream>
#include <map>
#include <ostream>
#include <string>

namespace simcom {

/// Ordered key -> raw value. Duplicate keys throw ConfigError.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config_text(std::istream& in);
ConfigMap load_config_map(const std::string& path);

/// Applies `map` on top of the defaults in `base`.
ExperimentConfig experiment_from_map(const ConfigMap& map, ExperimentConfig base = {});
ExperimentConfig load_experiment_config(const std::string& path);

/// Every key, fully resolved; parses back to an equal configuration.
void write_config(std::ostream& out, const ExperimentConfig& config);
std::string config_snapshot(const ExperimentConfig& config);

/// Every recognized key.
const std::vector<std::string>& known_config_keys();

}  // namespace simcom
