#pragma once

#include <map>
#include <string>

#include "huca/evalkit.hpp"
#include "huca/simenv.hpp"
#include "huca/traces_io.hpp"
#include "huca/trainer.hpp"

namespace huca::cli {

using KeyValues = std::map<std::string, std::string>;

// Flat `key = value` text, `#` comments. Unknown keys and unparsable values
// raise ParseError so typos never pass silently.
KeyValues parse_config_text(const std::string& text);
KeyValues load_config_file(const std::string& path);

// Every tunable of a run, addressable by key (see to_key_values for the
// full list). CLI flags override file values which override defaults.
struct RunConfig {
  sim::StationConfig station;
  sim::PenaltyConfig penalty;
  trainer::TrainConfig train;
  SyntheticProfile profile;
  int eval_days = 14;
  int synthetic_days = 30;
};

void apply_key_values(RunConfig& cfg, const KeyValues& kv);
KeyValues to_key_values(const RunConfig& cfg);

sim::Scenario scenario_from_string(const std::string& name);
std::string to_string(sim::Scenario s);

}  // namespace huca::cli
