#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>

#include "huca/netcore.hpp"

namespace huca::net {

// JSON checkpoint codec. Doubles are emitted with shortest round-trip
// formatting, so save -> load reproduces every parameter bit-exactly.

nlohmann::json to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& j);

nlohmann::json to_json(const OptimizerState& opt);
OptimizerState optimizer_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ActorCritic& agent);
ActorCritic actor_critic_from_json(const nlohmann::json& j);

void save_json(const std::string& path, const nlohmann::json& j);
nlohmann::json load_json(const std::string& path);

}  // namespace huca::net
