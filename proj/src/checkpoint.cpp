#include "huca/checkpoint.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "huca/errors.hpp"

namespace huca::net {

namespace {

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& arr) {
  Eigen::VectorXd v(arr.size());
  Eigen::Index i = 0;
  for (const auto& x : arr) v[i++] = x.get<double>();
  return v;
}

}  // namespace

nlohmann::json to_json(const Mlp& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers)
    layers.push_back({{"in", l.in_dim},
                      {"out", l.out_dim},
                      {"activation", to_string(l.activation)}});
  return {{"layers", layers}, {"params", vector_to_json(net.params)}};
}

Mlp mlp_from_json(const nlohmann::json& j) {
  Mlp net;
  for (const auto& l : j.at("layers"))
    net.layers.push_back({l.at("in").get<int>(), l.at("out").get<int>(),
                          activation_from_string(l.at("activation").get<std::string>())});
  net.params = vector_from_json(j.at("params"));
  if (net.params.size() != net.param_count())
    throw ShapeError("checkpoint parameter count mismatch");
  return net;
}

nlohmann::json to_json(const OptimizerState& opt) {
  return {{"learning_rate", opt.learning_rate},
          {"first_moment", vector_to_json(opt.first_moment)},
          {"second_moment", vector_to_json(opt.second_moment)},
          {"step_count", opt.step_count},
          {"beta1", opt.beta1},
          {"beta2", opt.beta2},
          {"eps", opt.eps}};
}

OptimizerState optimizer_from_json(const nlohmann::json& j) {
  OptimizerState opt;
  opt.learning_rate = j.at("learning_rate").get<double>();
  opt.first_moment = vector_from_json(j.at("first_moment"));
  opt.second_moment = vector_from_json(j.at("second_moment"));
  opt.step_count = j.at("step_count").get<std::int64_t>();
  opt.beta1 = j.at("beta1").get<double>();
  opt.beta2 = j.at("beta2").get<double>();
  opt.eps = j.at("eps").get<double>();
  return opt;
}

nlohmann::json to_json(const ActorCritic& agent) {
  return {{"actor", to_json(agent.actor)},
          {"critic", to_json(agent.critic)},
          {"target_actor", to_json(agent.target_actor)},
          {"target_critic", to_json(agent.target_critic)},
          {"opt_actor", to_json(agent.opt_actor)},
          {"opt_critic", to_json(agent.opt_critic)}};
}

ActorCritic actor_critic_from_json(const nlohmann::json& j) {
  ActorCritic agent;
  agent.actor = mlp_from_json(j.at("actor"));
  agent.critic = mlp_from_json(j.at("critic"));
  agent.target_actor = mlp_from_json(j.at("target_actor"));
  agent.target_critic = mlp_from_json(j.at("target_critic"));
  agent.opt_actor = optimizer_from_json(j.at("opt_actor"));
  agent.opt_critic = optimizer_from_json(j.at("opt_critic"));
  return agent;
}

void save_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  out << j.dump(1, '\t') << '\n';
}

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("invalid JSON in '" + path + "': " + e.what());
  }
  return j;
}

}  // namespace huca::net
