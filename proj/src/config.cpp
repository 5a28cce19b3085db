#include "huca/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "huca/errors.hpp"

namespace huca::cli {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ParseError("config key '" + key + "': bad number '" + value + "'");
  }
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ParseError("config key '" + key + "': bad integer '" + value + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ParseError("config key '" + key + "': bad boolean '" + value + "'");
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

KeyValues parse_config_text(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("config line " + std::to_string(line_no) +
                       ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ParseError("config line " + std::to_string(line_no) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

KeyValues load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str());
}

sim::Scenario scenario_from_string(const std::string& name) {
  if (name == "certain") return sim::Scenario::certain;
  if (name == "uncertain") return sim::Scenario::uncertain;
  throw ParseError("unknown scenario '" + name + "'");
}

std::string to_string(sim::Scenario s) {
  return s == sim::Scenario::certain ? "certain" : "uncertain";
}

void apply_key_values(RunConfig& cfg, const KeyValues& kv) {
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"station.n_piles",
       [&](const std::string& k, const std::string& v) {
         cfg.station.n_piles = static_cast<int>(parse_int(k, v));
       }},
      {"station.p_station_max_kw",
       [&](const std::string& k, const std::string& v) {
         cfg.station.p_station_max_kw = parse_double(k, v);
       }},
      {"station.charge_efficiency",
       [&](const std::string& k, const std::string& v) {
         cfg.station.charge_efficiency = parse_double(k, v);
       }},
      {"station.soc_hw_min",
       [&](const std::string& k, const std::string& v) {
         cfg.station.soc_hw_min = parse_double(k, v);
       }},
      {"station.soc_hw_max",
       [&](const std::string& k, const std::string& v) {
         cfg.station.soc_hw_max = parse_double(k, v);
       }},
      {"station.slot_hours",
       [&](const std::string& k, const std::string& v) {
         cfg.station.slot_hours = parse_double(k, v);
       }},
      {"station.allow_discharge",
       [&](const std::string& k, const std::string& v) {
         cfg.station.allow_discharge = parse_bool(k, v);
       }},
      {"penalty.contract_kw",
       [&](const std::string& k, const std::string& v) {
         cfg.penalty.contract_kw = parse_double(k, v);
       }},
      {"penalty.base_rate_usd_per_kw",
       [&](const std::string& k, const std::string& v) {
         cfg.penalty.base_rate_usd_per_kw = parse_double(k, v);
       }},
      {"penalty.tier_threshold",
       [&](const std::string& k, const std::string& v) {
         cfg.penalty.tier_threshold = parse_double(k, v);
       }},
      {"train.episodes",
       [&](const std::string& k, const std::string& v) {
         cfg.train.episodes = static_cast<int>(parse_int(k, v));
       }},
      {"train.buffer_capacity",
       [&](const std::string& k, const std::string& v) {
         cfg.train.buffer_capacity = static_cast<std::size_t>(parse_int(k, v));
       }},
      {"train.batch_size",
       [&](const std::string& k, const std::string& v) {
         cfg.train.batch_size = static_cast<std::size_t>(parse_int(k, v));
       }},
      {"train.gamma", [&](const std::string& k,
                          const std::string& v) { cfg.train.gamma = parse_double(k, v); }},
      {"train.tau", [&](const std::string& k,
                        const std::string& v) { cfg.train.tau = parse_double(k, v); }},
      {"train.kappa", [&](const std::string& k,
                          const std::string& v) { cfg.train.kappa = parse_double(k, v); }},
      {"train.phi", [&](const std::string& k,
                        const std::string& v) { cfg.train.phi = parse_double(k, v); }},
      {"train.omega", [&](const std::string& k,
                          const std::string& v) { cfg.train.omega = parse_double(k, v); }},
      {"train.rho", [&](const std::string& k,
                        const std::string& v) { cfg.train.rho = parse_double(k, v); }},
      {"train.epsilon",
       [&](const std::string& k, const std::string& v) {
         cfg.train.epsilon = parse_double(k, v);
       }},
      {"train.seed",
       [&](const std::string& k, const std::string& v) {
         cfg.train.seed = static_cast<std::uint64_t>(parse_int(k, v));
       }},
      {"train.ablation",
       [&](const std::string&, const std::string& v) {
         cfg.train.ablation = trainer::ablation_from_string(v);
       }},
      {"train.scenario",
       [&](const std::string&, const std::string& v) {
         cfg.train.scenario = scenario_from_string(v);
       }},
      {"train.baseline",
       [&](const std::string& k, const std::string& v) {
         if (v == "none") cfg.train.baseline = trainer::Baseline::none;
         else if (v == "ddpg") cfg.train.baseline = trainer::Baseline::ddpg;
         else throw ParseError("config key '" + k + "': unknown baseline '" + v + "'");
       }},
      {"train.lr_actor",
       [&](const std::string& k, const std::string& v) {
         cfg.train.lr_actor = parse_double(k, v);
       }},
      {"train.lr_critic",
       [&](const std::string& k, const std::string& v) {
         cfg.train.lr_critic = parse_double(k, v);
       }},
      {"train.hidden_dim",
       [&](const std::string& k, const std::string& v) {
         cfg.train.hidden_dim = static_cast<int>(parse_int(k, v));
       }},
      {"train.n_hours",
       [&](const std::string& k, const std::string& v) {
         cfg.train.n_hours = static_cast<int>(parse_int(k, v));
       }},
      {"train.updates_per_episode",
       [&](const std::string& k, const std::string& v) {
         cfg.train.updates_per_episode = static_cast<int>(parse_int(k, v));
       }},
      {"train.noise_high_start",
       [&](const std::string& k, const std::string& v) {
         cfg.train.noise_high_start = parse_double(k, v);
       }},
      {"train.noise_high_end",
       [&](const std::string& k, const std::string& v) {
         cfg.train.noise_high_end = parse_double(k, v);
       }},
      {"train.noise_logit_start",
       [&](const std::string& k, const std::string& v) {
         cfg.train.noise_logit_start = parse_double(k, v);
       }},
      {"train.noise_logit_end",
       [&](const std::string& k, const std::string& v) {
         cfg.train.noise_logit_end = parse_double(k, v);
       }},
      {"train.reward_scale_high",
       [&](const std::string& k, const std::string& v) {
         cfg.train.reward_scale_high = parse_double(k, v);
       }},
      {"train.reward_scale_low",
       [&](const std::string& k, const std::string& v) {
         cfg.train.reward_scale_low = parse_double(k, v);
       }},
      {"train.clamp_augment",
       [&](const std::string& k, const std::string& v) {
         cfg.train.clamp_augment = parse_bool(k, v);
       }},
      {"train.checkpoint_every",
       [&](const std::string& k, const std::string& v) {
         cfg.train.checkpoint_every = static_cast<int>(parse_int(k, v));
       }},
      {"eval.days",
       [&](const std::string& k, const std::string& v) {
         cfg.eval_days = static_cast<int>(parse_int(k, v));
       }},
      {"synth.days",
       [&](const std::string& k, const std::string& v) {
         cfg.synthetic_days = static_cast<int>(parse_int(k, v));
       }},
      {"synth.base_load_kw",
       [&](const std::string& k, const std::string& v) {
         cfg.profile.base_load_kw = parse_double(k, v);
       }},
      {"synth.peak_load_kw",
       [&](const std::string& k, const std::string& v) {
         cfg.profile.peak_load_kw = parse_double(k, v);
       }},
      {"synth.load_noise_kw",
       [&](const std::string& k, const std::string& v) {
         cfg.profile.load_noise_kw = parse_double(k, v);
       }},
      {"synth.base_price_usd",
       [&](const std::string& k, const std::string& v) {
         cfg.profile.base_price_usd = parse_double(k, v);
       }},
      {"synth.peak_price_multiplier",
       [&](const std::string& k, const std::string& v) {
         cfg.profile.peak_price_multiplier = parse_double(k, v);
       }},
      {"synth.price_noise_usd",
       [&](const std::string& k, const std::string& v) {
         cfg.profile.price_noise_usd = parse_double(k, v);
       }},
  };

  for (const auto& [key, value] : kv) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ParseError("unknown config key '" + key + "'");
    it->second(key, value);
  }
}

KeyValues to_key_values(const RunConfig& cfg) {
  KeyValues kv;
  kv["station.n_piles"] = std::to_string(cfg.station.n_piles);
  kv["station.p_station_max_kw"] = format_double(cfg.station.p_station_max_kw);
  kv["station.charge_efficiency"] = format_double(cfg.station.charge_efficiency);
  kv["station.soc_hw_min"] = format_double(cfg.station.soc_hw_min);
  kv["station.soc_hw_max"] = format_double(cfg.station.soc_hw_max);
  kv["station.slot_hours"] = format_double(cfg.station.slot_hours);
  kv["station.allow_discharge"] = cfg.station.allow_discharge ? "true" : "false";
  kv["penalty.contract_kw"] = format_double(cfg.penalty.contract_kw);
  kv["penalty.base_rate_usd_per_kw"] = format_double(cfg.penalty.base_rate_usd_per_kw);
  kv["penalty.tier_threshold"] = format_double(cfg.penalty.tier_threshold);
  kv["train.episodes"] = std::to_string(cfg.train.episodes);
  kv["train.buffer_capacity"] = std::to_string(cfg.train.buffer_capacity);
  kv["train.batch_size"] = std::to_string(cfg.train.batch_size);
  kv["train.gamma"] = format_double(cfg.train.gamma);
  kv["train.tau"] = format_double(cfg.train.tau);
  kv["train.kappa"] = format_double(cfg.train.kappa);
  kv["train.phi"] = format_double(cfg.train.phi);
  kv["train.omega"] = format_double(cfg.train.omega);
  kv["train.rho"] = format_double(cfg.train.rho);
  kv["train.epsilon"] = format_double(cfg.train.epsilon);
  kv["train.seed"] = std::to_string(cfg.train.seed);
  kv["train.ablation"] = trainer::to_string(cfg.train.ablation);
  kv["train.scenario"] = to_string(cfg.train.scenario);
  kv["train.baseline"] =
      cfg.train.baseline == trainer::Baseline::ddpg ? "ddpg" : "none";
  kv["train.lr_actor"] = format_double(cfg.train.lr_actor);
  kv["train.lr_critic"] = format_double(cfg.train.lr_critic);
  kv["train.hidden_dim"] = std::to_string(cfg.train.hidden_dim);
  kv["train.n_hours"] = std::to_string(cfg.train.n_hours);
  kv["train.updates_per_episode"] = std::to_string(cfg.train.updates_per_episode);
  kv["train.noise_high_start"] = format_double(cfg.train.noise_high_start);
  kv["train.noise_high_end"] = format_double(cfg.train.noise_high_end);
  kv["train.noise_logit_start"] = format_double(cfg.train.noise_logit_start);
  kv["train.noise_logit_end"] = format_double(cfg.train.noise_logit_end);
  kv["train.reward_scale_high"] = format_double(cfg.train.reward_scale_high);
  kv["train.reward_scale_low"] = format_double(cfg.train.reward_scale_low);
  kv["train.clamp_augment"] = cfg.train.clamp_augment ? "true" : "false";
  kv["train.checkpoint_every"] = std::to_string(cfg.train.checkpoint_every);
  kv["eval.days"] = std::to_string(cfg.eval_days);
  kv["synth.days"] = std::to_string(cfg.synthetic_days);
  kv["synth.base_load_kw"] = format_double(cfg.profile.base_load_kw);
  kv["synth.peak_load_kw"] = format_double(cfg.profile.peak_load_kw);
  kv["synth.load_noise_kw"] = format_double(cfg.profile.load_noise_kw);
  kv["synth.base_price_usd"] = format_double(cfg.profile.base_price_usd);
  kv["synth.peak_price_multiplier"] = format_double(cfg.profile.peak_price_multiplier);
  kv["synth.price_noise_usd"] = format_double(cfg.profile.price_noise_usd);
  return kv;
}

}  // namespace huca::cli
