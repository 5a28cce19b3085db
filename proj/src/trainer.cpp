#include "huca/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "huca/checkpoint.hpp"
#include "huca/errors.hpp"

namespace huca::trainer {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Trailing mean of the episode's total load, warm-started with the first
// observed value.
class TrailingMean {
 public:
  explicit TrailingMean(std::size_t window) : window_(window) {}

  double mean_or(double fallback) const {
    if (values_.empty()) return fallback;
    return sum_ / static_cast<double>(values_.size());
  }

  void push(double v) {
    values_.push_back(v);
    sum_ += v;
    if (values_.size() > window_) {
      sum_ -= values_.front();
      values_.pop_front();
    }
  }

 private:
  std::size_t window_;
  std::deque<double> values_;
  double sum_ = 0.0;
};

double decayed(double start, double end, int episode, int episodes) {
  if (episodes <= 1) return start;
  const double f = static_cast<double>(episode) / static_cast<double>(episodes - 1);
  return start + (end - start) * f;
}

double effective_rho(const TrainConfig& cfg) {
  if (cfg.baseline == Baseline::ddpg) return 0.0;
  switch (cfg.ablation) {
    case Ablation::full:
    case Ablation::no_high:
      return cfg.rho;
    case Ablation::no_critic_aug:
    case Ablation::no_either:
      return 0.0;
  }
  return cfg.rho;
}

bool gating_enabled(const TrainConfig& cfg) {
  if (cfg.baseline == Baseline::ddpg) return false;
  return cfg.ablation == Ablation::full || cfg.ablation == Ablation::no_critic_aug;
}

}  // namespace

Ablation ablation_from_string(const std::string& name) {
  if (name == "full") return Ablation::full;
  if (name == "no_critic_aug" || name == "no-ca") return Ablation::no_critic_aug;
  if (name == "no_high" || name == "no-high") return Ablation::no_high;
  if (name == "no_either" || name == "no-either") return Ablation::no_either;
  throw DomainError("unknown ablation '" + name + "'");
}

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::full: return "full";
    case Ablation::no_critic_aug: return "no_critic_aug";
    case Ablation::no_high: return "no_high";
    case Ablation::no_either: return "no_either";
  }
  return "full";
}

PolicyBundle make_policy_bundle(const TrainConfig& cfg,
                                const sim::StationConfig& station, Rng& rng) {
  PolicyBundle bundle;
  bundle.n_piles = station.n_piles;
  bundle.ablation = cfg.ablation;
  bundle.baseline = cfg.baseline;
  bundle.gating_active = gating_enabled(cfg);
  bundle.rho = effective_rho(cfg);
  bundle.epsilon = cfg.epsilon;
  bundle.clamp_augment = cfg.clamp_augment;
  bundle.n_hours = cfg.n_hours;

  const int h = cfg.hidden_dim;
  using net::Activation;
  using net::LayerSpec;
  const auto mlp_layers = [h](int in, int out) {
    return std::vector<LayerSpec>{{in, h, Activation::relu},
                                  {h, h, Activation::relu},
                                  {h, out, Activation::linear}};
  };

  bundle.high = net::make_actor_critic(mlp_layers(hi::kHighStateDim, 1),
                                       mlp_layers(hi::kHighStateDim + 1, 1),
                                       cfg.lr_actor, cfg.lr_critic, rng);

  const int n_agents = cfg.baseline == Baseline::ddpg ? 1 : station.n_piles;
  const int joint_dim = lo::kLowStateDim * n_agents + n_agents;
  bundle.low.reserve(static_cast<std::size_t>(n_agents));
  for (int i = 0; i < n_agents; ++i)
    bundle.low.push_back(net::make_actor_critic(mlp_layers(lo::kLowStateDim, 1),
                                                mlp_layers(joint_dim, 1),
                                                cfg.lr_actor, cfg.lr_critic, rng));
  return bundle;
}

void save_bundle(const std::string& dir, const PolicyBundle& bundle) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json meta{{"n_piles", bundle.n_piles},
                      {"ablation", to_string(bundle.ablation)},
                      {"baseline", bundle.baseline == Baseline::ddpg ? "ddpg" : "none"},
                      {"gating_active", bundle.gating_active},
                      {"rho", bundle.rho},
                      {"epsilon", bundle.epsilon},
                      {"clamp_augment", bundle.clamp_augment},
                      {"n_hours", bundle.n_hours},
                      {"n_agents", bundle.n_agents()}};
  net::save_json((fs::path(dir) / "bundle.json").string(), meta);
  net::save_json((fs::path(dir) / "high.json").string(), net::to_json(bundle.high));
  for (int i = 0; i < bundle.n_agents(); ++i)
    net::save_json((fs::path(dir) / ("low_" + std::to_string(i) + ".json")).string(),
                   net::to_json(bundle.low[static_cast<std::size_t>(i)]));
}

PolicyBundle load_bundle(const std::string& dir) {
  namespace fs = std::filesystem;
  const nlohmann::json meta = net::load_json((fs::path(dir) / "bundle.json").string());
  PolicyBundle bundle;
  bundle.n_piles = meta.at("n_piles").get<int>();
  bundle.ablation = ablation_from_string(meta.at("ablation").get<std::string>());
  bundle.baseline =
      meta.at("baseline").get<std::string>() == "ddpg" ? Baseline::ddpg : Baseline::none;
  bundle.gating_active = meta.at("gating_active").get<bool>();
  bundle.rho = meta.at("rho").get<double>();
  bundle.epsilon = meta.at("epsilon").get<double>();
  bundle.clamp_augment = meta.at("clamp_augment").get<bool>();
  bundle.n_hours = meta.at("n_hours").get<int>();
  bundle.high = net::actor_critic_from_json(
      net::load_json((fs::path(dir) / "high.json").string()));
  const int n_agents = meta.at("n_agents").get<int>();
  for (int i = 0; i < n_agents; ++i)
    bundle.low.push_back(net::actor_critic_from_json(net::load_json(
        (fs::path(dir) / ("low_" + std::to_string(i) + ".json")).string())));
  return bundle;
}

void TrainLog::write_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  out << "episode,high_return,low_return_mean,energy_cost_usd,peak_load_kw,"
         "sigma_high,sigma_logit,high_critic_loss,high_actor_objective,"
         "low_critic_loss_mean,low_actor_objective_mean,update_steps\n";
  out.precision(10);
  for (const auto& e : episodes) {
    out << e.episode << ',' << e.high_return << ',' << e.low_return_mean << ','
        << e.energy_cost_usd << ',' << e.peak_load_kw << ',' << e.sigma_high << ','
        << e.sigma_logit << ',' << e.high_critic_loss << ','
        << e.high_actor_objective << ',' << e.low_critic_loss_mean << ','
        << e.low_actor_objective_mean << ',' << e.update_steps << '\n';
  }
}

std::string TrainLog::summary_json() const {
  nlohmann::json j;
  j["episodes"] = episodes.size();
  j["gating_active"] = gating_active;
  j["critic_aug_active"] = critic_aug_active;
  j["rho"] = rho;
  j["ablation"] = ablation;
  j["aborted"] = aborted;
  j["aborted_episode"] = aborted_episode;
  if (!episodes.empty()) {
    double cost = 0.0, peak = 0.0, ret = 0.0;
    int updates = 0;
    for (const auto& e : episodes) {
      cost += e.energy_cost_usd;
      peak = std::max(peak, e.peak_load_kw);
      ret += e.high_return;
      updates += e.update_steps;
    }
    j["mean_energy_cost_usd"] = cost / static_cast<double>(episodes.size());
    j["max_peak_load_kw"] = peak;
    j["mean_high_return"] = ret / static_cast<double>(episodes.size());
    j["total_update_steps"] = updates;
  }
  return j.dump(1, '\t') + "\n";
}

SlotDecision decide_slot(const PolicyBundle& bundle, const sim::StationState& state,
                         const sim::TraceSet& traces, const sim::StationConfig& station,
                         const sim::PenaltyConfig&, const SlotContext& ctx,
                         const ExplorationNoise& noise) {
  SlotDecision d;
  const int n_piles = static_cast<int>(state.piles.size());
  const int docked = state.n_docked();

  d.s_h = hi::build_high_state(traces, state.slot.index, bundle.n_hours, docked,
                               ctx.prev_power_sum_kw, ctx.prev_low_q_mean,
                               ctx.prev_low_q_std);

  if (bundle.gating_active) {
    double a_h = hi::policy_action(bundle.high.actor, d.s_h, bundle.n_piles);
    if (noise.rng) a_h = clamp01(a_h + noise.rng->normal(0.0, noise.sigma_high));
    d.a_h = a_h;
    d.a_disc = hi::discretize_action(a_h);
    Eigen::VectorXd sa(hi::kHighStateDim + 1);
    sa << hi::encode(d.s_h, bundle.n_piles), a_h;
    d.q_h = net::forward(bundle.high.critic, sa)[0];
  } else {
    d.a_h = 0.5;
    d.a_disc = 1;
    d.q_h = 0.0;
  }

  // Per-pile bounds for this slot.
  std::vector<sim::PowerBounds> bounds(static_cast<std::size_t>(n_piles));
  if (docked > 0) {
    const double p_pile = sim::per_pile_power_limit(station.p_station_max_kw, docked);
    for (int i = 0; i < n_piles; ++i) {
      const auto& pile = state.piles[static_cast<std::size_t>(i)];
      if (pile.docked())
        bounds[static_cast<std::size_t>(i)] =
            sim::power_boundaries(pile, state.slot, p_pile, station);
    }
  }

  d.powers_kw.assign(static_cast<std::size_t>(n_piles), 0.0);

  const auto uncertainty_of = [&](const sim::PileState& pile) {
    lo::UncertaintyInputs u;
    u.delta_soc = pile.session->soc_dep_expected - pile.soc_now;
    u.delta_t = static_cast<double>(pile.session->t_dep_planned.index -
                                    state.slot.index);
    return u;
  };

  if (bundle.baseline == Baseline::ddpg) {
    // Single shared agent over the pooled pile state; its action is applied
    // to every docked pile's own bounds.
    lo::LowState pooled;
    lo::UncertaintyInputs pooled_u;
    if (docked > 0) {
      for (int i = 0; i < n_piles; ++i) {
        const auto& pile = state.piles[static_cast<std::size_t>(i)];
        if (!pile.docked()) continue;
        pooled.soc_now += pile.soc_now;
        pooled.p_max_kw += bounds[static_cast<std::size_t>(i)].p_max_kw;
        pooled.p_min_kw += bounds[static_cast<std::size_t>(i)].p_min_kw;
        const auto u = uncertainty_of(pile);
        pooled_u.delta_soc += u.delta_soc;
        pooled_u.delta_t += u.delta_t;
      }
      pooled.soc_now /= docked;
      pooled.p_max_kw /= docked;
      pooled.p_min_kw /= docked;
      pooled_u.delta_soc /= docked;
      pooled_u.delta_t = std::max(1.0, pooled_u.delta_t / docked);
      pooled.docked = true;
    }
    d.x.states = {pooled};
    d.uncertainty = {pooled_u};

    double a = lo::kIdleAction;
    if (docked > 0) {
      double logit = net::forward(bundle.low[0].actor, lo::encode(pooled))[0];
      if (noise.rng) logit += noise.rng->normal(0.0, noise.sigma_logit);
      a = net::sigmoid(logit);
      for (int i = 0; i < n_piles; ++i) {
        const auto& pile = state.piles[static_cast<std::size_t>(i)];
        if (!pile.docked()) continue;
        const auto& b = bounds[static_cast<std::size_t>(i)];
        d.powers_kw[static_cast<std::size_t>(i)] =
            lo::optimal_power(a, b.p_min_kw, b.p_max_kw);
      }
    }
    d.actions = {a};
  } else {
    d.x.states.resize(static_cast<std::size_t>(n_piles));
    d.actions.assign(static_cast<std::size_t>(n_piles), lo::kIdleAction);
    d.uncertainty.resize(static_cast<std::size_t>(n_piles));
    for (int i = 0; i < n_piles; ++i) {
      const auto& pile = state.piles[static_cast<std::size_t>(i)];
      lo::LowState& s = d.x.states[static_cast<std::size_t>(i)];
      if (!pile.docked()) continue;
      const auto& b = bounds[static_cast<std::size_t>(i)];
      s.soc_now = pile.soc_now;
      s.p_max_kw = b.p_max_kw;
      s.p_min_kw = b.p_min_kw;
      s.high_action_disc = bundle.gating_active ? d.a_disc : 0;
      s.high_critic_value = d.q_h;
      s.docked = true;
      d.uncertainty[static_cast<std::size_t>(i)] = uncertainty_of(pile);

      double logit =
          net::forward(bundle.low[static_cast<std::size_t>(i)].actor, lo::encode(s))[0];
      if (noise.rng) logit += noise.rng->normal(0.0, noise.sigma_logit);
      const double a = bundle.gating_active ? lo::map_action(logit, d.a_disc)
                                            : net::sigmoid(logit);
      d.actions[static_cast<std::size_t>(i)] = a;
      d.powers_kw[static_cast<std::size_t>(i)] =
          lo::optimal_power(a, b.p_min_kw, b.p_max_kw);
    }
  }

  // Centralized critic values of the chosen joint action; summarized for
  // the next slot's high state.
  const int n_agents = d.x.n_agents();
  Eigen::VectorXd xa(static_cast<Eigen::Index>(n_agents) * lo::kLowStateDim + n_agents);
  xa.head(static_cast<Eigen::Index>(n_agents) * lo::kLowStateDim) = lo::encode(d.x);
  for (int j = 0; j < n_agents; ++j)
    xa[static_cast<Eigen::Index>(n_agents) * lo::kLowStateDim + j] =
        d.actions[static_cast<std::size_t>(j)];
  double sum = 0.0, sum_sq = 0.0;
  int count = 0;
  for (int j = 0; j < n_agents; ++j) {
    if (!d.x.states[static_cast<std::size_t>(j)].docked) continue;
    const double q =
        net::forward(bundle.low[static_cast<std::size_t>(j)].critic, xa)[0];
    sum += q;
    sum_sq += q * q;
    ++count;
  }
  if (count > 0) {
    d.low_q_mean = sum / count;
    const double var = std::max(0.0, sum_sq / count - d.low_q_mean * d.low_q_mean);
    d.low_q_std = std::sqrt(var);
  }
  return d;
}

RolloutResult run_episode(const PolicyBundle& bundle, const TrainConfig& cfg,
                          const sim::TraceSet& traces,
                          const sim::StationConfig& station,
                          const sim::PenaltyConfig& penalty,
                          const std::vector<sim::EvSession>& sessions,
                          std::int64_t day_start_index,
                          const ExplorationNoise& noise) {
  RolloutResult result;
  sim::StationState state = sim::make_initial_state(station, traces, day_start_index);
  SlotContext ctx;
  hi::CostLedger ledger;
  TrailingMean load_avg(24);
  const int n_agents = bundle.baseline == Baseline::ddpg ? 1 : station.n_piles;

  struct Pending {
    SlotDecision decision;
    double r_h = 0.0;
    std::vector<double> rewards;
    std::vector<std::uint8_t> terminals;
  };
  std::optional<Pending> pending;

  double high_return = 0.0;
  std::vector<double> low_returns(static_cast<std::size_t>(n_agents), 0.0);
  double peak = 0.0;

  const auto store_pending = [&](const SlotDecision* next, bool terminal) {
    if (!pending) return;
    hi::HighTransition ht;
    ht.s = pending->decision.s_h;
    ht.a = pending->decision.a_h;
    ht.r = pending->r_h * cfg.reward_scale_high;
    ht.s_next = next ? next->s_h : pending->decision.s_h;
    ht.terminal = terminal;
    result.high.push_back(std::move(ht));

    if (pending->decision.x.any_docked()) {
      lo::LowTransition lt;
      lt.x = pending->decision.x;
      lt.actions = pending->decision.actions;
      lt.rewards = pending->rewards;
      lt.x_next = next ? next->x : pending->decision.x;
      lt.terminals = pending->terminals;
      if (terminal)
        std::fill(lt.terminals.begin(), lt.terminals.end(), std::uint8_t{1});
      lt.uncertainty = pending->decision.uncertainty;
      result.low.push_back(std::move(lt));
    }
  };

  for (int k = 0; k < 24; ++k) {
    sim::dock_arrivals(state, sessions);
    SlotDecision decision =
        decide_slot(bundle, state, traces, station, penalty, ctx, noise);
    store_pending(&decision, false);

    const sim::SlotLedger slot = sim::step(state, decision.powers_kw, traces, station);
    peak = std::max(peak, slot.total_load_kw);

    ledger.add_slot(slot.total_load_kw, slot.price, penalty.contract_kw,
                    station.slot_hours);
    const double l_avg = load_avg.mean_or(slot.total_load_kw);
    const double r_h =
        hi::high_reward(ledger, slot.total_load_kw, l_avg, cfg.kappa, cfg.phi);
    load_avg.push(slot.total_load_kw);
    high_return += r_h;

    // Per-agent rewards from the post-step SoC; departures end the agent's
    // sequence for bootstrapping. A pile that was docked at decision time is
    // now either still docked or in the departures list.
    struct PileOutcome {
      bool active = false;
      bool departed = false;
      double soc = 0.0;
      double soc_dep_expected = 0.0;
    };
    std::vector<PileOutcome> outcomes(static_cast<std::size_t>(station.n_piles));
    for (const auto& dep : slot.departures) {
      auto& o = outcomes[static_cast<std::size_t>(dep.pile_id)];
      o.active = true;
      o.departed = true;
      o.soc = dep.soc_final;
      o.soc_dep_expected = dep.session.soc_dep_expected;
    }
    for (const auto& pile : state.piles) {
      if (!pile.docked()) continue;
      auto& o = outcomes[static_cast<std::size_t>(pile.pile_id)];
      o.active = true;
      o.soc = pile.soc_now;
      o.soc_dep_expected = pile.session->soc_dep_expected;
    }

    std::vector<double> rewards(static_cast<std::size_t>(n_agents), 0.0);
    std::vector<std::uint8_t> terminals(static_cast<std::size_t>(n_agents), 0);
    if (bundle.baseline == Baseline::ddpg) {
      double r_sum = 0.0;
      int cnt = 0;
      bool all_departed = true;
      for (int i = 0; i < station.n_piles; ++i) {
        const auto& o = outcomes[static_cast<std::size_t>(i)];
        if (!o.active) continue;
        r_sum += lo::low_reward(decision.powers_kw[static_cast<std::size_t>(i)],
                                slot.price, o.soc, o.soc_dep_expected, cfg.omega);
        ++cnt;
        all_departed = all_departed && o.departed;
      }
      if (cnt > 0) {
        low_returns[0] += r_sum / cnt;
        rewards[0] = (r_sum / cnt) * cfg.reward_scale_low;
        terminals[0] = all_departed ? 1 : 0;
      }
    } else {
      for (int i = 0; i < n_agents; ++i) {
        const auto& o = outcomes[static_cast<std::size_t>(i)];
        if (!o.active) continue;
        const double r =
            lo::low_reward(decision.powers_kw[static_cast<std::size_t>(i)],
                           slot.price, o.soc, o.soc_dep_expected, cfg.omega);
        low_returns[static_cast<std::size_t>(i)] += r;
        rewards[static_cast<std::size_t>(i)] = r * cfg.reward_scale_low;
        terminals[static_cast<std::size_t>(i)] = o.departed ? 1 : 0;
      }
    }

    ctx.prev_power_sum_kw = 0.0;
    for (const double p : decision.powers_kw) ctx.prev_power_sum_kw += p;
    ctx.prev_low_q_mean = decision.low_q_mean;
    ctx.prev_low_q_std = decision.low_q_std;

    pending = Pending{std::move(decision), r_h, std::move(rewards), std::move(terminals)};
  }

  // Terminal snapshot one slot past the episode; bootstrapping never reads it.
  SlotDecision terminal_decision;
  terminal_decision.s_h =
      hi::build_high_state(traces, state.slot.index, bundle.n_hours, state.n_docked(),
                           ctx.prev_power_sum_kw, ctx.prev_low_q_mean,
                           ctx.prev_low_q_std);
  terminal_decision.x.states.resize(static_cast<std::size_t>(n_agents));
  store_pending(&terminal_decision, true);

  result.summary.high_return = high_return;
  double low_sum = 0.0;
  for (const double r : low_returns) low_sum += r;
  result.summary.low_return_mean = low_sum / static_cast<double>(n_agents);
  result.summary.energy_cost_usd = state.cumulative_energy_cost;
  result.summary.peak_load_kw = peak;
  return result;
}

TrainResult train(const TrainConfig& cfg, const sim::TraceSet& traces,
                  const sim::StationConfig& station,
                  const sim::PenaltyConfig& penalty, const CheckpointHook& hook) {
  if (cfg.batch_size > cfg.buffer_capacity)
    throw DomainError("batch size exceeds buffer capacity");
  if (traces.start_hour != 0)
    throw DomainError("training requires traces starting at midnight");
  const std::int64_t days = traces.whole_days();
  if (days < 1) throw DomainError("trace shorter than one day");

  Rng init_rng(derive_seed(cfg.seed, 1));
  Rng env_rng(derive_seed(cfg.seed, 2));
  Rng explore_rng(derive_seed(cfg.seed, 3));
  Rng sample_rng(derive_seed(cfg.seed, 4));

  TrainResult result{make_policy_bundle(cfg, station, init_rng),
                     TrainLog{},
                     ReplayBuffer<hi::HighTransition>(cfg.buffer_capacity),
                     ReplayBuffer<lo::LowTransition>(cfg.buffer_capacity)};
  PolicyBundle& bundle = result.policy;
  TrainLog& log = result.log;
  log.gating_active = bundle.gating_active;
  log.critic_aug_active = bundle.rho > 0.0;
  log.rho = bundle.rho;
  log.ablation = to_string(cfg.ablation);

  for (int episode = 0; episode < cfg.episodes; ++episode) {
    const std::int64_t day = episode % days;
    const auto sessions = sim::sample_ev_sessions(
        env_rng, static_cast<int>(day), cfg.scenario, station.n_piles, traces.start_dow);

    ExplorationNoise noise;
    noise.sigma_high = decayed(cfg.noise_high_start, cfg.noise_high_end, episode,
                               cfg.episodes);
    noise.sigma_logit = decayed(cfg.noise_logit_start, cfg.noise_logit_end, episode,
                                cfg.episodes);
    noise.rng = &explore_rng;

    RolloutResult rollout = run_episode(bundle, cfg, traces, station, penalty,
                                        sessions, day * 24, noise);
    if (bundle.gating_active)
      for (auto& t : rollout.high) result.high_buffer.push(std::move(t));
    for (auto& t : rollout.low) result.low_buffer.push(std::move(t));

    EpisodeSummary summary = rollout.summary;
    summary.episode = episode;
    summary.sigma_high = noise.sigma_high;
    summary.sigma_logit = noise.sigma_logit;

    // Keep a restore point so a numerical fault leaves the last good
    // parameters in place.
    const PolicyBundle snapshot = bundle;
    try {
      double hcl = 0.0, hao = 0.0, lcl = 0.0, lao = 0.0;
      int h_rounds = 0, l_rounds = 0;
      for (int u = 0; u < cfg.updates_per_episode; ++u) {
        if (bundle.gating_active && result.high_buffer.size() >= cfg.batch_size) {
          const auto batch =
              sample_minibatch(result.high_buffer, cfg.batch_size, sample_rng);
          const auto stats = hi::update_high(batch, bundle.high, cfg.gamma,
                                             bundle.n_piles);
          hcl += stats.critic_loss;
          hao += stats.actor_objective;
          ++h_rounds;
          ++summary.update_steps;
        }
        if (result.low_buffer.size() >= cfg.batch_size) {
          const auto batch =
              sample_minibatch(result.low_buffer, cfg.batch_size, sample_rng);
          for (int i = 0; i < bundle.n_agents(); ++i) {
            const auto stats = lo::update_low(i, batch, bundle.low, cfg.gamma,
                                              bundle.rho, bundle.epsilon,
                                              bundle.gating_active,
                                              bundle.clamp_augment);
            lcl += stats.critic_loss;
            lao += stats.actor_objective;
            ++summary.update_steps;
          }
          ++l_rounds;
        }
      }
      if (h_rounds > 0) {
        summary.high_critic_loss = hcl / h_rounds;
        summary.high_actor_objective = hao / h_rounds;
      }
      if (l_rounds > 0) {
        summary.low_critic_loss_mean = lcl / (l_rounds * bundle.n_agents());
        summary.low_actor_objective_mean = lao / (l_rounds * bundle.n_agents());
      }
    } catch (const NumericalFault&) {
      bundle = snapshot;
      log.aborted = true;
      log.aborted_episode = episode;
      log.episodes.push_back(summary);
      break;
    }

    if (bundle.gating_active) net::soft_update_all(bundle.high, cfg.tau);
    for (auto& agent : bundle.low) net::soft_update_all(agent, cfg.tau);

    log.episodes.push_back(summary);
    if (hook && cfg.checkpoint_every > 0 &&
        (episode + 1) % cfg.checkpoint_every == 0)
      hook(episode, bundle);
  }
  return result;
}

}  // namespace huca::trainer
