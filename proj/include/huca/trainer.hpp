#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "huca/hicontrol.hpp"
#include "huca/locontrol.hpp"
#include "huca/replay.hpp"
#include "huca/simenv.hpp"

namespace huca::trainer {

enum class Ablation { full, no_critic_aug, no_high, no_either };
enum class Baseline { none, ddpg };

Ablation ablation_from_string(const std::string& name);
std::string to_string(Ablation a);

struct TrainConfig {
  int episodes = 1500;
  std::size_t buffer_capacity = 30000;
  std::size_t batch_size = 1024;
  double gamma = 0.99;
  double tau = 0.005;
  double kappa = 0.1;
  double phi = 0.1;
  double omega = 0.5;
  double rho = 10.0;
  double epsilon = 1e-6;
  std::uint64_t seed = 0;
  Ablation ablation = Ablation::full;
  sim::Scenario scenario = sim::Scenario::certain;
  Baseline baseline = Baseline::none;

  // Artifact knobs, all resolved here rather than at run time.
  double lr_actor = 1e-4;
  double lr_critic = 1e-3;
  int hidden_dim = 64;             // two hidden layers of this width
  int n_hours = 3;                 // trailing price window in the high state
  int updates_per_episode = 1;     // gradient rounds per episode (24 = per slot)
  double noise_high_start = 0.3;   // additive sigma on a_h, linear decay
  double noise_high_end = 0.02;
  double noise_logit_start = 0.5;  // additive sigma on the raw logit
  double noise_logit_end = 0.05;
  double reward_scale_high = 0.01;  // applied when storing high transitions
  double reward_scale_low = 1.0;
  bool clamp_augment = false;
  int checkpoint_every = 0;  // episodes between checkpoint emissions, 0 = final only
};

// Everything needed to run the policy greedily or resume training.
struct PolicyBundle {
  net::ActorCritic high;  // meaningful only when gating_active
  std::vector<net::ActorCritic> low;
  int n_piles = 0;
  Ablation ablation = Ablation::full;
  Baseline baseline = Baseline::none;
  bool gating_active = true;
  double rho = 10.0;
  double epsilon = 1e-6;
  bool clamp_augment = false;
  int n_hours = 3;

  int n_agents() const { return static_cast<int>(low.size()); }
};

PolicyBundle make_policy_bundle(const TrainConfig& cfg,
                                const sim::StationConfig& station, Rng& rng);

void save_bundle(const std::string& dir, const PolicyBundle& bundle);
PolicyBundle load_bundle(const std::string& dir);

struct EpisodeSummary {
  int episode = 0;
  double high_return = 0.0;       // unscaled sum of r_h over the day
  double low_return_mean = 0.0;   // per-pile mean of summed low rewards
  double energy_cost_usd = 0.0;
  double peak_load_kw = 0.0;
  double sigma_high = 0.0;
  double sigma_logit = 0.0;
  double high_critic_loss = 0.0;
  double high_actor_objective = 0.0;
  double low_critic_loss_mean = 0.0;
  double low_actor_objective_mean = 0.0;
  int update_steps = 0;
};

struct TrainLog {
  std::vector<EpisodeSummary> episodes;
  bool gating_active = true;
  bool critic_aug_active = true;
  double rho = 10.0;
  std::string ablation = "full";
  bool aborted = false;
  int aborted_episode = -1;

  void write_csv(const std::string& path) const;
  std::string summary_json() const;  // serialized JSON document
};

// Values the episode runner carries from slot to slot.
struct SlotContext {
  double prev_power_sum_kw = 0.0;
  double prev_low_q_mean = 0.0;
  double prev_low_q_std = 0.0;
};

struct SlotDecision {
  hi::HighState s_h;
  double a_h = 0.5;
  int a_disc = 1;
  double q_h = 0.0;
  lo::JointObservation x;
  std::vector<double> actions;
  std::vector<double> powers_kw;
  std::vector<lo::UncertaintyInputs> uncertainty;
  double low_q_mean = 0.0;  // critic values of the chosen joint action
  double low_q_std = 0.0;
};

struct ExplorationNoise {
  double sigma_high = 0.0;
  double sigma_logit = 0.0;
  Rng* rng = nullptr;  // null means greedy
};

// Builds states, selects the gated actions and converts them to per-pile
// powers for the current slot. Shared by training rollouts and greedy
// evaluation.
SlotDecision decide_slot(const PolicyBundle& bundle, const sim::StationState& state,
                         const sim::TraceSet& traces, const sim::StationConfig& station,
                         const sim::PenaltyConfig& penalty, const SlotContext& ctx,
                         const ExplorationNoise& noise);

struct RolloutResult {
  std::vector<hi::HighTransition> high;
  std::vector<lo::LowTransition> low;
  EpisodeSummary summary;
};

// One simulated day: act, step, reward, and collect transitions. The high
// reward's cost ledger and load average reset with each episode.
RolloutResult run_episode(const PolicyBundle& bundle, const TrainConfig& cfg,
                          const sim::TraceSet& traces,
                          const sim::StationConfig& station,
                          const sim::PenaltyConfig& penalty,
                          const std::vector<sim::EvSession>& sessions,
                          std::int64_t day_start_index,
                          const ExplorationNoise& noise);

template <typename T>
std::vector<T> sample_minibatch(const ReplayBuffer<T>& buffer,
                                std::size_t batch_size, Rng& rng) {
  return buffer.sample(rng, batch_size);
}

using CheckpointHook = std::function<void(int episode, const PolicyBundle&)>;

struct TrainResult {
  PolicyBundle policy;
  TrainLog log;
  ReplayBuffer<hi::HighTransition> high_buffer;
  ReplayBuffer<lo::LowTransition> low_buffer;
};

// Full training loop: per episode one rollout, then `updates_per_episode`
// gradient rounds once the buffers hold a batch, then soft target syncs.
// A NumericalFault during updates aborts with the last good parameters.
TrainResult train(const TrainConfig& cfg, const sim::TraceSet& traces,
                  const sim::StationConfig& station,
                  const sim::PenaltyConfig& penalty,
                  const CheckpointHook& hook = nullptr);

}  // namespace huca::trainer
