#pragma once

#include <cstdint>
#include <vector>

#include "huca/netcore.hpp"

namespace huca::lo {

// Local observation of one pile agent: battery status, this slot's power
// bounds, and the high-level context (discrete decision + critic value).
// Empty piles carry the all-zero state with docked=false so the joint
// observation stays fixed-width for the centralized critics.
struct LowState {
  double soc_now = 0.0;
  double p_max_kw = 0.0;
  double p_min_kw = 0.0;
  int high_action_disc = 0;
  double high_critic_value = 0.0;
  bool docked = false;
};

constexpr int kLowStateDim = 6;

struct JointObservation {
  std::vector<LowState> states;  // exactly one per pile, every slot

  int n_agents() const { return static_cast<int>(states.size()); }
  bool any_docked() const {
    for (const auto& s : states)
      if (s.docked) return true;
    return false;
  }
};

// Inputs of the uncertainty factor for one agent at one slot. delta_t uses
// the planned departure (the actual one is unknown online) and is >= 1 for
// docked EVs because control ends the slot before departure.
struct UncertaintyInputs {
  double delta_soc = 0.0;  // soc_dep_expected - soc_now
  double delta_t = 1.0;    // slots until planned departure
  double rho = 0.0;
  double epsilon = 1e-6;
};

struct LowTransition {
  JointObservation x;
  std::vector<double> actions;  // in [0,1], one per pile
  std::vector<double> rewards;
  JointObservation x_next;
  std::vector<std::uint8_t> terminals;
  std::vector<UncertaintyInputs> uncertainty;  // actor-update side channel, per pile
};

// Placeholder action for empty piles; maps to 0 kW when p_min = p_max = 0.
constexpr double kIdleAction = 0.5;

// Gated squash of the raw policy logit: charging decisions live in
// [0.5, 1], discharging decisions in [0, 0.5).
double map_action(double logit, int high_action_disc);

// P_opt = a * (p_max - p_min) + p_min.
double optimal_power(double a, double p_min_kw, double p_max_kw);

// |log2(a + eps)| * sqrt(max(delta_soc, 0) / delta_t)
double uncertainty_factor(double a, const UncertaintyInputs& u);

// Q * (1 - rho * uncertainty_factor). Applied only inside the actor update;
// the critic regression never sees it. The multiplier may go negative for
// small actions and large rho; clamp_at_zero floors it for sensitivity runs.
double augment_q(double q, double a, const UncertaintyInputs& u,
                 bool clamp_at_zero = false);

// r = omega * (-P_opt * price) - |soc_now - soc_dep_expected|, with soc_now
// the post-step SoC of the slot.
double low_reward(double p_opt_kw, double price, double soc_now,
                  double soc_dep_expected, double omega);

Eigen::VectorXd encode(const LowState& s);
Eigen::VectorXd encode(const JointObservation& x);

// Target action of one agent in the next joint state: the target policy's
// gated action for docked piles, the idle placeholder otherwise. `gated`
// is false under the no-high ablation (plain sigmoid of the logit).
double target_action(const net::Mlp& target_actor, const LowState& s_next,
                     bool gated);

double low_critic_target(double r, const JointObservation& x_next,
                         const std::vector<net::ActorCritic>& agents, int agent,
                         double gamma, bool terminal, bool gated);

struct UpdateStats {
  double critic_loss = 0.0;
  double actor_objective = 0.0;
  int actor_rows = 0;  // batch entries with this agent docked
};

// Critic regression for agent `i` on the shared minibatch (raw Q only; this
// path takes no UncertaintyInputs by design).
double update_low_critic(int agent, const std::vector<LowTransition>& batch,
                         std::vector<net::ActorCritic>& agents, double gamma,
                         bool gated);

// Actor ascent for agent `i` through the augmented value, with the other
// agents' actions taken from the batch and agent i's action re-derived from
// its current policy. Entries where the pile is empty are excluded.
double update_low_actor(int agent, const std::vector<LowTransition>& batch,
                        std::vector<net::ActorCritic>& agents, double rho,
                        double epsilon, bool gated, bool clamp_at_zero,
                        int* actor_rows = nullptr);

UpdateStats update_low(int agent, const std::vector<LowTransition>& batch,
                       std::vector<net::ActorCritic>& agents, double gamma,
                       double rho, double epsilon, bool gated,
                       bool clamp_at_zero = false);

}  // namespace huca::lo
