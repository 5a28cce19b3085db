#pragma once

#include <vector>

#include "huca/netcore.hpp"
#include "huca/trace.hpp"

namespace huca::hi {

// Observation of the station-level agent: price context, building load,
// EV headcount and energy flow, plus a summary of the low-level critics
// from the previous slot.
struct HighState {
  double price_now = 0.0;
  double price_avg_past_n = 0.0;
  double price_historical = 0.0;
  double load_now = 0.0;
  int ev_count = 0;
  double ev_energy_delivered_kw = 0.0;  // signed, previous slot
  double low_critic_mean = 0.0;
  double low_critic_std = 0.0;
};

constexpr int kHighStateDim = 8;

struct HighTransition {
  HighState s;
  double a = 0.0;  // in [0,1]
  double r = 0.0;
  HighState s_next;
  bool terminal = false;
};

// Fixed input normalization for the networks. Chosen once for the domain's
// magnitudes (prices of cents, loads of hundreds of kW, returns of tens).
constexpr double kPriceScale = 10.0;
constexpr double kLoadScale = 0.01;
constexpr double kValueScale = 0.1;

Eigen::VectorXd encode(const HighState& s, int n_piles);

// Price-side context from the trace: mean of the prices in the trailing
// n-hour window ending at `index` (shorter near the start), and the price
// at the same hour of the same weekday one week earlier, falling back to
// the previous day and then to the current price.
HighState build_high_state(const sim::TraceSet& traces, std::int64_t index,
                           int n_hours, int ev_count,
                           double ev_energy_delivered_kw, double low_critic_mean,
                           double low_critic_std);

// Eq.-style threshold: 1 (charge) iff a_h >= 0.5, else 0 (discharge).
int discretize_action(double a_h);

// Episode-scoped cost ledger feeding the high-level reward: the running
// energy cost and the running sum of load above contract capacity.
struct CostLedger {
  double energy_cost_usd = 0.0;
  double excess_kw_sum = 0.0;

  void add_slot(double total_load_kw, double price, double contract_kw,
                double slot_hours) {
    energy_cost_usd += price * std::max(0.0, total_load_kw) * slot_hours;
    excess_kw_sum += std::max(0.0, total_load_kw - contract_kw);
  }
};

// r_h = kappa * (-cost_so_far - phi * excess_so_far) - |load_now - load_avg|
double high_reward(const CostLedger& ledger, double load_now_kw,
                   double load_avg_kw, double kappa, double phi);

// Deterministic policy value: actor emits a raw logit squashed to [0,1].
double policy_action(const net::Mlp& actor, const HighState& s, int n_piles);

double high_critic_target(double r, const HighState& s_next,
                          const net::Mlp& target_actor,
                          const net::Mlp& target_critic, double gamma,
                          bool terminal, int n_piles);

struct UpdateStats {
  double critic_loss = 0.0;
  double actor_objective = 0.0;
};

// One critic regression step toward the bootstrapped targets and one actor
// ascent step through the critic, both over the given minibatch.
UpdateStats update_high(const std::vector<HighTransition>& batch,
                        net::ActorCritic& nets, double gamma, int n_piles);

}  // namespace huca::hi
