#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "huca/simenv.hpp"
#include "huca/trainer.hpp"

namespace huca::eval {

// Per-session record of what the charger achieved: the SoC when the EV
// actually left and the SoC at the midpoint slot of its stay.
struct SessionOutcome {
  sim::EvSession session;
  double soc_at_actual_departure = 0.0;
  double soc_at_midpoint = 0.0;

  bool maintenance_defined() const {
    return soc_at_actual_departure != session.soc_arr;
  }
};

inline std::int64_t midpoint_slot(const sim::EvSession& s) {
  return (s.t_arr.index + s.t_dep_actual.index) / 2;  // ties broken downward
}

// 100 * soc_at_actual_departure / soc_dep_expected. Ratios are not clipped;
// overshoot reads above 100.
double soc_fulfillment(const SessionOutcome& outcome);

// 100 * (soc_mid - soc_arr) / (soc_at_actual_departure - soc_arr).
// Undefined when the departure SoC equals the arrival SoC; callers exclude
// such sessions and count them.
double soc_maintenance(const SessionOutcome& outcome);

double user_satisfaction(double fulfillment_pct, double maintenance_pct);

struct MetricsReport {
  double penalty_cost_usd = 0.0;
  double energy_cost_usd = 0.0;
  double total_cost_usd = 0.0;
  double soc_fulfillment_pct = 0.0;
  double soc_maintenance_pct = 0.0;
  double user_satisfaction_pct = 0.0;
  int n_sessions = 0;
  int n_maintenance_excluded = 0;
  bool session_metrics_defined = false;  // false when no session qualifies

  std::string to_json() const;
};

MetricsReport aggregate_metrics(const std::vector<SessionOutcome>& outcomes,
                                double energy_cost_usd, double peak_load_kw,
                                const sim::PenaltyConfig& penalty);

enum class BuiltinPolicy { trained, random, max_charge };

struct EvalConfig {
  int days = 14;
  sim::Scenario scenario = sim::Scenario::certain;
  std::uint64_t seed = 0;
  BuiltinPolicy policy = BuiltinPolicy::trained;
};

struct SlotRecord {
  std::int64_t slot = 0;
  double building_load_kw = 0.0;
  double price = 0.0;
  double total_load_kw = 0.0;
  std::vector<double> pile_power_kw;
};

struct EvalResult {
  MetricsReport metrics;
  std::vector<SlotRecord> ledger;
  std::vector<SessionOutcome> outcomes;
};

// Greedy (noise-free) execution of a policy over the horizon. Sessions are
// drawn per day from the seed; the demand-charge penalty is charged once
// from the horizon's peak load. `bundle` may be null for builtin baselines.
EvalResult evaluate(const trainer::PolicyBundle* bundle, const EvalConfig& cfg,
                    const sim::TraceSet& traces, const sim::StationConfig& station,
                    const sim::PenaltyConfig& penalty);

void write_ledger_csv(const std::string& path, const std::vector<SlotRecord>& ledger,
                      int n_piles);

// Price-greedy charging-only oracle with full knowledge of the horizon.
// Fills each session's required grid energy into its cheapest slots subject
// to the per-slot pile limit and the reachability envelope; exact for the
// penalty-free charging-only relaxation.
struct SessionSchedule {
  std::vector<double> power_kw;  // one entry per slot of the horizon
  bool feasible = true;
};

struct OracleResult {
  std::vector<SessionSchedule> schedules;  // aligned with the session list
  std::vector<double> station_power_kw;    // summed over sessions, per slot
  MetricsReport metrics;
  std::vector<SessionOutcome> outcomes;
  bool all_feasible = true;
};

OracleResult greedy_oracle(const std::vector<sim::EvSession>& sessions,
                           const sim::TraceSet& traces,
                           const sim::StationConfig& station,
                           const sim::PenaltyConfig& penalty,
                           std::int64_t horizon_slots);

// Session list for an evaluation horizon, drawn exactly as evaluate() does.
std::vector<sim::EvSession> sample_horizon_sessions(const EvalConfig& cfg,
                                                    const sim::TraceSet& traces,
                                                    const sim::StationConfig& station);

}  // namespace huca::eval
