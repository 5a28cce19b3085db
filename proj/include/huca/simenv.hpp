#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "huca/rng.hpp"
#include "huca/trace.hpp"

namespace huca::sim {

// One EV's charging request. Actual departure may be earlier than planned
// (uncertain scenario) but never earlier than one slot after arrival, so
// every EV is controllable for at least one slot.
struct EvSession {
  TimeSlot t_arr;
  TimeSlot t_dep_planned;
  TimeSlot t_dep_actual;
  double soc_arr = 0.0;
  double soc_dep_expected = 0.0;
  double capacity_kwh = 0.0;
};

struct PileState {
  int pile_id = 0;
  std::optional<EvSession> session;
  double soc_now = 0.0;  // meaningful iff session is present

  bool docked() const { return session.has_value(); }
};

struct StationConfig {
  int n_piles = 10;
  double p_station_max_kw = 150.0;
  double charge_efficiency = 0.95;   // applied as multiply-on-charge, divide-on-discharge
  double soc_hw_min = 0.0;
  double soc_hw_max = 1.0;
  double slot_hours = 1.0;
  bool allow_discharge = true;       // false floors every pile's lower power bound at 0
};

// Tiered demand-charge penalty: 2x the base rate on excess up to
// tier_threshold * contract, 3x beyond that, zero below contract.
struct PenaltyConfig {
  double contract_kw = 700.0;
  double base_rate_usd_per_kw = 15.0;
  double tier_threshold = 0.1;
};

struct StationState {
  TimeSlot slot;
  std::vector<PileState> piles;
  double building_load_kw = 0.0;
  double price = 0.0;
  double peak_load_kw = 0.0;           // running max of total load
  double cumulative_energy_cost = 0.0;  // USD

  int n_docked() const {
    int n = 0;
    for (const auto& p : piles) n += p.docked() ? 1 : 0;
    return n;
  }
};

enum class Scenario { certain, uncertain };

struct PowerBounds {
  double p_min_kw = 0.0;
  double p_max_kw = 0.0;
};

struct SocEnvelope {
  double lower = 0.0;
  double upper = 1.0;
};

struct SocUpdate {
  double soc = 0.0;
  bool clamped = false;  // set when hardware clamping moved the value by > 1e-9
};

struct Departure {
  int pile_id = 0;
  EvSession session;
  double soc_final = 0.0;
};

struct SlotLedger {
  TimeSlot slot;
  double building_load_kw = 0.0;
  double price = 0.0;
  double total_load_kw = 0.0;
  std::vector<double> pile_power_kw;
  std::vector<Departure> departures;
  bool clamp_fault = false;
};

// Station-wide per-pile limit for the current slot. Throws DomainEmpty when
// no EV is docked; callers skip power control on empty slots.
double per_pile_power_limit(double p_station_max_kw, int n_docked);

// Reachability envelope for the end-of-slot SoC. The upper bound is the
// hardware cap; the lower bound is the minimum SoC from which the departure
// target is still reachable at full pile power by the planned departure.
SocEnvelope soc_envelope(const EvSession& session, const TimeSlot& slot,
                         double p_pile_kw, const StationConfig& cfg);

// Signed power bounds for one docked pile at one slot. Efficiency divides
// the charge-side headroom and multiplies the discharge-side floor so that
// both bounds are grid-side kW.
PowerBounds power_boundaries(const PileState& pile, const TimeSlot& slot,
                             double p_pile_kw, const StationConfig& cfg);

// Battery update for one slot of signed power, clamped to the hardware SoC
// window. Charging multiplies by efficiency, discharging divides.
SocUpdate apply_power(const PileState& pile, double power_kw,
                      const StationConfig& cfg);

double penalty_cost(double peak_load_kw, const PenaltyConfig& cfg);

// One session per pile for the given day. Arrival/departure hours and SoC
// levels follow clipped normals; the uncertain scenario draws the actual
// departure uniformly from the integer slots in [t_arr+1, t_dep_planned).
std::vector<EvSession> sample_ev_sessions(Rng& rng, int day, Scenario scenario,
                                          int n_piles, int start_dow = 0);

StationState make_initial_state(const StationConfig& cfg, const TraceSet& traces,
                                std::int64_t start_index);

// Docks every session whose arrival slot equals the current slot onto the
// first free pile. Returns the number docked.
int dock_arrivals(StationState& state, const std::vector<EvSession>& sessions);

// Advances the world one slot: applies the per-pile powers, accrues energy
// cost on the grid-side total load (floored at zero, no feed-in revenue),
// updates the running peak, and undocks EVs whose actual departure is the
// next slot. Throws BoundaryViolation if any power is outside its pile's
// bounds (test hook; a trained system never triggers it).
SlotLedger step(StationState& state, const std::vector<double>& powers_kw,
                const TraceSet& traces, const StationConfig& cfg);

}  // namespace huca::sim
