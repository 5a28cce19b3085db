#include "huca/simenv.hpp"

#include <algorithm>
#include <cmath>

#include "huca/errors.hpp"

namespace huca::sim {

double per_pile_power_limit(double p_station_max_kw, int n_docked) {
  if (n_docked <= 0)
    throw DomainEmpty("per-pile power limit undefined with no docked EVs");
  return p_station_max_kw / static_cast<double>(n_docked);
}

SocEnvelope soc_envelope(const EvSession& session, const TimeSlot& slot,
                         double p_pile_kw, const StationConfig& cfg) {
  SocEnvelope env;
  env.upper = cfg.soc_hw_max;
  // Slots left after the current one in which the pile can still charge.
  const std::int64_t remaining = session.t_dep_planned.index - slot.index - 1;
  const double full_slot_gain = p_pile_kw * cfg.charge_efficiency * cfg.slot_hours /
                                session.capacity_kwh;
  const double lb = session.soc_dep_expected -
                    static_cast<double>(std::max<std::int64_t>(remaining, 0)) * full_slot_gain;
  env.lower = std::min(std::max(cfg.soc_hw_min, lb), env.upper);
  return env;
}

PowerBounds power_boundaries(const PileState& pile, const TimeSlot& slot,
                             double p_pile_kw, const StationConfig& cfg) {
  if (!pile.docked())
    throw DomainError("power boundaries require a docked session");
  const EvSession& s = *pile.session;
  const SocEnvelope env = soc_envelope(s, slot, p_pile_kw, cfg);
  const double c = s.capacity_kwh;
  const double eta = cfg.charge_efficiency;
  const double dt = cfg.slot_hours;

  PowerBounds b;
  b.p_max_kw = std::min(p_pile_kw, (env.upper - pile.soc_now) * c / (eta * dt));
  b.p_min_kw = std::max(-p_pile_kw, (env.lower - pile.soc_now) * c * eta / dt);
  if (!cfg.allow_discharge) b.p_min_kw = std::max(b.p_min_kw, 0.0);
  // When a shrinking pile limit makes the envelope floor unreachable this
  // slot, the floor falls back to full power rather than exceeding it.
  b.p_min_kw = std::min(b.p_min_kw, b.p_max_kw);
  return b;
}

SocUpdate apply_power(const PileState& pile, double power_kw,
                      const StationConfig& cfg) {
  if (!pile.docked()) throw DomainError("apply_power requires a docked session");
  const double c = pile.session->capacity_kwh;
  const double eta = cfg.charge_efficiency;
  const double dt = cfg.slot_hours;

  const double delta = power_kw >= 0.0 ? power_kw * dt * eta / c
                                       : power_kw * dt / (eta * c);
  SocUpdate out;
  const double raw = pile.soc_now + delta;
  out.soc = std::clamp(raw, cfg.soc_hw_min, cfg.soc_hw_max);
  out.clamped = std::abs(out.soc - raw) > 1e-9;
  return out;
}

double penalty_cost(double peak_load_kw, const PenaltyConfig& cfg) {
  const double excess = std::max(0.0, peak_load_kw - cfg.contract_kw);
  const double tier_cap = cfg.tier_threshold * cfg.contract_kw;
  return 2.0 * cfg.base_rate_usd_per_kw * std::min(excess, tier_cap) +
         3.0 * cfg.base_rate_usd_per_kw * std::max(0.0, excess - tier_cap);
}

std::vector<EvSession> sample_ev_sessions(Rng& rng, int day, Scenario scenario,
                                          int n_piles, int start_dow) {
  std::vector<EvSession> sessions;
  sessions.reserve(static_cast<std::size_t>(n_piles));
  const std::int64_t day_base = static_cast<std::int64_t>(day) * 24;

  for (int i = 0; i < n_piles; ++i) {
    std::int64_t arr_h = 0, dep_h = 0;
    double soc_arr = 0.0, soc_dep = 0.0;
    do {
      arr_h = std::llround(std::clamp(rng.normal(9.0, 1.0), 7.0, 12.0));
      dep_h = std::llround(std::clamp(rng.normal(19.0, 1.0), 16.0, 23.0));
      soc_arr = std::clamp(rng.normal(0.4, 0.1), 0.3, 0.6);
      soc_dep = std::clamp(rng.normal(0.8, 0.1), 0.6, 0.9);
    } while (arr_h >= dep_h || soc_arr >= soc_dep);

    EvSession s;
    s.t_arr = make_slot(day_base + arr_h, 0, start_dow);
    s.t_dep_planned = make_slot(day_base + dep_h, 0, start_dow);
    s.soc_arr = soc_arr;
    s.soc_dep_expected = soc_dep;
    s.capacity_kwh = 60.0;
    if (scenario == Scenario::certain) {
      s.t_dep_actual = s.t_dep_planned;
    } else {
      const std::int64_t actual =
          rng.uniform_int(day_base + arr_h + 1, day_base + dep_h - 1);
      s.t_dep_actual = make_slot(actual, 0, start_dow);
    }
    sessions.push_back(s);
  }
  return sessions;
}

StationState make_initial_state(const StationConfig& cfg, const TraceSet& traces,
                                std::int64_t start_index) {
  StationState st;
  st.slot = traces.slot(start_index);
  st.piles.resize(static_cast<std::size_t>(cfg.n_piles));
  for (int i = 0; i < cfg.n_piles; ++i) st.piles[static_cast<std::size_t>(i)].pile_id = i;
  st.building_load_kw = traces.load.at(start_index);
  st.price = traces.price.at(start_index);
  return st;
}

int dock_arrivals(StationState& state, const std::vector<EvSession>& sessions) {
  int docked = 0;
  for (const EvSession& s : sessions) {
    if (s.t_arr.index != state.slot.index) continue;
    for (auto& pile : state.piles) {
      if (pile.docked()) continue;
      pile.session = s;
      pile.soc_now = s.soc_arr;
      ++docked;
      break;
    }
  }
  return docked;
}

SlotLedger step(StationState& state, const std::vector<double>& powers_kw,
                const TraceSet& traces, const StationConfig& cfg) {
  if (powers_kw.size() != state.piles.size())
    throw ShapeError("one power per pile required");

  SlotLedger ledger;
  ledger.slot = state.slot;
  ledger.building_load_kw = state.building_load_kw;
  ledger.price = state.price;
  ledger.pile_power_kw = powers_kw;

  const int docked = state.n_docked();
  const double p_pile = docked > 0 ? per_pile_power_limit(cfg.p_station_max_kw, docked) : 0.0;
  constexpr double kTol = 1e-9;

  double ev_power_sum = 0.0;
  for (std::size_t i = 0; i < state.piles.size(); ++i) {
    PileState& pile = state.piles[i];
    const double p = powers_kw[i];
    if (!pile.docked()) {
      if (std::abs(p) > kTol)
        throw BoundaryViolation("nonzero power on empty pile " + std::to_string(i));
      continue;
    }
    const PowerBounds b = power_boundaries(pile, state.slot, p_pile, cfg);
    if (p < b.p_min_kw - kTol || p > b.p_max_kw + kTol)
      throw BoundaryViolation("power " + std::to_string(p) + " outside [" +
                              std::to_string(b.p_min_kw) + ", " +
                              std::to_string(b.p_max_kw) + "] on pile " +
                              std::to_string(i));
    const SocUpdate upd = apply_power(pile, p, cfg);
    pile.soc_now = upd.soc;
    ledger.clamp_fault = ledger.clamp_fault || upd.clamped;
    ev_power_sum += p;
  }

  const double total_load = state.building_load_kw + ev_power_sum;
  ledger.total_load_kw = total_load;
  state.peak_load_kw = std::max(state.peak_load_kw, total_load);
  state.cumulative_energy_cost +=
      state.price * std::max(0.0, total_load) * cfg.slot_hours;

  const std::int64_t next_index = state.slot.index + 1;
  for (auto& pile : state.piles) {
    if (!pile.docked()) continue;
    if (pile.session->t_dep_actual.index == next_index) {
      ledger.departures.push_back({pile.pile_id, *pile.session, pile.soc_now});
      pile.session.reset();
      pile.soc_now = 0.0;
    }
  }

  state.slot = traces.slot(next_index);
  state.building_load_kw = traces.load.at_clamped(next_index);
  state.price = traces.price.at_clamped(next_index);
  return ledger;
}

}  // namespace huca::sim
