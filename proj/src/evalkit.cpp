#include "huca/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <queue>

#include "huca/errors.hpp"

namespace huca::eval {

double soc_fulfillment(const SessionOutcome& outcome) {
  if (outcome.session.soc_dep_expected <= 0.0)
    throw DomainError("fulfillment undefined for zero expected SoC");
  return 100.0 * outcome.soc_at_actual_departure / outcome.session.soc_dep_expected;
}

double soc_maintenance(const SessionOutcome& outcome) {
  const double denom = outcome.soc_at_actual_departure - outcome.session.soc_arr;
  if (denom == 0.0)
    throw DomainError("maintenance undefined: departure SoC equals arrival SoC");
  return 100.0 * (outcome.soc_at_midpoint - outcome.session.soc_arr) / denom;
}

double user_satisfaction(double fulfillment_pct, double maintenance_pct) {
  return 0.5 * (fulfillment_pct + maintenance_pct);
}

MetricsReport aggregate_metrics(const std::vector<SessionOutcome>& outcomes,
                                double energy_cost_usd, double peak_load_kw,
                                const sim::PenaltyConfig& penalty) {
  MetricsReport report;
  report.energy_cost_usd = energy_cost_usd;
  report.penalty_cost_usd = sim::penalty_cost(std::max(0.0, peak_load_kw), penalty);
  report.total_cost_usd = report.energy_cost_usd + report.penalty_cost_usd;
  report.n_sessions = static_cast<int>(outcomes.size());

  double ful_sum = 0.0, main_sum = 0.0, sat_sum = 0.0;
  int main_count = 0;
  for (const auto& o : outcomes) {
    const double f = soc_fulfillment(o);
    ful_sum += f;
    if (o.maintenance_defined()) {
      const double m = soc_maintenance(o);
      main_sum += m;
      sat_sum += user_satisfaction(f, m);
      ++main_count;
    } else {
      ++report.n_maintenance_excluded;
    }
  }
  if (!outcomes.empty()) {
    report.session_metrics_defined = true;
    report.soc_fulfillment_pct = ful_sum / static_cast<double>(outcomes.size());
    if (main_count > 0) {
      report.soc_maintenance_pct = main_sum / main_count;
      report.user_satisfaction_pct = sat_sum / main_count;
    } else {
      report.soc_maintenance_pct = std::numeric_limits<double>::quiet_NaN();
      report.user_satisfaction_pct = std::numeric_limits<double>::quiet_NaN();
    }
  } else {
    report.soc_fulfillment_pct = std::numeric_limits<double>::quiet_NaN();
    report.soc_maintenance_pct = std::numeric_limits<double>::quiet_NaN();
    report.user_satisfaction_pct = std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["penalty_cost_usd"] = penalty_cost_usd;
  j["energy_cost_usd"] = energy_cost_usd;
  j["total_cost_usd"] = total_cost_usd;
  const auto number_or_null = [](double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
  };
  j["soc_fulfillment_pct"] = number_or_null(soc_fulfillment_pct);
  j["soc_maintenance_pct"] = number_or_null(soc_maintenance_pct);
  j["user_satisfaction_pct"] = number_or_null(user_satisfaction_pct);
  j["n_sessions"] = n_sessions;
  j["n_maintenance_excluded"] = n_maintenance_excluded;
  j["session_metrics_defined"] = session_metrics_defined;
  return j.dump(1, '\t') + "\n";
}

std::vector<sim::EvSession> sample_horizon_sessions(const EvalConfig& cfg,
                                                    const sim::TraceSet& traces,
                                                    const sim::StationConfig& station) {
  Rng rng(derive_seed(cfg.seed, 20));
  std::vector<sim::EvSession> all;
  for (int day = 0; day < cfg.days; ++day) {
    auto sessions =
        sim::sample_ev_sessions(rng, day, cfg.scenario, station.n_piles, traces.start_dow);
    for (auto& s : sessions) all.push_back(std::move(s));
  }
  return all;
}

EvalResult evaluate(const trainer::PolicyBundle* bundle, const EvalConfig& cfg,
                    const sim::TraceSet& traces, const sim::StationConfig& station,
                    const sim::PenaltyConfig& penalty) {
  if (cfg.policy == BuiltinPolicy::trained && bundle == nullptr)
    throw DomainError("trained-policy evaluation requires a checkpoint bundle");
  if (traces.start_hour != 0)
    throw DomainError("evaluation requires traces starting at midnight");
  const std::int64_t horizon = static_cast<std::int64_t>(cfg.days) * 24;
  if (horizon > traces.size())
    throw DomainError("trace shorter than the evaluation horizon");

  const std::vector<sim::EvSession> sessions =
      sample_horizon_sessions(cfg, traces, station);
  Rng policy_rng(derive_seed(cfg.seed, 21));

  EvalResult result;
  result.outcomes.resize(sessions.size());
  for (std::size_t i = 0; i < sessions.size(); ++i)
    result.outcomes[i].session = sessions[i];

  sim::StationState state = sim::make_initial_state(station, traces, 0);
  // Which session each pile currently serves, by session index; -1 when free.
  std::vector<std::ptrdiff_t> serving(static_cast<std::size_t>(station.n_piles), -1);

  trainer::SlotContext ctx;
  const trainer::ExplorationNoise no_noise;

  for (std::int64_t t = 0; t < horizon; ++t) {
    // Dock this slot's arrivals. Sessions are grouped by day, one block of
    // n_piles per day, so only the current day's block can arrive now.
    const std::size_t day_begin =
        static_cast<std::size_t>(t / 24) * static_cast<std::size_t>(station.n_piles);
    const std::size_t day_end =
        std::min(sessions.size(), day_begin + static_cast<std::size_t>(station.n_piles));
    for (std::size_t si = day_begin; si < day_end; ++si) {
      if (sessions[si].t_arr.index != t) continue;
      for (auto& pile : state.piles) {
        if (pile.docked()) continue;
        pile.session = sessions[si];
        pile.soc_now = sessions[si].soc_arr;
        serving[static_cast<std::size_t>(pile.pile_id)] =
            static_cast<std::ptrdiff_t>(si);
        break;
      }
    }

    // Midpoint SoC is observed at the start of the midpoint slot.
    for (const auto& pile : state.piles) {
      if (!pile.docked()) continue;
      const auto si = serving[static_cast<std::size_t>(pile.pile_id)];
      if (si >= 0 && midpoint_slot(*pile.session) == t)
        result.outcomes[static_cast<std::size_t>(si)].soc_at_midpoint = pile.soc_now;
    }

    std::vector<double> powers(static_cast<std::size_t>(station.n_piles), 0.0);
    const int docked = state.n_docked();
    if (cfg.policy == BuiltinPolicy::trained) {
      const trainer::SlotDecision d =
          trainer::decide_slot(*bundle, state, traces, station, penalty, ctx, no_noise);
      powers = d.powers_kw;
      ctx.prev_power_sum_kw = 0.0;
      for (const double p : powers) ctx.prev_power_sum_kw += p;
      ctx.prev_low_q_mean = d.low_q_mean;
      ctx.prev_low_q_std = d.low_q_std;
    } else if (docked > 0) {
      const double p_pile = sim::per_pile_power_limit(station.p_station_max_kw, docked);
      for (int i = 0; i < station.n_piles; ++i) {
        const auto& pile = state.piles[static_cast<std::size_t>(i)];
        if (!pile.docked()) continue;
        const auto b = sim::power_boundaries(pile, state.slot, p_pile, station);
        const double a = cfg.policy == BuiltinPolicy::max_charge
                             ? 1.0
                             : policy_rng.uniform01();
        powers[static_cast<std::size_t>(i)] =
            lo::optimal_power(a, b.p_min_kw, b.p_max_kw);
      }
    }

    const sim::SlotLedger slot = sim::step(state, powers, traces, station);
    result.ledger.push_back({slot.slot.index, slot.building_load_kw, slot.price,
                             slot.total_load_kw, slot.pile_power_kw});

    for (const auto& dep : slot.departures) {
      const auto si = serving[static_cast<std::size_t>(dep.pile_id)];
      if (si >= 0) {
        result.outcomes[static_cast<std::size_t>(si)].soc_at_actual_departure =
            dep.soc_final;
        serving[static_cast<std::size_t>(dep.pile_id)] = -1;
      }
    }
  }

  result.metrics = aggregate_metrics(result.outcomes, state.cumulative_energy_cost,
                                     state.peak_load_kw, penalty);
  return result;
}

void write_ledger_csv(const std::string& path, const std::vector<SlotRecord>& ledger,
                      int n_piles) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  out << "slot,building_load,price,total_load";
  for (int i = 0; i < n_piles; ++i) out << ",pile_" << i << "_power";
  out << '\n';
  out.precision(10);
  for (const auto& r : ledger) {
    out << r.slot << ',' << r.building_load_kw << ',' << r.price << ','
        << r.total_load_kw;
    for (const double p : r.pile_power_kw) out << ',' << p;
    out << '\n';
  }
}

OracleResult greedy_oracle(const std::vector<sim::EvSession>& sessions,
                           const sim::TraceSet& traces,
                           const sim::StationConfig& station,
                           const sim::PenaltyConfig& penalty,
                           std::int64_t horizon_slots) {
  if (horizon_slots > traces.size())
    throw DomainError("trace shorter than the oracle horizon");
  const double dt = station.slot_hours;
  const double eta = station.charge_efficiency;

  std::vector<int> docked(static_cast<std::size_t>(horizon_slots), 0);
  for (const auto& s : sessions)
    for (std::int64_t t = s.t_arr.index;
         t < std::min(s.t_dep_actual.index, horizon_slots); ++t)
      ++docked[static_cast<std::size_t>(t)];

  std::vector<double> limit(static_cast<std::size_t>(horizon_slots), 0.0);
  for (std::int64_t t = 0; t < horizon_slots; ++t)
    if (docked[static_cast<std::size_t>(t)] > 0)
      limit[static_cast<std::size_t>(t)] = sim::per_pile_power_limit(
          station.p_station_max_kw, docked[static_cast<std::size_t>(t)]);

  OracleResult result;
  result.schedules.resize(sessions.size());
  result.station_power_kw.assign(static_cast<std::size_t>(horizon_slots), 0.0);
  result.outcomes.resize(sessions.size());

  using HeapEntry = std::pair<double, std::int64_t>;  // (price, slot)
  for (std::size_t si = 0; si < sessions.size(); ++si) {
    const sim::EvSession& s = sessions[si];
    SessionSchedule& sched = result.schedules[si];
    sched.power_kw.assign(static_cast<std::size_t>(horizon_slots), 0.0);

    const double required_kwh = (s.soc_dep_expected - s.soc_arr) * s.capacity_kwh / eta;
    const std::int64_t window_end = std::min(s.t_dep_actual.index, horizon_slots);

    std::vector<double> remaining(static_cast<std::size_t>(horizon_slots), 0.0);
    for (std::int64_t t = s.t_arr.index; t < window_end; ++t)
      remaining[static_cast<std::size_t>(t)] = limit[static_cast<std::size_t>(t)] * dt;

    std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>> heap;
    double total = 0.0;

    const auto draw_until = [&](double goal) {
      while (total < goal - 1e-12 && !heap.empty()) {
        const auto [price, slot] = heap.top();
        heap.pop();
        double& room = remaining[static_cast<std::size_t>(slot)];
        if (room <= 0.0) continue;
        const double take = std::min(room, goal - total);
        sched.power_kw[static_cast<std::size_t>(slot)] += take / dt;
        room -= take;
        total += take;
        if (room > 0.0) heap.push({price, slot});
      }
    };

    for (std::int64_t t = s.t_arr.index; t < window_end; ++t) {
      heap.push({traces.price.at(t), t});
      // Reachability floor: after this slot the target must still be
      // attainable at full pile power by the planned departure.
      const std::int64_t slots_left = std::max<std::int64_t>(
          s.t_dep_planned.index - t - 1, 0);
      const double lb = std::max(
          station.soc_hw_min,
          s.soc_dep_expected - static_cast<double>(slots_left) *
                                   limit[static_cast<std::size_t>(t)] * eta * dt /
                                   s.capacity_kwh);
      const double req =
          std::max(0.0, (lb - s.soc_arr) * s.capacity_kwh / eta);
      draw_until(std::min(req, required_kwh));
    }
    draw_until(required_kwh);
    sched.feasible = total >= required_kwh - 1e-9;
    result.all_feasible = result.all_feasible && sched.feasible;

    for (std::int64_t t = 0; t < horizon_slots; ++t)
      result.station_power_kw[static_cast<std::size_t>(t)] +=
          sched.power_kw[static_cast<std::size_t>(t)];

    // SoC trajectory implied by the schedule.
    SessionOutcome& outcome = result.outcomes[si];
    outcome.session = s;
    const std::int64_t mid = midpoint_slot(s);
    double soc = s.soc_arr;
    for (std::int64_t t = s.t_arr.index; t < window_end; ++t) {
      if (t == mid) outcome.soc_at_midpoint = soc;
      soc += sched.power_kw[static_cast<std::size_t>(t)] * dt * eta / s.capacity_kwh;
    }
    if (mid >= window_end) outcome.soc_at_midpoint = soc;
    outcome.soc_at_actual_departure = soc;
  }

  double energy_cost = 0.0;
  double peak = 0.0;
  for (std::int64_t t = 0; t < horizon_slots; ++t) {
    const double total_load =
        traces.load.at(t) + result.station_power_kw[static_cast<std::size_t>(t)];
    peak = std::max(peak, total_load);
    energy_cost += traces.price.at(t) * std::max(0.0, total_load) * dt;
  }
  result.metrics = aggregate_metrics(result.outcomes, energy_cost, peak, penalty);
  return result;
}

}  // namespace huca::eval
