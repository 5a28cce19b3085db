#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "huca/errors.hpp"

namespace huca::sim {

// One hour of simulated time. `index` counts hours since the start of the
// trace; hour_of_day and day_of_week are derived from the trace's start
// offsets so that calendar lookups (same hour last week) stay O(1).
struct TimeSlot {
  std::int64_t index = 0;
  int hour_of_day = 0;
  int day_of_week = 0;  // 0 = Monday
};

inline TimeSlot make_slot(std::int64_t index, int start_hour, int start_dow) {
  TimeSlot s;
  s.index = index;
  const std::int64_t abs_hour = start_hour + index;
  s.hour_of_day = static_cast<int>(abs_hour % 24);
  s.day_of_week = static_cast<int>((start_dow + abs_hour / 24) % 7);
  return s;
}

// Hourly series of non-negative values (kW for load, USD/kWh for price).
struct Trace {
  std::vector<double> values;

  std::int64_t size() const { return static_cast<std::int64_t>(values.size()); }

  double at(std::int64_t idx) const {
    if (idx < 0 || idx >= size())
      throw DomainError("trace index " + std::to_string(idx) + " out of range");
    return values[static_cast<std::size_t>(idx)];
  }

  // Clamped read, used only for terminal-state snapshots one past the
  // last simulated slot.
  double at_clamped(std::int64_t idx) const {
    if (values.empty()) return 0.0;
    if (idx < 0) idx = 0;
    if (idx >= size()) idx = size() - 1;
    return values[static_cast<std::size_t>(idx)];
  }
};

// Load and price aligned on the same hourly clock.
struct TraceSet {
  Trace load;
  Trace price;
  int start_hour = 0;
  int start_dow = 0;
  std::string start_stamp;  // ISO-8601 of slot 0, informational

  TimeSlot slot(std::int64_t index) const {
    return make_slot(index, start_hour, start_dow);
  }

  std::int64_t size() const { return load.size(); }

  // Index of the first slot at 00:00; day-long episodes start there.
  std::int64_t first_midnight() const {
    return start_hour == 0 ? 0 : 24 - start_hour;
  }

  std::int64_t whole_days() const {
    const std::int64_t usable = size() - first_midnight();
    return usable > 0 ? usable / 24 : 0;
  }
};

}  // namespace huca::sim
