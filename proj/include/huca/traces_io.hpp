#pragma once

#include <cstdint>
#include <string>

#include "huca/rng.hpp"
#include "huca/trace.hpp"

namespace huca::cli {

// Calendar helpers (proleptic Gregorian, no time zones).
std::int64_t days_from_civil(int year, int month, int day);
void civil_from_days(std::int64_t days, int* year, int* month, int* day);

// Reads one `timestamp,value` CSV with ISO-8601 timestamps, aggregating
// sub-hourly rows into hourly means. Throws ParseError (with line number)
// on malformed rows and AlignmentError on gaps of more than one hour.
struct HourlySeries {
  std::int64_t start_abs_hour = 0;  // hours since 1970-01-01T00:00
  std::vector<double> values;
};

HourlySeries read_hourly_csv(const std::string& path);

// Combines load and price files into one aligned TraceSet. Both series
// must cover exactly the same hours.
sim::TraceSet ingest_traces(const std::string& load_csv_path,
                            const std::string& price_csv_path);

// CSV export with 6 significant digits, the documented fixed precision.
void write_trace_csv(const std::string& path, const sim::Trace& trace,
                     const std::string& start_stamp);

std::string format_timestamp(std::int64_t abs_hour);

// Office-style synthetic profile: double-hump load (morning and afternoon
// peaks) and an afternoon price peak, both with seeded Gaussian noise and
// floored strictly positive.
struct SyntheticProfile {
  double base_load_kw = 200.0;
  double peak_load_kw = 650.0;
  double load_noise_kw = 20.0;
  double base_price_usd = 0.05;
  double peak_price_multiplier = 2.5;
  double price_noise_usd = 0.005;
};

sim::TraceSet generate_synthetic_traces(Rng& rng, int days,
                                        const SyntheticProfile& profile);

// FNV-1a over the trace contents; identifies the exact inputs of a run.
std::string trace_content_hash(const sim::TraceSet& traces);

}  // namespace huca::cli
