#include "huca/traces_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>

#include "huca/errors.hpp"

namespace huca::cli {

std::int64_t days_from_civil(int year, int month, int day) {
  year -= month <= 2;
  const std::int64_t era = (year >= 0 ? year : year - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(year - era * 400);
  const unsigned doy =
      (153u * static_cast<unsigned>(month + (month > 2 ? -3 : 9)) + 2u) / 5u +
      static_cast<unsigned>(day) - 1u;
  const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t days, int* year, int* month, int* day) {
  days += 719468;
  const std::int64_t era = (days >= 0 ? days : days - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(days - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  *day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  *month = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
  *year = static_cast<int>(y + (*month <= 2 ? 1 : 0));
}

namespace {

// Parses `YYYY-MM-DD[T ]HH:MM[:SS][Z]`; returns minutes since the epoch.
bool parse_timestamp(const std::string& text, std::int64_t* minutes) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char sep = 0;
  const int n = std::sscanf(text.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep,
                            &h, &mi, &s);
  if (n < 6 || (sep != 'T' && sep != ' ')) return false;
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59)
    return false;
  *minutes = days_from_civil(y, mo, d) * 1440 + h * 60 + mi;
  return true;
}

int weekday_from_abs_hour(std::int64_t abs_hour) {
  // 1970-01-01 was a Thursday; weekday 0 is Monday.
  const std::int64_t days = abs_hour / 24;
  return static_cast<int>(((days % 7) + 7 + 3) % 7);
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

HourlySeries read_hourly_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");

  // hour -> (sum, count) keeps rows mean-aggregated per hour.
  std::map<std::int64_t, std::pair<double, int>> hours;
  std::string line;
  std::size_t line_no = 0;
  bool header_checked = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string row = trim(line);
    if (row.empty()) continue;
    if (!header_checked) {
      header_checked = true;
      if (row.rfind("timestamp", 0) == 0) continue;  // optional header
    }
    const auto comma = row.find(',');
    if (comma == std::string::npos)
      throw ParseError(path + ":" + std::to_string(line_no) + ": missing comma");
    std::int64_t minutes = 0;
    if (!parse_timestamp(trim(row.substr(0, comma)), &minutes))
      throw ParseError(path + ":" + std::to_string(line_no) + ": bad timestamp '" +
                       trim(row.substr(0, comma)) + "'");
    const std::string value_text = trim(row.substr(comma + 1));
    char* end = nullptr;
    const double value = std::strtod(value_text.c_str(), &end);
    if (end == value_text.c_str() || *end != '\0' || !std::isfinite(value))
      throw ParseError(path + ":" + std::to_string(line_no) + ": bad value '" +
                       value_text + "'");
    auto& bucket = hours[minutes / 60];
    bucket.first += value;
    bucket.second += 1;
  }
  if (hours.empty()) throw ParseError(path + ": no data rows");

  HourlySeries series;
  series.start_abs_hour = hours.begin()->first;
  std::int64_t expected = series.start_abs_hour;
  for (const auto& [hour, bucket] : hours) {
    if (hour != expected)
      throw AlignmentError(path + ": gap of " + std::to_string(hour - expected + 1) +
                           "h before " + format_timestamp(hour));
    series.values.push_back(bucket.first / bucket.second);
    ++expected;
  }
  return series;
}

sim::TraceSet ingest_traces(const std::string& load_csv_path,
                            const std::string& price_csv_path) {
  const HourlySeries load = read_hourly_csv(load_csv_path);
  const HourlySeries price = read_hourly_csv(price_csv_path);
  if (load.start_abs_hour != price.start_abs_hour ||
      load.values.size() != price.values.size())
    throw AlignmentError("load covers " + format_timestamp(load.start_abs_hour) +
                         "+" + std::to_string(load.values.size()) +
                         "h, price covers " + format_timestamp(price.start_abs_hour) +
                         "+" + std::to_string(price.values.size()) + "h");
  for (const double v : load.values)
    if (v < 0.0) throw ParseError(load_csv_path + ": negative load value");

  sim::TraceSet traces;
  traces.load.values = load.values;
  traces.price.values = price.values;
  traces.start_hour = static_cast<int>(load.start_abs_hour % 24);
  traces.start_dow = weekday_from_abs_hour(load.start_abs_hour);
  traces.start_stamp = format_timestamp(load.start_abs_hour);
  return traces;
}

std::string format_timestamp(std::int64_t abs_hour) {
  int y = 0, mo = 0, d = 0;
  civil_from_days(abs_hour / 24, &y, &mo, &d);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:00:00", y, mo, d,
                static_cast<int>(abs_hour % 24));
  return buf;
}

void write_trace_csv(const std::string& path, const sim::Trace& trace,
                     const std::string& start_stamp) {
  std::int64_t minutes = 0;
  if (!parse_timestamp(start_stamp, &minutes))
    throw ParseError("bad start timestamp '" + start_stamp + "'");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  out << "timestamp,value\n";
  char buf[64];
  for (std::int64_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6g", trace.values[static_cast<std::size_t>(i)]);
    out << format_timestamp(minutes / 60 + i) << ',' << buf << '\n';
  }
}

sim::TraceSet generate_synthetic_traces(Rng& rng, int days,
                                        const SyntheticProfile& profile) {
  if (days < 1) throw DomainError("synthetic trace needs at least one day");

  // Monday 2018-07-02 00:00; keeps weekday lookups meaningful.
  constexpr std::int64_t kStartAbsHour = 17713LL * 24;

  const auto bump = [](double h, double center) {
    const double d = h - center;
    return std::exp(-d * d / 8.0);
  };
  const double bump_peak = 1.0 + bump(10.0, 15.0);  // value of the sum at h=10

  sim::TraceSet traces;
  traces.start_hour = 0;
  traces.start_dow = weekday_from_abs_hour(kStartAbsHour);
  traces.start_stamp = format_timestamp(kStartAbsHour);
  traces.load.values.reserve(static_cast<std::size_t>(days) * 24);
  traces.price.values.reserve(static_cast<std::size_t>(days) * 24);

  for (int day = 0; day < days; ++day) {
    for (int h = 0; h < 24; ++h) {
      const double hh = static_cast<double>(h);
      const double shape = (bump(hh, 10.0) + bump(hh, 15.0)) / bump_peak;
      double load = profile.base_load_kw +
                    (profile.peak_load_kw - profile.base_load_kw) * shape;
      load += profile.load_noise_kw * rng.normal(0.0, 1.0);
      traces.load.values.push_back(std::max(load, 1.0));

      double price =
          profile.base_price_usd *
          (1.0 + (profile.peak_price_multiplier - 1.0) * bump(hh, 16.0));
      price += profile.price_noise_usd * rng.normal(0.0, 1.0);
      traces.price.values.push_back(std::max(price, 1e-3));
    }
  }
  return traces;
}

std::string trace_content_hash(const sim::TraceSet& traces) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  const auto mix_bytes = [&hash](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      hash ^= bytes[i];
      hash *= 0x100000001b3ull;
    }
  };
  const auto mix_trace = [&](const sim::Trace& t) {
    for (const double v : t.values) mix_bytes(&v, sizeof v);
  };
  mix_trace(traces.load);
  mix_trace(traces.price);
  mix_bytes(traces.start_stamp.data(), traces.start_stamp.size());
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace huca::cli
