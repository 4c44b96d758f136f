#include "loadcnn/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <unordered_set>

#include "loadcnn/rng.hpp"

namespace loadcnn {

namespace {

constexpr int kSlotsPerDay = 48;
constexpr int kHistoryDays = 7;

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& what) {
  throw DataError("line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

std::vector<MeterReading> parse_readings(std::istream& in) {
  std::vector<MeterReading> readings;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;

    const std::size_t c1 = line.find(',');
    const std::size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos ||
        line.find(',', c2 + 1) != std::string::npos) {
      parse_fail(line_no, "expected meter_id,daycode,kwh, got '" + line + "'");
    }
    MeterReading r;
    r.meter_id = line.substr(0, c1);
    const std::string daycode = line.substr(c1 + 1, c2 - c1 - 1);
    const std::string kwh_text = line.substr(c2 + 1);
    if (r.meter_id.empty()) parse_fail(line_no, "empty meter id");
    if (daycode.size() != 5 || !all_digits(daycode)) {
      parse_fail(line_no, "daycode must be 5 digits, got '" + daycode + "'");
    }
    const int code = std::stoi(daycode);
    r.day_index = code / 100;
    r.slot = code % 100;
    if (r.day_index < 1) parse_fail(line_no, "day index must be >= 1 in '" + daycode + "'");
    if (r.slot < 1 || r.slot > kSlotsPerDay) {
      parse_fail(line_no, "slot " + std::to_string(r.slot) + " out of range 1..48");
    }
    char* end = nullptr;
    r.kwh = std::strtod(kwh_text.c_str(), &end);
    if (end == kwh_text.c_str() || *end != '\0') {
      parse_fail(line_no, "malformed kwh value '" + kwh_text + "'");
    }
    if (!std::isfinite(r.kwh) || r.kwh < 0.0) {
      parse_fail(line_no, "kwh must be finite and non-negative, got '" + kwh_text + "'");
    }
    readings.push_back(std::move(r));
  }
  return readings;
}

void serialize_readings(const std::vector<MeterReading>& readings, std::ostream& out) {
  char buf[64];
  for (const MeterReading& r : readings) {
    std::snprintf(buf, sizeof(buf), ",%03d%02d,%.3f\n", r.day_index, r.slot, r.kwh);
    out << r.meter_id << buf;
  }
}

SeriesBuildResult build_series(const std::vector<MeterReading>& readings, int expected_days,
                               Date epoch, double max_missing_fraction,
                               const std::vector<std::string>& allow_list) {
  const std::unordered_set<std::string> allowed(allow_list.begin(), allow_list.end());

  std::map<std::string, std::vector<const MeterReading*>> by_meter;  // sorted meter-id order
  int max_day = 0;
  for (const MeterReading& r : readings) {
    if (!allowed.empty() && !allowed.count(r.meter_id)) continue;
    by_meter[r.meter_id].push_back(&r);
    max_day = std::max(max_day, r.day_index);
  }
  if (by_meter.empty()) throw DataError("no readings after filtering");
  if (expected_days <= 0) expected_days = max_day;

  SeriesBuildResult result;
  const std::size_t slots = static_cast<std::size_t>(expected_days) * kSlotsPerDay;
  for (const auto& [meter_id, recs] : by_meter) {
    std::vector<double> values(slots, -1.0);  // -1 marks a missing slot
    std::size_t missing = slots;
    for (const MeterReading* r : recs) {
      if (r->day_index > expected_days) continue;
      const std::size_t idx =
          static_cast<std::size_t>(r->day_index - 1) * kSlotsPerDay + (r->slot - 1);
      if (values[idx] < 0.0) --missing;
      values[idx] = r->kwh;
    }
    const double fraction = static_cast<double>(missing) / static_cast<double>(slots);
    if (fraction > max_missing_fraction) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.1f%%", fraction * 100.0);
      result.warnings.push_back("customer " + meter_id + " dropped: " + buf +
                                " of slots missing");
      continue;
    }
    // Gap policy: same slot one week prior, else one day prior, else 0.
    // Ascending scan, so earlier fills feed later ones.
    for (std::size_t i = 0; i < slots; ++i) {
      if (values[i] >= 0.0) continue;
      const std::size_t week = static_cast<std::size_t>(kHistoryDays) * kSlotsPerDay;
      if (i >= week && values[i - week] >= 0.0) {
        values[i] = values[i - week];
      } else if (i >= kSlotsPerDay && values[i - kSlotsPerDay] >= 0.0) {
        values[i] = values[i - kSlotsPerDay];
      } else {
        values[i] = 0.0;
      }
    }
    CustomerSeries series;
    series.customer_index = static_cast<int>(result.series.size());
    series.start_date = epoch;
    series.values = std::move(values);
    result.series.push_back(std::move(series));
    result.meter_ids.push_back(meter_id);
  }
  if (result.series.empty()) throw DataError("all customers dropped for missing data");
  return result;
}

std::vector<Window> build_windows(const CustomerSeries& series, int stride_days) {
  if (stride_days < 1) throw ValueError("stride_days must be >= 1");
  const int days = series.day_count();
  if (days < kHistoryDays + 1 ||
      series.values.size() != static_cast<std::size_t>(days) * kSlotsPerDay) {
    throw DataError("series too short: need at least " + std::to_string(kHistoryDays + 1) +
                    " full days, have " + std::to_string(series.values.size()) + " values");
  }
  std::vector<Window> windows;
  for (int k = 0; k + kHistoryDays + 1 <= days; k += stride_days) {
    Window w;
    const double* base = series.values.data() + static_cast<std::size_t>(k) * kSlotsPerDay;
    w.history = Tensor({kHistoryDays, kSlotsPerDay},
                       std::vector<double>(base, base + kHistoryDays * kSlotsPerDay));
    const double* tgt = base + kHistoryDays * kSlotsPerDay;
    w.target = Tensor({kSlotsPerDay}, std::vector<double>(tgt, tgt + kSlotsPerDay));
    w.customer_index = series.customer_index;
    w.target_day = k + kHistoryDays + 1;
    w.target_date = series.start_date.plus_days(k + kHistoryDays);
    windows.push_back(std::move(w));
  }
  return windows;
}

Tensor encode_customer_id(int index, int n_customers) {
  constexpr int kHalf = 31;
  if (n_customers < 1 || n_customers > kHalf * kHalf) {
    throw ValueError("two-vector id encoding supports 1..961 customers, got " +
                     std::to_string(n_customers));
  }
  if (index < 0 || index >= n_customers) {
    throw ValueError("customer index " + std::to_string(index) + " out of range 0.." +
                     std::to_string(n_customers - 1));
  }
  Tensor id({2 * kHalf});
  id[static_cast<std::size_t>(index / kHalf)] = 1.0;
  id[static_cast<std::size_t>(kHalf + index % kHalf)] = 1.0;
  return id;
}

CalendarFeatures encode_calendar(const Date& date) {
  CalendarFeatures f{Tensor({12}), Tensor({31}), Tensor({7})};
  f.month[static_cast<std::size_t>(date.month0())] = 1.0;
  f.day[static_cast<std::size_t>(date.day0())] = 1.0;
  f.week[static_cast<std::size_t>(date.weekday0())] = 1.0;
  return f;
}

Sample make_sample(const Window& window, int n_customers, double scale) {
  if (scale <= 0.0) throw ValueError("sample scale must be positive");
  Sample s;
  s.history = window.history;
  s.target = window.target;
  if (scale != 1.0) {
    for (std::size_t i = 0; i < s.history.size(); ++i) s.history[i] /= scale;
    for (std::size_t i = 0; i < s.target.size(); ++i) s.target[i] /= scale;
  }
  s.id_onehot = encode_customer_id(window.customer_index, n_customers);
  CalendarFeatures cal = encode_calendar(window.target_date);
  s.month = std::move(cal.month);
  s.day = std::move(cal.day);
  s.week = std::move(cal.week);
  s.customer_index = window.customer_index;
  s.target_date = window.target_date;
  return s;
}

SplitResult split(const std::vector<Window>& windows, const SplitSpec& spec) {
  if (windows.empty()) throw DataError("split of empty window list");
  if (spec.test_days < 0 || spec.validation_days < 0) {
    throw ValueError("test_days and validation_days must be >= 0");
  }
  int max_day = 0;
  for (const Window& w : windows) max_day = std::max(max_day, w.target_day);
  const int test_start = max_day - spec.test_days + 1;

  std::vector<int> candidates;
  {
    std::unordered_set<int> seen;
    for (const Window& w : windows) {
      if (w.target_day >= test_start) continue;
      if (w.target_day < spec.validation_range_lo || w.target_day > spec.validation_range_hi)
        continue;
      if (seen.insert(w.target_day).second) candidates.push_back(w.target_day);
    }
  }
  std::sort(candidates.begin(), candidates.end());
  if (static_cast<int>(candidates.size()) < spec.validation_days) {
    throw DataError("infeasible split: need " + std::to_string(spec.validation_days) +
                    " validation days but only " + std::to_string(candidates.size()) +
                    " days available in range " + std::to_string(spec.validation_range_lo) +
                    ".." + std::to_string(spec.validation_range_hi));
  }

  Rng rng(spec.seed);
  rng.shuffle(candidates);
  SplitResult result;
  result.validation_day_set.assign(candidates.begin(), candidates.begin() + spec.validation_days);
  std::sort(result.validation_day_set.begin(), result.validation_day_set.end());

  const std::unordered_set<int> val_days(result.validation_day_set.begin(),
                                         result.validation_day_set.end());
  for (const Window& w : windows) {
    if (w.target_day >= test_start) {
      result.test.push_back(w);
    } else if (val_days.count(w.target_day)) {
      result.validation.push_back(w);
    } else {
      result.train.push_back(w);
    }
  }
  return result;
}

std::vector<CustomerSeries> gen_synthetic(const SynthConfig& config) {
  if (config.n_customers < 1) throw ValueError("n_customers must be >= 1");
  if (config.n_days < 9) throw ValueError("n_days must be >= 9 (7 history + target + 1)");

  Rng rng(config.seed);
  std::vector<CustomerSeries> all;
  all.reserve(config.n_customers);
  constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

  for (int c = 0; c < config.n_customers; ++c) {
    const double base = rng.uniform(0.15, 0.25);
    const double morning_amp = rng.uniform(0.25, 0.40);
    const double morning_center = rng.uniform(14.0, 17.0);  // around 07:00-08:30
    const double evening_amp = rng.uniform(1.00, 1.30);
    const double evening_center = rng.uniform(36.0, 40.0);  // around 18:00-20:00

    CustomerSeries series;
    series.customer_index = c;
    series.start_date = config.epoch;
    series.values.reserve(static_cast<std::size_t>(config.n_days) * kSlotsPerDay);

    for (int d = 0; d < config.n_days; ++d) {
      const Date date = config.epoch.plus_days(d);
      const double seasonal = 1.0 + config.seasonal_amplitude * std::sin(kTwoPi * d / 365.25);
      const double weekend = date.is_weekend() ? config.weekend_factor : 1.0;
      for (int t = 0; t < kSlotsPerDay; ++t) {
        const double m = t - morning_center;
        const double e = t - evening_center;
        double profile = base + morning_amp * std::exp(-m * m / (2.0 * 2.5 * 2.5)) +
                         evening_amp * std::exp(-e * e / (2.0 * 4.0 * 4.0));
        double v = profile * seasonal + rng.uniform(0.0, config.noise_amplitude);
        if (v < 0.0) v = 0.0;
        series.values.push_back(v * weekend);
      }
    }
    all.push_back(std::move(series));
  }
  return all;
}

std::vector<CustomerSeries> gen_synthetic(int n_customers, int n_days, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_customers = n_customers;
  cfg.n_days = n_days;
  cfg.seed = seed;
  return gen_synthetic(cfg);
}

std::vector<std::string> synth_meter_ids(int n_customers) {
  std::vector<std::string> ids;
  ids.reserve(n_customers);
  for (int i = 0; i < n_customers; ++i) ids.push_back(std::to_string(1000 + i));
  return ids;
}

std::vector<MeterReading> series_to_readings(const CustomerSeries& series,
                                             const std::string& meter_id) {
  std::vector<MeterReading> readings;
  readings.reserve(series.values.size());
  for (int d = 0; d < series.day_count(); ++d) {
    for (int t = 0; t < kSlotsPerDay; ++t) {
      readings.push_back(
          {meter_id, d + 1, t + 1, series.values[static_cast<std::size_t>(d) * kSlotsPerDay + t]});
    }
  }
  return readings;
}

Tensor persistence_baseline(const Tensor& history) {
  if (history.rank() != 2 || history.dim(1) == 0) {
    throw ShapeError("history must be [days,slots], got " + shape_to_string(history.shape()));
  }
  const std::size_t slots = history.dim(1);
  return Tensor({slots}, std::vector<double>(history.data(), history.data() + slots));
}

std::uint64_t id_map_hash(const std::vector<std::string>& meter_ids) {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](char c) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  };
  for (const std::string& id : meter_ids) {
    for (char c : id) mix(c);
    mix('\n');
  }
  return h;
}

}  // namespace loadcnn
