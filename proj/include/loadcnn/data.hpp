#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "loadcnn/date.hpp"
#include "loadcnn/sample.hpp"
#include "loadcnn/tensor.hpp"

namespace loadcnn {

/// One half-hourly smart-meter record. The day index is 1-based (day 1 is the
/// dataset epoch date); slots run 1..48.
struct MeterReading {
  std::string meter_id;
  int day_index = 0;
  int slot = 0;
  double kwh = 0.0;
};

/// Parses `meter_id,daycode,kwh` lines where daycode is a 5-digit integer:
/// digits 1-3 the day index, digits 4-5 the half-hour slot 1..48. `#` comment
/// lines and blank lines are ignored. Throws DataError with the line number
/// on malformed input.
std::vector<MeterReading> parse_readings(std::istream& in);

/// Writes readings in the same format, kWh with three decimals. parse followed
/// by serialize reproduces generator output byte for byte.
void serialize_readings(const std::vector<MeterReading>& readings, std::ostream& out);

/// A customer's gap-free half-hourly series covering days 1..day_count since
/// start_date.
struct CustomerSeries {
  int customer_index = 0;
  Date start_date;
  std::vector<double> values;  // length 48 * day_count

  int day_count() const { return static_cast<int>(values.size()) / 48; }
};

struct SeriesBuildResult {
  std::vector<CustomerSeries> series;
  /// Sorted meter ids; index in this list is the customer_index.
  std::vector<std::string> meter_ids;
  std::vector<std::string> warnings;
};

/// Builds one dense series per customer over days 1..expected_days
/// (expected_days <= 0 means the maximum day index seen). Missing slots are
/// filled from the same slot one week prior, else one day prior, else 0;
/// customers missing more than max_missing_fraction of slots are dropped with
/// a warning. When allow_list is non-empty, only those meter ids are kept.
SeriesBuildResult build_series(const std::vector<MeterReading>& readings, int expected_days,
                               Date epoch, double max_missing_fraction = 0.05,
                               const std::vector<std::string>& allow_list = {});

/// One forecasting instance before feature encoding: 7 history days and the
/// target day, with its 1-based dataset day index and calendar date.
struct Window {
  Tensor history;  // [7,48]
  Tensor target;   // [48]
  int customer_index = 0;
  int target_day = 0;  // 1-based day index since the dataset epoch
  Date target_date;
};

/// Sliding windows over one series: window k covers history days [k, k+7) and
/// targets day k+7, advancing by stride_days.
std::vector<Window> build_windows(const CustomerSeries& series, int stride_days = 1);

/// Two-vector customer encoding: one-hot at index/31 in the first 31-wide
/// half and at index%31 in the second. Injective for indices below 961.
Tensor encode_customer_id(int index, int n_customers);

struct CalendarFeatures {
  Tensor month;  // [12], January = 0
  Tensor day;    // [31], 1st = 0
  Tensor week;   // [7], Monday = 0
};

CalendarFeatures encode_calendar(const Date& date);

/// Builds the model input for a window. When scale > 0 the history and target
/// are divided by it (per-customer max scaling).
Sample make_sample(const Window& window, int n_customers, double scale = 1.0);

struct SplitSpec {
  int test_days = 30;
  int validation_days = 60;
  int validation_range_lo = 8;    // day interval the validation days are drawn from
  int validation_range_hi = 506;
  std::uint64_t seed = 0;
};

struct SplitResult {
  std::vector<Window> train;
  std::vector<Window> validation;
  std::vector<Window> test;
  std::vector<int> validation_day_set;  // the drawn days, sorted
};

/// Partitions windows by target day: the last test_days days become the test
/// set, validation_days days drawn without replacement from the validation
/// range become the validation set, the rest train. Deterministic per seed.
SplitResult split(const std::vector<Window>& windows, const SplitSpec& spec);

struct SynthConfig {
  int n_customers = 1;
  int n_days = 9;
  std::uint64_t seed = 0;
  Date epoch = Date::from_ymd(2009, 7, 1);
  double weekend_factor = 1.25;
  double noise_amplitude = 0.30;
  double seasonal_amplitude = 0.20;
};

/// Synthetic residential load: per-customer base level plus morning/evening
/// bumps, weekday/weekend modulation, a seasonal sinusoid and non-negative
/// noise; everything inside 0..5 kWh per half hour and reproducible per seed.
std::vector<CustomerSeries> gen_synthetic(const SynthConfig& config);
std::vector<CustomerSeries> gen_synthetic(int n_customers, int n_days, std::uint64_t seed);

/// Meter ids assigned to synthetic customers ("1000", "1001", ...).
std::vector<std::string> synth_meter_ids(int n_customers);

/// Readings for a generated series (customer-major, day, slot order).
std::vector<MeterReading> series_to_readings(const CustomerSeries& series,
                                             const std::string& meter_id);

/// Same weekday one week earlier: history row 0.
Tensor persistence_baseline(const Tensor& history);

/// FNV-1a over the newline-joined meter ids; ties checkpoints to the id->index
/// assignment they were trained with.
std::uint64_t id_map_hash(const std::vector<std::string>& meter_ids);

}  // namespace loadcnn
