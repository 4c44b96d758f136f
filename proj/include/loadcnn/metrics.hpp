#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace loadcnn {

/// sqrt(sum((x_i - xhat_i)^2) / N) over all points pooled.
double rmse(std::span<const double> actual, std::span<const double> predicted);

/// Which extrema normalize the NRMSE denominator. The default follows the
/// pooled actual values; the alternatives exist for comparisons.
enum class NrmseRange { actual, predicted };

/// rmse / (max - min) with extrema over the selected series.
double nrmse(std::span<const double> actual, std::span<const double> predicted,
             NrmseRange range = NrmseRange::actual);

/// sum(|x_i - xhat_i|) / N.
double mae(std::span<const double> actual, std::span<const double> predicted);

/// Inputs of the training-cost model: device power P (watts), one training's
/// wall-clock hours TT, datacenter PUE and the assumed number of trials NT.
struct CostParams {
  double power_watts = 0.0;
  double training_hours = 0.0;
  double pue = 1.58;
  long trials = 1000;
};

/// EC = P * TT * PUE * NT / 1000, in kWh.
double energy_consumption(const CostParams& params);

/// CO2e = 0.954 * EC, in pounds.
double co2_emissions(double ec_kwh);

struct CostReport {
  double ec_kwh = 0.0;
  double co2e_lbs = 0.0;
  CostParams inputs;

  std::string to_kv() const;
  std::string to_json() const;
};

CostReport cost_report(const CostParams& params);

struct CustomerMetrics {
  int customer_index = 0;
  double rmse_kwh = 0.0;
  double mae_kwh = 0.0;
  std::size_t n_points = 0;
};

struct EvalReport {
  double rmse_kwh = 0.0;
  double nrmse = 0.0;
  double mae_kwh = 0.0;
  std::size_t n_points = 0;
  std::vector<CustomerMetrics> per_customer;

  std::string to_kv() const;
  std::string to_json() const;
};

/// Pools (actual, predicted) pairs across the evaluation set and keeps a
/// per-customer breakdown on the side.
class EvalAccumulator {
 public:
  void add(int customer_index, std::span<const double> actual, std::span<const double> predicted);
  EvalReport finalize(NrmseRange range = NrmseRange::actual) const;

 private:
  struct PerCustomer {
    std::vector<double> actual, predicted;
  };
  std::vector<std::pair<int, PerCustomer>> customers_;
};

}  // namespace loadcnn
