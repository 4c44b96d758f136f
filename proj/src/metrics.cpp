#include "loadcnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "loadcnn/errors.hpp"

namespace loadcnn {

namespace {

void check_series(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.size() != predicted.size()) {
    throw ValueError("series lengths differ: " + std::to_string(actual.size()) + " vs " +
                     std::to_string(predicted.size()));
  }
  if (actual.empty()) throw ValueError("metrics of empty series");
}

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

// Reports print numeric fields with 4 decimal places; the JSON documents
// carry the same resolution.
double round4(double v) { return std::round(v * 1e4) / 1e4; }

}  // namespace

double rmse(std::span<const double> actual, std::span<const double> predicted) {
  check_series(actual, predicted);
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double r = actual[i] - predicted[i];
    sum_sq += r * r;
  }
  return std::sqrt(sum_sq / static_cast<double>(actual.size()));
}

double nrmse(std::span<const double> actual, std::span<const double> predicted,
             NrmseRange range) {
  check_series(actual, predicted);
  const std::span<const double> basis = range == NrmseRange::actual ? actual : predicted;
  const auto [lo, hi] = std::minmax_element(basis.begin(), basis.end());
  if (*hi == *lo) throw ValueError("nrmse undefined: series range is zero");
  return rmse(actual, predicted) / (*hi - *lo);
}

double mae(std::span<const double> actual, std::span<const double> predicted) {
  check_series(actual, predicted);
  double sum = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) sum += std::fabs(actual[i] - predicted[i]);
  return sum / static_cast<double>(actual.size());
}

double energy_consumption(const CostParams& params) {
  if (params.power_watts <= 0.0 || params.training_hours <= 0.0 || params.pue <= 0.0 ||
      params.trials <= 0) {
    throw ValueError("cost inputs must all be strictly positive");
  }
  return params.power_watts * params.training_hours * params.pue *
         static_cast<double>(params.trials) / 1000.0;
}

double co2_emissions(double ec_kwh) {
  if (ec_kwh < 0.0) throw ValueError("energy consumption must be non-negative");
  return 0.954 * ec_kwh;
}

CostReport cost_report(const CostParams& params) {
  CostReport r;
  r.inputs = params;
  r.ec_kwh = energy_consumption(params);
  r.co2e_lbs = co2_emissions(r.ec_kwh);
  return r;
}

std::string CostReport::to_kv() const {
  std::ostringstream out;
  out << "power_watts=" << fixed4(inputs.power_watts) << '\n'
      << "training_hours=" << fixed4(inputs.training_hours) << '\n'
      << "pue=" << fixed4(inputs.pue) << '\n'
      << "trials=" << inputs.trials << '\n'
      << "ec_kwh=" << fixed4(ec_kwh) << '\n'
      << "co2e_lbs=" << fixed4(co2e_lbs) << '\n';
  return out.str();
}

std::string CostReport::to_json() const {
  nlohmann::json j{{"power_watts", round4(inputs.power_watts)},
                   {"training_hours", round4(inputs.training_hours)},
                   {"pue", round4(inputs.pue)},
                   {"trials", inputs.trials},
                   {"ec_kwh", round4(ec_kwh)},
                   {"co2e_lbs", round4(co2e_lbs)}};
  return j.dump(2);
}

std::string EvalReport::to_kv() const {
  std::ostringstream out;
  out << "rmse_kwh=" << fixed4(rmse_kwh) << '\n'
      << "nrmse=" << fixed4(nrmse) << '\n'
      << "mae_kwh=" << fixed4(mae_kwh) << '\n'
      << "n_points=" << n_points << '\n';
  for (const CustomerMetrics& c : per_customer) {
    out << "customer." << c.customer_index << ".rmse_kwh=" << fixed4(c.rmse_kwh) << '\n'
        << "customer." << c.customer_index << ".mae_kwh=" << fixed4(c.mae_kwh) << '\n';
  }
  return out.str();
}

std::string EvalReport::to_json() const {
  nlohmann::json per = nlohmann::json::array();
  for (const CustomerMetrics& c : per_customer) {
    per.push_back({{"customer_index", c.customer_index},
                   {"rmse_kwh", round4(c.rmse_kwh)},
                   {"mae_kwh", round4(c.mae_kwh)},
                   {"n_points", c.n_points}});
  }
  nlohmann::json j{{"rmse_kwh", round4(rmse_kwh)},
                   {"nrmse", round4(nrmse)},
                   {"mae_kwh", round4(mae_kwh)},
                   {"n_points", n_points},
                   {"per_customer", per}};
  return j.dump(2);
}

void EvalAccumulator::add(int customer_index, std::span<const double> actual,
                          std::span<const double> predicted) {
  check_series(actual, predicted);
  auto it = std::find_if(customers_.begin(), customers_.end(),
                         [customer_index](const auto& p) { return p.first == customer_index; });
  if (it == customers_.end()) {
    customers_.push_back({customer_index, {}});
    it = customers_.end() - 1;
  }
  it->second.actual.insert(it->second.actual.end(), actual.begin(), actual.end());
  it->second.predicted.insert(it->second.predicted.end(), predicted.begin(), predicted.end());
}

EvalReport EvalAccumulator::finalize(NrmseRange range) const {
  if (customers_.empty()) throw ValueError("no evaluation points accumulated");
  std::vector<double> all_actual, all_predicted;
  EvalReport report;
  for (const auto& [index, series] : customers_) {
    CustomerMetrics cm;
    cm.customer_index = index;
    cm.rmse_kwh = rmse(series.actual, series.predicted);
    cm.mae_kwh = mae(series.actual, series.predicted);
    cm.n_points = series.actual.size();
    report.per_customer.push_back(cm);
    all_actual.insert(all_actual.end(), series.actual.begin(), series.actual.end());
    all_predicted.insert(all_predicted.end(), series.predicted.begin(), series.predicted.end());
  }
  report.rmse_kwh = rmse(all_actual, all_predicted);
  report.mae_kwh = mae(all_actual, all_predicted);
  report.nrmse = nrmse(all_actual, all_predicted, range);
  report.n_points = all_actual.size();
  return report;
}

}  // namespace loadcnn
