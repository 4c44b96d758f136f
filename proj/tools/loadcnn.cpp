// loadcnn command-line driver: synthetic data generation, training,
// evaluation, prediction, gradient checking and training-cost reporting.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "loadcnn/data.hpp"
#include "loadcnn/gradsuite.hpp"
#include "loadcnn/metrics.hpp"
#include "loadcnn/model.hpp"
#include "loadcnn/rng.hpp"
#include "loadcnn/training.hpp"

namespace fs = std::filesystem;
using namespace loadcnn;

namespace {

// Exit codes: 0 success, 2 usage/config error, 3 data error, 4 numerical failure.
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct RunConfig {
  std::string data;
  std::string out;
  std::uint64_t seed = 0;
  std::string epoch_date = "2009-07-01";
  std::string customer_file;
  int expected_days = 0;  // 0 = infer from the data

  int batch_size = 64;
  int max_epochs = 65;
  double learning_rate = 0.0015;
  double decay_rate = 0.96;
  int validation_interval_steps = 100;
  std::string optimizer = "adam";
  bool full_validation = false;
  long max_steps = 0;

  int test_days = 30;
  int validation_days = 60;
  int validation_range_lo = 8;
  int validation_range_hi = 506;

  double power_watts = 0.0;  // 0 = not configured
  double pue = 1.58;
  long trials = 1000;

  int conv_kernel_n = 3;
  bool normalize = false;
  bool clamp_nonneg = false;
};

std::string format_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_fixed4(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

// Flat key=value files, UTF-8, '#' comments.
std::map<std::string, std::string> read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValueError("cannot open config file " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValueError(path.string() + ":" + std::to_string(line_no) +
                       ": expected key=value, got '" + line + "'");
    }
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

long parse_long(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ValueError("config key " + key + ": expected an integer, got '" + value + "'");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ValueError("config key " + key + ": expected a number, got '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "no") return false;
  throw ValueError("config key " + key + ": expected a boolean, got '" + value + "'");
}

/// Applies file values to every field whose flag was not given on the command
/// line (flags override file values).
void apply_config_files(RunConfig& cfg, const std::vector<std::string>& files,
                        const CLI::App* cmd) {
  auto given = [cmd](const std::string& flag) {
    const CLI::Option* opt = cmd->get_option_no_throw(flag);
    return opt != nullptr && opt->count() > 0;
  };
  for (const std::string& file : files) {
    for (const auto& [key, value] : read_config_file(file)) {
      if (key == "data") {
        if (!given("--data")) cfg.data = value;
      } else if (key == "out") {
        if (!given("--out")) cfg.out = value;
      } else if (key == "seed") {
        if (!given("--seed")) cfg.seed = static_cast<std::uint64_t>(parse_long(key, value));
      } else if (key == "epoch_date") {
        if (!given("--epoch-date")) cfg.epoch_date = value;
      } else if (key == "customer_file") {
        if (!given("--customer-file")) cfg.customer_file = value;
      } else if (key == "expected_days") {
        if (!given("--expected-days")) cfg.expected_days = static_cast<int>(parse_long(key, value));
      } else if (key == "batch_size") {
        if (!given("--batch-size")) cfg.batch_size = static_cast<int>(parse_long(key, value));
      } else if (key == "max_epochs") {
        if (!given("--max-epochs")) cfg.max_epochs = static_cast<int>(parse_long(key, value));
      } else if (key == "learning_rate") {
        if (!given("--lr")) cfg.learning_rate = parse_double(key, value);
      } else if (key == "decay_rate") {
        if (!given("--decay")) cfg.decay_rate = parse_double(key, value);
      } else if (key == "validation_interval_steps") {
        if (!given("--val-interval"))
          cfg.validation_interval_steps = static_cast<int>(parse_long(key, value));
      } else if (key == "optimizer") {
        if (!given("--optimizer")) cfg.optimizer = value;
      } else if (key == "full_validation") {
        if (!given("--full-validation")) cfg.full_validation = parse_bool(key, value);
      } else if (key == "max_steps") {
        if (!given("--max-steps")) cfg.max_steps = parse_long(key, value);
      } else if (key == "test_days") {
        if (!given("--test-days")) cfg.test_days = static_cast<int>(parse_long(key, value));
      } else if (key == "validation_days") {
        if (!given("--validation-days"))
          cfg.validation_days = static_cast<int>(parse_long(key, value));
      } else if (key == "validation_range_lo") {
        if (!given("--val-range-lo"))
          cfg.validation_range_lo = static_cast<int>(parse_long(key, value));
      } else if (key == "validation_range_hi") {
        if (!given("--val-range-hi"))
          cfg.validation_range_hi = static_cast<int>(parse_long(key, value));
      } else if (key == "power_watts") {
        if (!given("--power")) cfg.power_watts = parse_double(key, value);
      } else if (key == "pue") {
        if (!given("--pue")) cfg.pue = parse_double(key, value);
      } else if (key == "trials") {
        if (!given("--trials")) cfg.trials = parse_long(key, value);
      } else if (key == "conv_kernel_n") {
        if (!given("--conv-kernel-n")) cfg.conv_kernel_n = static_cast<int>(parse_long(key, value));
      } else if (key == "normalize") {
        if (!given("--normalize")) cfg.normalize = parse_bool(key, value);
      } else if (key == "clamp_nonneg") {
        if (!given("--clamp-nonneg")) cfg.clamp_nonneg = parse_bool(key, value);
      } else {
        throw ValueError("unknown config key '" + key + "' in " + file);
      }
    }
  }
}

void write_resolved_config(const RunConfig& cfg, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write resolved config to " + path.string());
  out << "# resolved run configuration\n"
      << "data=" << cfg.data << '\n'
      << "out=" << cfg.out << '\n'
      << "seed=" << cfg.seed << '\n'
      << "epoch_date=" << cfg.epoch_date << '\n'
      << "customer_file=" << cfg.customer_file << '\n'
      << "expected_days=" << cfg.expected_days << '\n'
      << "batch_size=" << cfg.batch_size << '\n'
      << "max_epochs=" << cfg.max_epochs << '\n'
      << "learning_rate=" << format_g(cfg.learning_rate) << '\n'
      << "decay_rate=" << format_g(cfg.decay_rate) << '\n'
      << "validation_interval_steps=" << cfg.validation_interval_steps << '\n'
      << "optimizer=" << cfg.optimizer << '\n'
      << "full_validation=" << (cfg.full_validation ? 1 : 0) << '\n'
      << "max_steps=" << cfg.max_steps << '\n'
      << "test_days=" << cfg.test_days << '\n'
      << "validation_days=" << cfg.validation_days << '\n'
      << "validation_range_lo=" << cfg.validation_range_lo << '\n'
      << "validation_range_hi=" << cfg.validation_range_hi << '\n'
      << "power_watts=" << format_g(cfg.power_watts) << '\n'
      << "pue=" << format_g(cfg.pue) << '\n'
      << "trials=" << cfg.trials << '\n'
      << "conv_kernel_n=" << cfg.conv_kernel_n << '\n'
      << "normalize=" << (cfg.normalize ? 1 : 0) << '\n'
      << "clamp_nonneg=" << (cfg.clamp_nonneg ? 1 : 0) << '\n';
}

/// Worker-thread cap from the environment (0 = auto).
int env_threads() {
  const char* env = std::getenv("LOADCNN_THREADS");
  if (!env || !*env) return 0;
  try {
    const int v = std::stoi(env);
    return v > 0 ? v : 0;
  } catch (const std::exception&) {
    throw ValueError(std::string("LOADCNN_THREADS must be an integer, got '") + env + "'");
  }
}

struct Ingested {
  SeriesBuildResult build;
  Date epoch;
  int n_customers = 0;
};

Ingested ingest(const RunConfig& cfg) {
  if (cfg.data.empty()) throw ValueError("no data path given (--data)");
  if (!fs::exists(cfg.data)) throw ValueError("data path not found: " + cfg.data);
  std::ifstream in(cfg.data);
  if (!in) throw DataError("cannot open data file " + cfg.data);

  std::vector<std::string> allow_list;
  if (!cfg.customer_file.empty()) {
    std::ifstream customers(cfg.customer_file);
    if (!customers) throw ValueError("customer file not found: " + cfg.customer_file);
    std::string line;
    while (std::getline(customers, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty() && line[0] != '#') allow_list.push_back(line);
    }
  }

  Ingested result;
  result.epoch = Date::from_string(cfg.epoch_date);
  result.build =
      build_series(parse_readings(in), cfg.expected_days, result.epoch, 0.05, allow_list);
  result.n_customers = static_cast<int>(result.build.series.size());
  for (const std::string& warning : result.build.warnings) {
    std::cerr << "warning: " << warning << '\n';
  }
  return result;
}

/// Per-customer scaling factors (1.0 unless normalize is on).
std::vector<double> customer_scales(const Ingested& data, bool normalize) {
  std::vector<double> scales(data.build.series.size(), 1.0);
  if (!normalize) return scales;
  for (std::size_t c = 0; c < data.build.series.size(); ++c) {
    double max_v = 0.0;
    for (double v : data.build.series[c].values) max_v = std::max(max_v, v);
    scales[c] = max_v > 0.0 ? max_v : 1.0;
  }
  return scales;
}

std::vector<Window> all_windows(const Ingested& data) {
  std::vector<Window> windows;
  for (const CustomerSeries& s : data.build.series) {
    auto w = build_windows(s);
    windows.insert(windows.end(), w.begin(), w.end());
  }
  return windows;
}

std::vector<Sample> to_samples(const std::vector<Window>& windows, int n_customers,
                               const std::vector<double>& scales) {
  std::vector<Sample> samples;
  samples.reserve(windows.size());
  for (const Window& w : windows) {
    samples.push_back(make_sample(w, n_customers, scales[w.customer_index]));
  }
  return samples;
}

SplitSpec split_spec_from(const RunConfig& cfg) {
  SplitSpec spec;
  spec.test_days = cfg.test_days;
  spec.validation_days = cfg.validation_days;
  spec.validation_range_lo = cfg.validation_range_lo;
  spec.validation_range_hi = cfg.validation_range_hi;
  spec.seed = cfg.seed + seed_offset::split;
  return spec;
}

int cmd_synth(const RunConfig& cfg, int customers, int days) {
  SynthConfig synth;
  synth.n_customers = customers;
  synth.n_days = days;
  synth.seed = cfg.seed + seed_offset::synth;
  synth.epoch = Date::from_string(cfg.epoch_date);

  const auto series = gen_synthetic(synth);
  const auto ids = synth_meter_ids(customers);

  const fs::path out_dir(cfg.out.empty() ? "." : cfg.out);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create output directory " + out_dir.string());

  const fs::path readings_path = out_dir / "readings.txt";
  std::ofstream readings(readings_path, std::ios::trunc | std::ios::binary);
  if (!readings) throw DataError("cannot write " + readings_path.string());
  std::size_t records = 0;
  for (int c = 0; c < customers; ++c) {
    const auto rs = series_to_readings(series[c], ids[c]);
    serialize_readings(rs, readings);
    records += rs.size();
  }
  readings.close();

  const fs::path customers_path = out_dir / "customers.txt";
  std::ofstream customer_out(customers_path, std::ios::trunc | std::ios::binary);
  for (const std::string& id : ids) customer_out << id << '\n';
  customer_out.close();

  const fs::path conf_path = out_dir / "dataset.conf";
  std::ofstream conf(conf_path, std::ios::trunc);
  conf << "# synthetic dataset\n"
       << "data=" << fs::absolute(readings_path).string() << '\n'
       << "epoch_date=" << cfg.epoch_date << '\n'
       << "customer_file=" << fs::absolute(customers_path).string() << '\n'
       << "expected_days=" << days << '\n';
  conf.close();

  std::cout << "wrote " << records << " records for " << customers << " customers to "
            << readings_path.string() << '\n'
            << "customer list: " << customers_path.string() << '\n'
            << "dataset config: " << conf_path.string() << '\n';
  return 0;
}

int cmd_train(RunConfig& cfg) {
  if (cfg.out.empty()) throw ValueError("no output directory given (--out)");
  const fs::path out_dir(cfg.out);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create output directory " + out_dir.string());

  cfg.data = fs::absolute(cfg.data).string();
  cfg.out = fs::absolute(out_dir).string();
  if (!cfg.customer_file.empty()) cfg.customer_file = fs::absolute(cfg.customer_file).string();
  write_resolved_config(cfg, out_dir / "run.conf");

  const Ingested data = ingest(cfg);
  const SplitSpec spec = split_spec_from(cfg);
  const SplitResult sets = split(all_windows(data), spec);
  std::cout << "split: train=" << sets.train.size() << " val=" << sets.validation.size()
            << " test=" << sets.test.size() << '\n';

  const auto scales = customer_scales(data, cfg.normalize);
  const std::vector<Sample> train_samples = to_samples(sets.train, data.n_customers, scales);
  const std::vector<Sample> val_samples = to_samples(sets.validation, data.n_customers, scales);

  TrainConfig tc;
  tc.batch_size = cfg.batch_size;
  tc.max_epochs = cfg.max_epochs;
  tc.learning_rate = cfg.learning_rate;
  tc.decay_rate = cfg.decay_rate;
  tc.validation_interval_steps = cfg.validation_interval_steps;
  tc.seed = cfg.seed;
  tc.optimizer = optimizer_from_string(cfg.optimizer);
  tc.full_validation = cfg.full_validation;
  tc.max_steps = cfg.max_steps;
  tc.threads = env_threads();

  const LoadCNNConfig model_cfg = default_config(cfg.conv_kernel_n);
  TrainResult result = train(train_samples, val_samples, model_cfg, tc);

  result.checkpoint.split_spec = spec;
  result.checkpoint.epoch_date = data.epoch;
  result.checkpoint.id_hash = id_map_hash(data.build.meter_ids);
  result.checkpoint.n_customers = data.n_customers;
  result.checkpoint.normalize = cfg.normalize;
  result.checkpoint.clamp_nonneg = cfg.clamp_nonneg;

  save_checkpoint(result.checkpoint, out_dir / "checkpoint.bin");

  std::ofstream id_map(out_dir / "id_map.txt", std::ios::trunc | std::ios::binary);
  for (const std::string& id : data.build.meter_ids) id_map << id << '\n';
  id_map.close();

  std::ofstream log_csv(out_dir / "train_log.csv", std::ios::trunc | std::ios::binary);
  result.log.write_csv(log_csv);
  log_csv.close();

  const double tt_hours = result.log.training_hours();
  std::ofstream cost(out_dir / "cost_stub.txt", std::ios::trunc);
  cost << "tt_hours=" << format_g(tt_hours) << '\n'
       << "pue=" << format_g(cfg.pue) << '\n'
       << "trials=" << cfg.trials << '\n';
  if (cfg.power_watts > 0.0) {
    CostReport cr = cost_report({cfg.power_watts, std::max(tt_hours, 1e-12), cfg.pue, cfg.trials});
    cost << "power_watts=" << format_g(cfg.power_watts) << '\n'
         << "ec_kwh=" << format_fixed4(cr.ec_kwh) << '\n'
         << "co2e_lbs=" << format_fixed4(cr.co2e_lbs) << '\n';
  } else {
    cost << "# set power_watts to compute ec_kwh and co2e_lbs\n";
  }
  cost.close();

  std::cout << "trained " << result.log.steps.size() << " steps, best validation loss "
            << format_g(result.checkpoint.loss_best) << " at step " << result.checkpoint.step
            << '\n'
            << "training time: " << format_g(tt_hours) << " h\n"
            << "checkpoint: " << (out_dir / "checkpoint.bin").string() << '\n';
  return 0;
}

Tensor predict_window(const Checkpoint& cp, const Window& window, double scale) {
  const Sample sample = make_sample(window, cp.n_customers, scale);
  Tensor prediction = forward(cp.params, sample);
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    prediction[i] *= scale;
    if (cp.clamp_nonneg && prediction[i] < 0.0) prediction[i] = 0.0;
  }
  return prediction;
}

int cmd_evaluate(RunConfig& cfg, const std::string& checkpoint_path, bool identity_stub) {
  const Checkpoint cp = load_checkpoint(checkpoint_path);
  cfg.epoch_date = cp.epoch_date.to_string();

  const Ingested data = ingest(cfg);
  if (id_map_hash(data.build.meter_ids) != cp.id_hash) {
    throw DataError("id map mismatch: the data set resolves to a different customer->index map "
                    "than the checkpoint was trained with");
  }
  if (data.n_customers != cp.n_customers) {
    throw DataError("customer count mismatch: checkpoint has " + std::to_string(cp.n_customers) +
                    ", data has " + std::to_string(data.n_customers));
  }

  const SplitResult sets = split(all_windows(data), cp.split_spec);
  std::cout << "split: train=" << sets.train.size() << " val=" << sets.validation.size()
            << " test=" << sets.test.size() << '\n';
  if (sets.test.empty()) throw DataError("test split is empty");

  const auto scales = customer_scales(data, cp.normalize);
  EvalAccumulator model_acc, baseline_acc;
  for (const Window& w : sets.test) {
    Tensor prediction = identity_stub ? w.target : predict_window(cp, w, scales[w.customer_index]);
    model_acc.add(w.customer_index, {w.target.data(), w.target.size()},
                  {prediction.data(), prediction.size()});
    Tensor naive = persistence_baseline(w.history);
    baseline_acc.add(w.customer_index, {w.target.data(), w.target.size()},
                     {naive.data(), naive.size()});
  }

  const EvalReport model_report = model_acc.finalize();
  const EvalReport baseline_report = baseline_acc.finalize();

  std::cout << "model:\n" << model_report.to_kv();
  std::cout << "baseline:\n" << baseline_report.to_kv();

  // Reports land next to the checkpoint unless --out says otherwise.
  const fs::path out_dir =
      cfg.out.empty() ? fs::path(checkpoint_path).parent_path() : fs::path(cfg.out);
  if (!out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw DataError("cannot create output directory " + out_dir.string());
  }
  std::ofstream(out_dir / "eval_report.txt", std::ios::trunc) << model_report.to_kv();
  std::ofstream(out_dir / "eval_report.json", std::ios::trunc) << model_report.to_json() << '\n';
  std::ofstream(out_dir / "baseline_report.txt", std::ios::trunc) << baseline_report.to_kv();
  std::ofstream(out_dir / "baseline_report.json", std::ios::trunc)
      << baseline_report.to_json() << '\n';
  return 0;
}

int cmd_predict(RunConfig& cfg, const std::string& checkpoint_path, const std::string& customer,
                const std::string& date_text) {
  const Checkpoint cp = load_checkpoint(checkpoint_path);
  cfg.epoch_date = cp.epoch_date.to_string();

  const Ingested data = ingest(cfg);
  if (id_map_hash(data.build.meter_ids) != cp.id_hash) {
    throw DataError("id map mismatch between checkpoint and data");
  }

  int customer_index = -1;
  for (std::size_t i = 0; i < data.build.meter_ids.size(); ++i) {
    if (data.build.meter_ids[i] == customer) {
      customer_index = static_cast<int>(i);
      break;
    }
  }
  if (customer_index < 0) throw DataError("unknown customer '" + customer + "'");

  const Date date = Date::from_string(date_text);
  const int target_day = date.days_since(data.epoch) + 1;  // 1-based dataset day
  const CustomerSeries& series = data.build.series[customer_index];
  if (target_day - 7 < 1 || target_day - 1 > series.day_count()) {
    throw DataError("insufficient history: need the 7 days before " + date_text +
                    " (dataset days " + std::to_string(target_day - 7) + ".." +
                    std::to_string(target_day - 1) + ", have 1.." +
                    std::to_string(series.day_count()) + ")");
  }

  Window w;
  const double* base = series.values.data() + static_cast<std::size_t>(target_day - 8) * 48;
  w.history = Tensor({7, 48}, std::vector<double>(base, base + 7 * 48));
  w.target = Tensor({48});
  w.customer_index = customer_index;
  w.target_day = target_day;
  w.target_date = date;

  const auto scales = customer_scales(data, cp.normalize);
  Tensor prediction = predict_window(cp, w, scales[customer_index]);
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    std::cout << format_fixed4(prediction[i]) << '\n';
  }
  return 0;
}

int cmd_cost(double power, double hours, double pue, long trials, bool as_json) {
  const CostReport report = cost_report({power, hours, pue, trials});
  std::cout << "EC=" << format_fixed4(report.ec_kwh) << " CO2e=" << format_fixed4(report.co2e_lbs)
            << '\n';
  if (as_json) std::cout << report.to_json() << '\n';
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, int trials, bool inject_conv_bug) {
  GradSuiteOptions options;
  options.trials_per_layer = trials;
  options.flip_conv_weight_sign = inject_conv_bug;
  const auto reports = run_gradient_suite(seed, options);

  std::vector<std::string> failing;
  for (const GradCheckReport& r : reports) {
    std::printf("%-14s max_rel_error=%.3e %s\n", r.layer.c_str(), r.max_rel_error,
                r.passed ? "PASS" : "FAIL");
    if (!r.passed) failing.push_back(r.layer);
  }
  if (!failing.empty()) {
    std::ostringstream msg;
    msg << "gradient check failed for:";
    for (const std::string& layer : failing) msg << ' ' << layer;
    std::cerr << msg.str() << '\n';
    return kExitNumeric;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LoadCNN: day-ahead residential load forecasting engine"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::vector<std::string> config_files;

  int synth_customers = 5;
  int synth_days = 40;
  std::string checkpoint_path;
  std::string predict_customer, predict_date;
  bool identity_stub = false;
  double cost_power = 0.0, cost_hours = 0.0;
  bool cost_json = false;
  int gradcheck_trials = 100;
  bool inject_conv_bug = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_files, "key=value config file (repeatable)");
    cmd->add_option("--seed", cfg.seed, "base seed for all randomness");
    cmd->add_option("--out", cfg.out, "output directory");
    cmd->add_option("--epoch-date", cfg.epoch_date, "date of dataset day 1 (ISO-8601)");
    cmd->add_option("--customer-file", cfg.customer_file, "customer allow-list file");
    cmd->add_option("--expected-days", cfg.expected_days, "days covered by the data (0 = infer)");
  };

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic smart-meter dataset");
  add_common(synth);
  synth->add_option("--customers", synth_customers, "number of customers")->check(CLI::Range(1, 961));
  synth->add_option("--days", synth_days, "number of days")->check(CLI::Range(9, 999));

  CLI::App* train_cmd = app.add_subcommand("train", "train LoadCNN on a readings file");
  add_common(train_cmd);
  train_cmd->add_option("--data", cfg.data, "readings file");
  train_cmd->add_option("--batch-size", cfg.batch_size, "mini-batch size");
  train_cmd->add_option("--max-epochs", cfg.max_epochs, "epoch limit");
  train_cmd->add_option("--lr", cfg.learning_rate, "initial learning rate");
  train_cmd->add_option("--decay", cfg.decay_rate, "per-epoch learning-rate decay");
  train_cmd->add_option("--val-interval", cfg.validation_interval_steps,
                        "steps between validation events");
  train_cmd->add_option("--optimizer", cfg.optimizer, "adam or sgd");
  train_cmd->add_flag("--full-validation", cfg.full_validation,
                      "score the whole validation set instead of one batch");
  train_cmd->add_option("--max-steps", cfg.max_steps, "stop after this many steps (0 = all epochs)");
  train_cmd->add_option("--test-days", cfg.test_days, "days in the test split");
  train_cmd->add_option("--validation-days", cfg.validation_days, "days in the validation split");
  train_cmd->add_option("--val-range-lo", cfg.validation_range_lo, "first drawable validation day");
  train_cmd->add_option("--val-range-hi", cfg.validation_range_hi, "last drawable validation day");
  train_cmd->add_option("--conv-kernel-n", cfg.conv_kernel_n, "kernel width of conv layers 2-6");
  train_cmd->add_flag("--normalize", cfg.normalize, "per-customer max scaling of model inputs");
  train_cmd->add_flag("--clamp-nonneg", cfg.clamp_nonneg, "clamp predictions to >= 0 at inference");
  train_cmd->add_option("--power", cfg.power_watts, "device power draw for the cost stub (W)");
  train_cmd->add_option("--pue", cfg.pue, "power usage effectiveness");
  train_cmd->add_option("--trials", cfg.trials, "assumed training trials for the cost model");

  CLI::App* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint on the test split");
  add_common(evaluate);
  evaluate->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  evaluate->add_option("--data", cfg.data, "readings file");
  evaluate->add_flag("--identity-stub", identity_stub,
                     "test hook: predictions equal the targets")
      ->group("");  // hidden

  CLI::App* predict = app.add_subcommand("predict", "predict 48 half-hourly values for one day");
  add_common(predict);
  predict->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  predict->add_option("--data", cfg.data, "readings file");
  predict->add_option("--customer", predict_customer, "meter id")->required();
  predict->add_option("--date", predict_date, "target day (YYYY-MM-DD)")->required();

  CLI::App* cost = app.add_subcommand("cost", "training cost model: EC (kWh) and CO2e (lbs)");
  cost->add_option("--power", cost_power, "device power draw P in watts")->required();
  cost->add_option("--hours", cost_hours, "training time TT in hours")->required();
  cost->add_option("--pue", cfg.pue, "power usage effectiveness (default 1.58)");
  cost->add_option("--trials", cfg.trials, "number of training trials NT (default 1000)");
  cost->add_flag("--json", cost_json, "also print the JSON report");

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  gradcheck->add_option("--seed", cfg.seed, "suite seed");
  gradcheck->add_option("--trials", gradcheck_trials, "trials per layer");
  gradcheck->add_flag("--inject-conv-sign-flip", inject_conv_bug,
                      "test hook: corrupt the conv weight gradient")
      ->group("");  // hidden

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*synth) {
      apply_config_files(cfg, config_files, synth);
      return cmd_synth(cfg, synth_customers, synth_days);
    }
    if (*train_cmd) {
      apply_config_files(cfg, config_files, train_cmd);
      return cmd_train(cfg);
    }
    if (*evaluate) {
      apply_config_files(cfg, config_files, evaluate);
      return cmd_evaluate(cfg, checkpoint_path, identity_stub);
    }
    if (*predict) {
      apply_config_files(cfg, config_files, predict);
      return cmd_predict(cfg, checkpoint_path, predict_customer, predict_date);
    }
    if (*cost) {
      return cmd_cost(cost_power, cost_hours, cfg.pue, cfg.trials, cost_json);
    }
    if (*gradcheck) {
      return cmd_gradcheck(cfg.seed, gradcheck_trials, inject_conv_bug);
    }
  } catch (const ValueError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const ShapeError& e) {
    std::cerr << "internal shape error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return 0;
}
