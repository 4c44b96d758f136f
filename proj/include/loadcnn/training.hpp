#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "loadcnn/data.hpp"
#include "loadcnn/model.hpp"

namespace loadcnn {

enum class OptimizerKind { adam, sgd };

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(const std::string& name);

struct TrainConfig {
  int batch_size = 64;
  int max_epochs = 65;
  double learning_rate = 0.0015;
  double decay_rate = 0.96;
  int validation_interval_steps = 100;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::adam;
  /// Validate on the full validation set instead of one random batch.
  bool full_validation = false;
  /// Stop after this many optimizer steps; 0 runs all epochs.
  long max_steps = 0;
  /// Worker threads for per-sample gradients (0 = auto). Results are
  /// independent of this value.
  int threads = 0;

  void validate() const;
};

/// Staircase decay: base_lr * decay_rate^epoch.
double lr_schedule(double base_lr, double decay_rate, int epoch);

/// Adam (beta1 0.9, beta2 0.999, eps 1e-8) or plain SGD. All state lives in
/// this struct; stepping is a pure function of (params, grads, state, lr).
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long t = 0;                                // completed steps
  std::vector<std::vector<double>> m, v;     // per-tensor moments, canonical order

  static OptimizerState create(OptimizerKind kind, const LoadCNNParams& params);
};

void optimizer_step(LoadCNNParams& params, const LoadCNNParams& grads, OptimizerState& state,
                    double step_lr);

/// Milliseconds on the monotone (steady) clock; the time base of all log
/// timestamps.
std::int64_t monotone_now_ms();

struct StepRecord {
  long step = 0;  // 1-based
  int epoch = 0;  // 0-based
  double lr = 0.0;
  double train_loss = 0.0;
  std::int64_t timestamp_ms = 0;
};

struct ValRecord {
  long step = 0;
  double val_loss = 0.0;
  std::int64_t timestamp_ms = 0;
};

struct TrainLog {
  std::vector<StepRecord> steps;
  std::vector<ValRecord> validations;

  /// Wall-clock hours between the first and last logged event (monotone clock).
  double training_hours() const;

  /// CSV with header step,epoch,lr,train_loss,val_loss,timestamp_ms; the
  /// val_loss column is empty except on validation steps.
  void write_csv(std::ostream& out) const;
};

/// Everything needed to restore and reuse the best parameters found.
struct Checkpoint {
  LoadCNNConfig model_config;
  TrainConfig train_config;
  SplitSpec split_spec;
  Date epoch_date;
  LoadCNNParams params;  // theta_best
  double loss_best = 0.0;
  long step = 0;
  int epoch = 0;
  std::uint64_t id_hash = 0;
  int n_customers = 0;
  bool normalize = false;
  bool clamp_nonneg = false;
};

struct TrainHooks {
  /// Called after each optimizer step with the sample indices of the batch.
  std::function<void(long step, int epoch, const std::vector<int>& batch_indices)> on_batch;
};

struct TrainResult {
  Checkpoint checkpoint;
  TrainLog log;
};

/// Mini-batch training with periodic validation and best-parameter tracking.
/// Each epoch consumes a seeded shuffle of the training set in batches
/// (final short batch kept). Every validation_interval_steps steps one random
/// validation batch is scored; strictly lower loss records theta_best. The
/// initial parameters are scored before any step, so the returned checkpoint
/// is never worse than them.
TrainResult train(const std::vector<Sample>& train_set, const std::vector<Sample>& validation_set,
                  const LoadCNNConfig& model_config, const TrainConfig& train_config,
                  const TrainHooks& hooks = {});

/// Binary checkpoint: "LCNN" magic, u32 version, length-prefixed JSON metadata
/// block, then per tensor a length-prefixed name, rank, dims and raw 32-bit
/// little-endian floats in flatten order.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);

/// Throws DataError on bad magic, truncation, unsupported version or tensor
/// shapes that disagree with the embedded config.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace loadcnn
