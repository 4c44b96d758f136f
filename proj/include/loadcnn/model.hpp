#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "loadcnn/layers.hpp"
#include "loadcnn/sample.hpp"
#include "loadcnn/tensor.hpp"

namespace loadcnn {

/// Max-pool inserted after the conv layer with this 1-based index.
struct PoolPlacement {
  int after_layer = 1;
  PoolSpec pool;
};

/// Architecture of the dual-channel network: six [1,N] convs on the
/// horizontal (intraday) channel, six [N,1] convs on the vertical (cross-day)
/// channel, four 1x2 pools per channel, and a linear head over the
/// concatenated features.
struct LoadCNNConfig {
  std::vector<ConvLayerSpec> horizontal;  // kernel_height == 1
  std::vector<ConvLayerSpec> vertical;    // kernel_width == 1
  std::vector<PoolPlacement> horizontal_pools;
  std::vector<PoolPlacement> vertical_pools;

  int history_days = 7;
  int slots_per_day = 48;
  int id_size = 62;
  int month_size = 12;
  int day_size = 31;
  int week_size = 7;
  int output_size = 48;

  /// Throws ShapeError/ValueError if any structural invariant is violated.
  void validate() const;

  /// Spatial+channel shape after the full conv/pool stack of one channel.
  std::vector<std::size_t> channel_output_shape(bool vertical_channel) const;

  std::size_t flattened_channel_size(bool vertical_channel) const;

  /// Length of the concatenated feature vector fed to the head.
  std::size_t feature_size() const;
};

/// The canonical architecture: first-layer kernels [1,7] and [4,1], width-3
/// kernels after that, same padding everywhere, 1x2 intraday pools after conv
/// layers 1-4 in both channels, out_channels (16,24,24,64,64,64).
LoadCNNConfig default_config();

/// Kernel width used by default_config beyond the first layer.
LoadCNNConfig default_config(int later_kernel_n);

/// Learnable parameters; carries its config so forward/backward are
/// self-contained. Tensors iterate in a fixed canonical order (horizontal
/// convs, vertical convs, head), which also fixes the checkpoint layout.
struct LoadCNNParams {
  LoadCNNConfig config;
  std::vector<Tensor> h_weights, h_biases;
  std::vector<Tensor> v_weights, v_biases;
  Tensor head_weights, head_bias;

  /// Visits every tensor as (name, tensor) in canonical order.
  void for_each(const std::function<void(const std::string&, Tensor&)>& fn);
  void for_each(const std::function<void(const std::string&, const Tensor&)>& fn) const;

  std::size_t tensor_count() const;
  long value_count() const;
};

/// He-scaled (sqrt(2/fan_in)) zero-mean weights, zero biases. The same seed
/// reproduces the parameters bit for bit.
LoadCNNParams init_params(const LoadCNNConfig& config, std::uint64_t seed);

/// Zero-filled parameter container for a config.
LoadCNNParams zero_params(const LoadCNNConfig& config);

/// Zero-filled gradient/parameter container with the same shapes.
LoadCNNParams zeros_like(const LoadCNNParams& params);

/// The concatenated head input for a sample (both flattened channels followed
/// by id, month, day, week).
Tensor feature_vector(const LoadCNNParams& params, const Sample& sample);

/// 48-point day-ahead prediction in kWh.
Tensor forward(const LoadCNNParams& params, const Sample& sample);

/// Per-sample loss: sqrt(mean squared error over the 48 points).
double loss(const Tensor& prediction, const Tensor& target);

/// Gradient of loss(forward(params, sample), sample.target) with respect to
/// every parameter tensor. At exactly zero residual the gradient is zero.
LoadCNNParams backward(const LoadCNNParams& params, const Sample& sample);

/// Mean per-sample loss over a batch.
double batch_loss(const LoadCNNParams& params, const std::vector<const Sample*>& batch);

struct BatchResult {
  double mean_loss = 0.0;
  LoadCNNParams grads;  // gradient of the mean loss
};

/// Mean loss and mean gradients over a batch. Per-sample work may run on
/// `threads` workers (0 = auto); the reduction order is fixed by sample
/// index, so results do not depend on the worker count.
BatchResult batch_backward(const LoadCNNParams& params, const std::vector<const Sample*>& batch,
                           int threads = 0);

long param_count(const LoadCNNConfig& config);

/// All parameter values in canonical tensor order (flatten order).
std::vector<double> flatten_values(const LoadCNNParams& params);

/// Inverse of flatten_values; the vector length must match.
void assign_values(LoadCNNParams& params, const std::vector<double>& values);

}  // namespace loadcnn
