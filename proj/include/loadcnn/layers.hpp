#pragma once

#include <cstddef>
#include <vector>

#include "loadcnn/tensor.hpp"

namespace loadcnn {

enum class Padding { same, valid };

/// Description of one 2-D convolution layer. Inputs are [H,W,Cin], weights
/// [kh,kw,Cin,Cout], bias [Cout]. Same padding pads with zeros symmetrically,
/// with the extra element on the bottom/right when the kernel span is even.
struct ConvLayerSpec {
  int kernel_height = 1;
  int kernel_width = 1;
  int in_channels = 1;
  int out_channels = 1;
  Padding padding = Padding::same;

  long weight_count() const {
    return static_cast<long>(kernel_height) * kernel_width * in_channels * out_channels;
  }
  long bias_count() const { return out_channels; }
};

/// Elements in one kernel, per in/out channel pair (kh * kw).
long kernel_elements(const ConvLayerSpec& spec);

/// Max-pooling window; stride equals the window in each axis and trailing
/// remainders are dropped (valid pooling).
struct PoolSpec {
  int window_height = 1;
  int window_width = 1;
};

/// Cross-correlation of a rank-3 input with a rank-4 kernel plus bias.
/// Same padding preserves H and W; valid yields H-kh+1 by W-kw+1.
Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias,
                      Padding padding);

struct ConvGrads {
  Tensor input;
  Tensor weights;
  Tensor bias;
};

/// Reverse-mode gradients of conv2d_forward with respect to all three inputs.
ConvGrads conv2d_backward(const Tensor& input, const Tensor& weights, const Tensor& upstream,
                          Padding padding);

struct PoolResult {
  Tensor output;
  /// Flat input index of the winning cell per output element. Ties break to
  /// the first cell in row-then-column scan order.
  std::vector<std::size_t> argmax;
};

PoolResult maxpool_forward(const Tensor& input, const PoolSpec& pool);

/// Routes upstream gradient to the recorded argmax positions; everything else
/// stays zero, so gradient mass is conserved.
Tensor maxpool_backward(const std::vector<std::size_t>& argmax, const Tensor& upstream,
                        const std::vector<std::size_t>& input_shape);

/// Elementwise max(0, x).
Tensor relu(const Tensor& input);

/// Passes upstream where input > 0; zero elsewhere, including at exactly 0.
Tensor relu_backward(const Tensor& input, const Tensor& upstream);

/// output_j = sum_i input_i * W[i,j] + b[j]; linear activation.
Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);

struct DenseGrads {
  Tensor input;
  Tensor weights;
  Tensor bias;
};

DenseGrads dense_backward(const Tensor& input, const Tensor& weights, const Tensor& upstream);

/// Joins rank-1 tensors in argument order.
Tensor concat(const std::vector<Tensor>& parts);

/// Slices an upstream gradient back into per-part gradients.
std::vector<Tensor> concat_backward(const Tensor& upstream,
                                    const std::vector<std::size_t>& part_sizes);

}  // namespace loadcnn
