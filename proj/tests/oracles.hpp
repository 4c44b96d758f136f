// Independent brute-force oracles for the layer primitives. These deliberately
// share no code with the engine: padding is materialized into a copy and all
// sums run through checked at() accessors in plain index order.
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "loadcnn/layers.hpp"
#include "loadcnn/tensor.hpp"

namespace oracle {

using loadcnn::Padding;
using loadcnn::Tensor;

/// Zero-pads a [H,W,C] tensor for a same-padding convolution; the extra
/// element of an even span goes to the bottom/right.
inline Tensor pad_same(const Tensor& input, std::size_t kh, std::size_t kw) {
  const std::size_t h = input.dim(0), w = input.dim(1), c = input.dim(2);
  const std::size_t top = (kh - 1) / 2, left = (kw - 1) / 2;
  Tensor padded({h + kh - 1, w + kw - 1, c});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        padded.at(y + top, x + left, ch) = input.at(y, x, ch);
      }
    }
  }
  return padded;
}

/// Direct cross-correlation by summation over every index.
inline Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias,
                     Padding padding) {
  const std::size_t kh = weights.dim(0), kw = weights.dim(1);
  const std::size_t cin = weights.dim(2), cout = weights.dim(3);
  const Tensor src = padding == Padding::same ? pad_same(input, kh, kw) : input;
  const std::size_t out_h = src.dim(0) - kh + 1;
  const std::size_t out_w = src.dim(1) - kw + 1;

  Tensor out({out_h, out_w, cout});
  for (std::size_t y = 0; y < out_h; ++y) {
    for (std::size_t x = 0; x < out_w; ++x) {
      for (std::size_t co = 0; co < cout; ++co) {
        double sum = bias.at(co);
        for (std::size_t ky = 0; ky < kh; ++ky) {
          for (std::size_t kx = 0; kx < kw; ++kx) {
            for (std::size_t ci = 0; ci < cin; ++ci) {
              sum += src.at(y + ky, x + kx, ci) * weights.at(ky, kx, ci, co);
            }
          }
        }
        out.at(y, x, co) = sum;
      }
    }
  }
  return out;
}

/// Direct window scan for max pooling (stride = window, remainder dropped).
inline Tensor maxpool(const Tensor& input, const loadcnn::PoolSpec& pool) {
  const std::size_t wh = pool.window_height, ww = pool.window_width;
  const std::size_t out_h = input.dim(0) / wh, out_w = input.dim(1) / ww, c = input.dim(2);
  Tensor out({out_h, out_w, c});
  for (std::size_t y = 0; y < out_h; ++y) {
    for (std::size_t x = 0; x < out_w; ++x) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        double best = input.at(y * wh, x * ww, ch);
        for (std::size_t dy = 0; dy < wh; ++dy) {
          for (std::size_t dx = 0; dx < ww; ++dx) {
            best = std::max(best, input.at(y * wh + dy, x * ww + dx, ch));
          }
        }
        out.at(y, x, ch) = best;
      }
    }
  }
  return out;
}

/// Double-loop dense layer.
inline Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  const std::size_t n = weights.dim(0), m = weights.dim(1);
  Tensor out({m});
  for (std::size_t j = 0; j < m; ++j) {
    double sum = bias.at(j);
    for (std::size_t i = 0; i < n; ++i) sum += input.at(i) * weights.at(i, j);
    out.at(j) = sum;
  }
  return out;
}

inline Tensor relu(const Tensor& input) {
  Tensor out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > 0.0 ? input[i] : 0.0;
  return out;
}

/// Central finite difference of f along coordinate i of x.
inline double central_diff(const std::function<double(const std::vector<double>&)>& f,
                           std::vector<double> x, std::size_t i, double eps) {
  const double saved = x[i];
  x[i] = saved + eps;
  const double hi = f(x);
  x[i] = saved - eps;
  const double lo = f(x);
  return (hi - lo) / (2.0 * eps);
}

inline double rel_err(double a, double b) {
  const double denom = std::max({std::fabs(a), std::fabs(b), 1e-8});
  return std::fabs(a - b) / denom;
}

}  // namespace oracle
