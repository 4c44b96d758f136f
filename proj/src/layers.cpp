#include "loadcnn/layers.hpp"

#include <algorithm>
#include <string>

namespace loadcnn {

long kernel_elements(const ConvLayerSpec& spec) {
  return static_cast<long>(spec.kernel_height) * spec.kernel_width;
}

namespace {

struct ConvDims {
  std::size_t in_h, in_w, in_c;
  std::size_t kh, kw, out_c;
  std::size_t out_h, out_w;
  std::size_t pad_top, pad_left;
};

ConvDims check_conv_args(const Tensor& input, const Tensor& weights, const Tensor& bias,
                         Padding padding) {
  if (input.rank() != 3) {
    throw ShapeError("conv2d input must be rank 3 [H,W,Cin], got rank " +
                     std::to_string(input.rank()));
  }
  if (weights.rank() != 4) {
    throw ShapeError("conv2d weights must be rank 4 [kh,kw,Cin,Cout], got rank " +
                     std::to_string(weights.rank()));
  }
  ConvDims d{};
  d.in_h = input.dim(0);
  d.in_w = input.dim(1);
  d.in_c = input.dim(2);
  d.kh = weights.dim(0);
  d.kw = weights.dim(1);
  d.out_c = weights.dim(3);
  if (weights.dim(2) != d.in_c) {
    throw ShapeError("conv2d in_channels mismatch: input has " + std::to_string(d.in_c) +
                     ", weights expect " + std::to_string(weights.dim(2)));
  }
  if (bias.rank() != 1 || bias.dim(0) != d.out_c) {
    throw ShapeError("conv2d bias must be [Cout=" + std::to_string(d.out_c) + "], got " +
                     shape_to_string(bias.shape()));
  }
  if (padding == Padding::valid) {
    if (d.kh > d.in_h || d.kw > d.in_w) {
      throw ShapeError("valid conv kernel " + std::to_string(d.kh) + "x" + std::to_string(d.kw) +
                       " exceeds input " + std::to_string(d.in_h) + "x" + std::to_string(d.in_w));
    }
    d.out_h = d.in_h - d.kh + 1;
    d.out_w = d.in_w - d.kw + 1;
    d.pad_top = 0;
    d.pad_left = 0;
  } else {
    d.out_h = d.in_h;
    d.out_w = d.in_w;
    d.pad_top = (d.kh - 1) / 2;  // extra pad goes to the bottom/right
    d.pad_left = (d.kw - 1) / 2;
  }
  return d;
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias,
                      Padding padding) {
  const ConvDims d = check_conv_args(input, weights, bias, padding);
  Tensor out({d.out_h, d.out_w, d.out_c});

  const double* in = input.data();
  const double* w = weights.data();
  const double* b = bias.data();
  double* o = out.data();

  for (std::size_t y = 0; y < d.out_h; ++y) {
    for (std::size_t x = 0; x < d.out_w; ++x) {
      double* orow = o + (y * d.out_w + x) * d.out_c;
      for (std::size_t c = 0; c < d.out_c; ++c) orow[c] = b[c];
      for (std::size_t ky = 0; ky < d.kh; ++ky) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y + ky) -
                                  static_cast<std::ptrdiff_t>(d.pad_top);
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.in_h)) continue;
        for (std::size_t kx = 0; kx < d.kw; ++kx) {
          const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x + kx) -
                                    static_cast<std::ptrdiff_t>(d.pad_left);
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(d.in_w)) continue;
          const double* irow = in + (static_cast<std::size_t>(iy) * d.in_w +
                                     static_cast<std::size_t>(ix)) * d.in_c;
          const double* wbase = w + (ky * d.kw + kx) * d.in_c * d.out_c;
          for (std::size_t ci = 0; ci < d.in_c; ++ci) {
            const double v = irow[ci];
            const double* wrow = wbase + ci * d.out_c;
            for (std::size_t co = 0; co < d.out_c; ++co) orow[co] += v * wrow[co];
          }
        }
      }
    }
  }
  return out;
}

ConvGrads conv2d_backward(const Tensor& input, const Tensor& weights, const Tensor& upstream,
                          Padding padding) {
  Tensor dummy_bias({weights.dim(3)});
  const ConvDims d = check_conv_args(input, weights, dummy_bias, padding);
  if (upstream.rank() != 3 || upstream.dim(0) != d.out_h || upstream.dim(1) != d.out_w ||
      upstream.dim(2) != d.out_c) {
    throw ShapeError("conv2d upstream gradient must be [" + std::to_string(d.out_h) + "," +
                     std::to_string(d.out_w) + "," + std::to_string(d.out_c) + "], got " +
                     shape_to_string(upstream.shape()));
  }

  ConvGrads g{Tensor(input.shape()), Tensor(weights.shape()), Tensor({d.out_c})};

  const double* in = input.data();
  const double* w = weights.data();
  const double* up = upstream.data();
  double* gi = g.input.data();
  double* gw = g.weights.data();
  double* gb = g.bias.data();

  for (std::size_t y = 0; y < d.out_h; ++y) {
    for (std::size_t x = 0; x < d.out_w; ++x) {
      const double* urow = up + (y * d.out_w + x) * d.out_c;
      for (std::size_t co = 0; co < d.out_c; ++co) gb[co] += urow[co];
      for (std::size_t ky = 0; ky < d.kh; ++ky) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y + ky) -
                                  static_cast<std::ptrdiff_t>(d.pad_top);
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.in_h)) continue;
        for (std::size_t kx = 0; kx < d.kw; ++kx) {
          const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x + kx) -
                                    static_cast<std::ptrdiff_t>(d.pad_left);
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(d.in_w)) continue;
          const std::size_t in_off = (static_cast<std::size_t>(iy) * d.in_w +
                                      static_cast<std::size_t>(ix)) * d.in_c;
          const std::size_t w_off = (ky * d.kw + kx) * d.in_c * d.out_c;
          for (std::size_t ci = 0; ci < d.in_c; ++ci) {
            const double v = in[in_off + ci];
            const double* wrow = w + w_off + ci * d.out_c;
            double* gwrow = gw + w_off + ci * d.out_c;
            double acc = 0.0;
            for (std::size_t co = 0; co < d.out_c; ++co) {
              const double u = urow[co];
              gwrow[co] += v * u;
              acc += wrow[co] * u;
            }
            gi[in_off + ci] += acc;
          }
        }
      }
    }
  }
  return g;
}

PoolResult maxpool_forward(const Tensor& input, const PoolSpec& pool) {
  if (input.rank() != 3) {
    throw ShapeError("maxpool input must be rank 3 [H,W,C], got rank " +
                     std::to_string(input.rank()));
  }
  if (pool.window_height < 1 || pool.window_width < 1) {
    throw ValueError("pool window must be >= 1 in each axis");
  }
  const std::size_t in_h = input.dim(0), in_w = input.dim(1), ch = input.dim(2);
  const std::size_t wh = static_cast<std::size_t>(pool.window_height);
  const std::size_t ww = static_cast<std::size_t>(pool.window_width);
  const std::size_t out_h = in_h / wh;
  const std::size_t out_w = in_w / ww;
  if (out_h == 0 || out_w == 0) {
    throw ShapeError("pool window " + std::to_string(wh) + "x" + std::to_string(ww) +
                     " larger than input " + std::to_string(in_h) + "x" + std::to_string(in_w));
  }

  PoolResult res{Tensor({out_h, out_w, ch}), {}};
  res.argmax.resize(res.output.size());
  const double* in = input.data();
  double* out = res.output.data();

  for (std::size_t y = 0; y < out_h; ++y) {
    for (std::size_t x = 0; x < out_w; ++x) {
      for (std::size_t c = 0; c < ch; ++c) {
        std::size_t best_idx = (y * wh * in_w + x * ww) * ch + c;
        double best = in[best_idx];
        for (std::size_t dy = 0; dy < wh; ++dy) {
          for (std::size_t dx = 0; dx < ww; ++dx) {
            const std::size_t idx = ((y * wh + dy) * in_w + (x * ww + dx)) * ch + c;
            if (in[idx] > best) {  // strict: first cell in scan order wins ties
              best = in[idx];
              best_idx = idx;
            }
          }
        }
        const std::size_t o = (y * out_w + x) * ch + c;
        out[o] = best;
        res.argmax[o] = best_idx;
      }
    }
  }
  return res;
}

Tensor maxpool_backward(const std::vector<std::size_t>& argmax, const Tensor& upstream,
                        const std::vector<std::size_t>& input_shape) {
  if (argmax.size() != upstream.size()) {
    throw ShapeError("argmax size " + std::to_string(argmax.size()) +
                     " does not match upstream size " + std::to_string(upstream.size()));
  }
  Tensor grad(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) {
    if (argmax[i] >= grad.size()) {
      throw ShapeError("argmax entry " + std::to_string(argmax[i]) +
                       " outside input of size " + std::to_string(grad.size()));
    }
    grad[argmax[i]] += upstream[i];
  }
  return grad;
}

Tensor relu(const Tensor& input) {
  Tensor out(input.shape());
  const double* in = input.data();
  double* o = out.data();
  for (std::size_t i = 0; i < input.size(); ++i) o[i] = in[i] > 0.0 ? in[i] : 0.0;
  return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& upstream) {
  if (!input.same_shape(upstream)) {
    throw ShapeError("relu upstream shape " + shape_to_string(upstream.shape()) +
                     " does not match input " + shape_to_string(input.shape()));
  }
  Tensor out(input.shape());
  const double* in = input.data();
  const double* up = upstream.data();
  double* o = out.data();
  for (std::size_t i = 0; i < input.size(); ++i) o[i] = in[i] > 0.0 ? up[i] : 0.0;
  return out;
}

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  if (input.rank() != 1) {
    throw ShapeError("dense input must be rank 1, got " + shape_to_string(input.shape()));
  }
  if (weights.rank() != 2 || weights.dim(0) != input.dim(0)) {
    throw ShapeError("dense weights must be [" + std::to_string(input.dim(0)) + ",m], got " +
                     shape_to_string(weights.shape()));
  }
  const std::size_t n = weights.dim(0), m = weights.dim(1);
  if (bias.rank() != 1 || bias.dim(0) != m) {
    throw ShapeError("dense bias must be [" + std::to_string(m) + "], got " +
                     shape_to_string(bias.shape()));
  }
  Tensor out({m});
  const double* in = input.data();
  const double* w = weights.data();
  double* o = out.data();
  for (std::size_t j = 0; j < m; ++j) o[j] = bias[j];
  for (std::size_t i = 0; i < n; ++i) {
    const double v = in[i];
    const double* wrow = w + i * m;
    for (std::size_t j = 0; j < m; ++j) o[j] += v * wrow[j];
  }
  return out;
}

DenseGrads dense_backward(const Tensor& input, const Tensor& weights, const Tensor& upstream) {
  if (input.rank() != 1 || weights.rank() != 2 || weights.dim(0) != input.dim(0)) {
    throw ShapeError("dense backward argument shapes disagree: input " +
                     shape_to_string(input.shape()) + ", weights " +
                     shape_to_string(weights.shape()));
  }
  const std::size_t n = weights.dim(0), m = weights.dim(1);
  if (upstream.rank() != 1 || upstream.dim(0) != m) {
    throw ShapeError("dense upstream must be [" + std::to_string(m) + "], got " +
                     shape_to_string(upstream.shape()));
  }
  DenseGrads g{Tensor({n}), Tensor({n, m}), upstream};
  const double* in = input.data();
  const double* w = weights.data();
  const double* up = upstream.data();
  double* gi = g.input.data();
  double* gw = g.weights.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double v = in[i];
    const double* wrow = w + i * m;
    double* gwrow = gw + i * m;
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      gwrow[j] = v * up[j];
      acc += wrow[j] * up[j];
    }
    gi[i] = acc;
  }
  return g;
}

Tensor concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat requires at least one part");
  std::size_t total = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    if (parts[p].rank() != 1) {
      throw ShapeError("concat part " + std::to_string(p) + " must be rank 1, got " +
                       shape_to_string(parts[p].shape()));
    }
    total += parts[p].size();
  }
  Tensor out({total});
  std::size_t off = 0;
  for (const Tensor& p : parts) {
    std::copy(p.data(), p.data() + p.size(), out.data() + off);
    off += p.size();
  }
  return out;
}

std::vector<Tensor> concat_backward(const Tensor& upstream,
                                    const std::vector<std::size_t>& part_sizes) {
  if (upstream.rank() != 1) {
    throw ShapeError("concat upstream must be rank 1, got " + shape_to_string(upstream.shape()));
  }
  std::size_t total = 0;
  for (std::size_t s : part_sizes) total += s;
  if (total != upstream.size()) {
    throw ShapeError("part sizes sum to " + std::to_string(total) + " but upstream has " +
                     std::to_string(upstream.size()));
  }
  std::vector<Tensor> grads;
  grads.reserve(part_sizes.size());
  std::size_t off = 0;
  for (std::size_t s : part_sizes) {
    grads.emplace_back(std::vector<std::size_t>{s},
                       std::vector<double>(upstream.data() + off, upstream.data() + off + s));
    off += s;
  }
  return grads;
}

}  // namespace loadcnn
