#include "loadcnn/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <optional>
#include <thread>

#include "loadcnn/rng.hpp"

namespace loadcnn {

namespace {

constexpr int kConvLayers = 6;
constexpr int kPoolLayers = 4;
const std::vector<int> kOutChannels = {16, 24, 24, 64, 64, 64};

void validate_channel(const std::vector<ConvLayerSpec>& layers,
                      const std::vector<PoolPlacement>& pools, bool vertical,
                      const std::string& name) {
  if (static_cast<int>(layers.size()) != kConvLayers) {
    throw ShapeError(name + " channel must have exactly 6 conv layers, got " +
                     std::to_string(layers.size()));
  }
  if (static_cast<int>(pools.size()) != kPoolLayers) {
    throw ShapeError(name + " channel must have exactly 4 pooling layers, got " +
                     std::to_string(pools.size()));
  }
  int prev_out = 1;
  for (int i = 0; i < kConvLayers; ++i) {
    const ConvLayerSpec& s = layers[i];
    if (s.out_channels != kOutChannels[i]) {
      throw ShapeError(name + " conv layer " + std::to_string(i + 1) + " must have " +
                       std::to_string(kOutChannels[i]) + " kernels, got " +
                       std::to_string(s.out_channels));
    }
    if (s.in_channels != prev_out) {
      throw ShapeError(name + " conv layer " + std::to_string(i + 1) + " in_channels " +
                       std::to_string(s.in_channels) + " does not chain from " +
                       std::to_string(prev_out));
    }
    if (s.kernel_height < 1 || s.kernel_width < 1) {
      throw ValueError(name + " conv layer " + std::to_string(i + 1) + " kernel must be >= 1");
    }
    if (!vertical && s.kernel_height != 1) {
      throw ShapeError("horizontal kernels must have height 1, layer " + std::to_string(i + 1) +
                       " has " + std::to_string(s.kernel_height));
    }
    if (vertical && s.kernel_width != 1) {
      throw ShapeError("vertical kernels must have width 1, layer " + std::to_string(i + 1) +
                       " has " + std::to_string(s.kernel_width));
    }
    prev_out = s.out_channels;
  }
  for (const PoolPlacement& p : pools) {
    if (p.after_layer < 1 || p.after_layer > kConvLayers) {
      throw ValueError(name + " pool placement after layer " + std::to_string(p.after_layer) +
                       " is outside 1..6");
    }
    if (p.pool.window_height < 1 || p.pool.window_width < 1) {
      throw ValueError(name + " pool window must be >= 1");
    }
  }
}

std::vector<std::size_t> propagate_shape(const std::vector<ConvLayerSpec>& layers,
                                         const std::vector<PoolPlacement>& pools,
                                         std::size_t h, std::size_t w) {
  std::size_t c = 1;
  for (int i = 0; i < static_cast<int>(layers.size()); ++i) {
    const ConvLayerSpec& s = layers[i];
    if (s.padding == Padding::valid) {
      if (static_cast<std::size_t>(s.kernel_height) > h ||
          static_cast<std::size_t>(s.kernel_width) > w) {
        throw ShapeError("conv layer " + std::to_string(i + 1) + " kernel exceeds its input");
      }
      h = h - s.kernel_height + 1;
      w = w - s.kernel_width + 1;
    }
    c = static_cast<std::size_t>(s.out_channels);
    for (const PoolPlacement& p : pools) {
      if (p.after_layer == i + 1) {
        h /= static_cast<std::size_t>(p.pool.window_height);
        w /= static_cast<std::size_t>(p.pool.window_width);
        if (h == 0 || w == 0) {
          throw ShapeError("pool after layer " + std::to_string(i + 1) +
                           " collapses a spatial dimension to zero");
        }
      }
    }
  }
  return {h, w, c};
}

}  // namespace

void LoadCNNConfig::validate() const {
  validate_channel(horizontal, horizontal_pools, false, "horizontal");
  validate_channel(vertical, vertical_pools, true, "vertical");
  if (history_days < 1 || slots_per_day < 1 || output_size < 1) {
    throw ValueError("history_days, slots_per_day and output_size must be positive");
  }
  if (id_size != 62 || month_size != 12 || day_size != 31 || week_size != 7) {
    throw ValueError("feature sizes must be id=62, month=12, day=31, week=7");
  }
  // Must compose on a [7,48,1] input.
  channel_output_shape(false);
  channel_output_shape(true);
}

std::vector<std::size_t> LoadCNNConfig::channel_output_shape(bool vertical_channel) const {
  const auto& layers = vertical_channel ? vertical : horizontal;
  const auto& pools = vertical_channel ? vertical_pools : horizontal_pools;
  return propagate_shape(layers, pools, static_cast<std::size_t>(history_days),
                         static_cast<std::size_t>(slots_per_day));
}

std::size_t LoadCNNConfig::flattened_channel_size(bool vertical_channel) const {
  return shape_product(channel_output_shape(vertical_channel));
}

std::size_t LoadCNNConfig::feature_size() const {
  return flattened_channel_size(false) + flattened_channel_size(true) +
         static_cast<std::size_t>(id_size + month_size + day_size + week_size);
}

LoadCNNConfig default_config() { return default_config(3); }

LoadCNNConfig default_config(int later_kernel_n) {
  if (later_kernel_n < 1) throw ValueError("kernel width must be >= 1");
  LoadCNNConfig cfg;
  int prev = 1;
  for (int i = 0; i < kConvLayers; ++i) {
    const int n = i == 0 ? 7 : later_kernel_n;
    cfg.horizontal.push_back({1, n, prev, kOutChannels[i], Padding::same});
    prev = kOutChannels[i];
  }
  prev = 1;
  for (int i = 0; i < kConvLayers; ++i) {
    const int n = i == 0 ? 4 : later_kernel_n;
    cfg.vertical.push_back({n, 1, prev, kOutChannels[i], Padding::same});
    prev = kOutChannels[i];
  }
  for (int layer = 1; layer <= kPoolLayers; ++layer) {
    cfg.horizontal_pools.push_back({layer, PoolSpec{1, 2}});
    // The vertical channel also pools the intraday axis so its [N,1] kernels
    // keep all 7 days to correlate across.
    cfg.vertical_pools.push_back({layer, PoolSpec{1, 2}});
  }
  cfg.validate();
  return cfg;
}

void LoadCNNParams::for_each(const std::function<void(const std::string&, Tensor&)>& fn) {
  for (std::size_t i = 0; i < h_weights.size(); ++i) {
    fn("h_conv" + std::to_string(i + 1) + "_w", h_weights[i]);
    fn("h_conv" + std::to_string(i + 1) + "_b", h_biases[i]);
  }
  for (std::size_t i = 0; i < v_weights.size(); ++i) {
    fn("v_conv" + std::to_string(i + 1) + "_w", v_weights[i]);
    fn("v_conv" + std::to_string(i + 1) + "_b", v_biases[i]);
  }
  fn("head_w", head_weights);
  fn("head_b", head_bias);
}

void LoadCNNParams::for_each(
    const std::function<void(const std::string&, const Tensor&)>& fn) const {
  const_cast<LoadCNNParams*>(this)->for_each(
      [&fn](const std::string& name, Tensor& t) { fn(name, t); });
}

std::size_t LoadCNNParams::tensor_count() const {
  return h_weights.size() + h_biases.size() + v_weights.size() + v_biases.size() + 2;
}

long LoadCNNParams::value_count() const {
  long n = 0;
  for_each([&n](const std::string&, const Tensor& t) { n += static_cast<long>(t.size()); });
  return n;
}

LoadCNNParams zero_params(const LoadCNNConfig& config) {
  config.validate();
  LoadCNNParams p;
  p.config = config;
  auto add_conv = [](const ConvLayerSpec& s, std::vector<Tensor>& ws, std::vector<Tensor>& bs) {
    ws.emplace_back(std::vector<std::size_t>{
        static_cast<std::size_t>(s.kernel_height), static_cast<std::size_t>(s.kernel_width),
        static_cast<std::size_t>(s.in_channels), static_cast<std::size_t>(s.out_channels)});
    bs.emplace_back(std::vector<std::size_t>{static_cast<std::size_t>(s.out_channels)});
  };
  for (const ConvLayerSpec& s : config.horizontal) add_conv(s, p.h_weights, p.h_biases);
  for (const ConvLayerSpec& s : config.vertical) add_conv(s, p.v_weights, p.v_biases);
  p.head_weights = Tensor({config.feature_size(), static_cast<std::size_t>(config.output_size)});
  p.head_bias = Tensor({static_cast<std::size_t>(config.output_size)});
  return p;
}

LoadCNNParams init_params(const LoadCNNConfig& config, std::uint64_t seed) {
  LoadCNNParams p = zero_params(config);
  Rng rng(seed);
  auto fill_he = [&rng](Tensor& w, double fan_in) {
    const double stddev = std::sqrt(2.0 / fan_in);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.normal(0.0, stddev);
  };
  for (std::size_t i = 0; i < p.h_weights.size(); ++i) {
    const ConvLayerSpec& s = config.horizontal[i];
    fill_he(p.h_weights[i], static_cast<double>(s.kernel_height) * s.kernel_width * s.in_channels);
  }
  for (std::size_t i = 0; i < p.v_weights.size(); ++i) {
    const ConvLayerSpec& s = config.vertical[i];
    fill_he(p.v_weights[i], static_cast<double>(s.kernel_height) * s.kernel_width * s.in_channels);
  }
  fill_he(p.head_weights, static_cast<double>(config.feature_size()));
  return p;
}

LoadCNNParams zeros_like(const LoadCNNParams& params) { return zero_params(params.config); }

namespace {

struct LayerCache {
  Tensor input;    // conv input
  Tensor pre_act;  // conv output
  Tensor act;      // relu output
  std::optional<PoolResult> pool;
};

struct ForwardCache {
  std::vector<LayerCache> h_layers, v_layers;
  Tensor features;
  Tensor prediction;
};

const PoolPlacement* pool_after(const std::vector<PoolPlacement>& pools, int layer) {
  for (const PoolPlacement& p : pools) {
    if (p.after_layer == layer) return &p;
  }
  return nullptr;
}

std::vector<LayerCache> run_channel(const std::vector<ConvLayerSpec>& specs,
                                    const std::vector<PoolPlacement>& pools,
                                    const std::vector<Tensor>& weights,
                                    const std::vector<Tensor>& biases, Tensor input) {
  std::vector<LayerCache> cache;
  cache.reserve(specs.size());
  Tensor x = std::move(input);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    LayerCache lc;
    lc.input = std::move(x);
    lc.pre_act = conv2d_forward(lc.input, weights[i], biases[i], specs[i].padding);
    lc.act = relu(lc.pre_act);
    if (const PoolPlacement* p = pool_after(pools, static_cast<int>(i) + 1)) {
      lc.pool = maxpool_forward(lc.act, p->pool);
      x = lc.pool->output;
    } else {
      x = lc.act;
    }
    cache.push_back(std::move(lc));
  }
  return cache;
}

void check_sample(const LoadCNNConfig& cfg, const Sample& sample) {
  const auto expect = [](const Tensor& t, std::size_t len, const char* name) {
    if (t.rank() != 1 || t.dim(0) != len) {
      throw ShapeError(std::string("sample ") + name + " must be [" + std::to_string(len) +
                       "], got " + shape_to_string(t.shape()));
    }
  };
  if (sample.history.rank() != 2 ||
      sample.history.dim(0) != static_cast<std::size_t>(cfg.history_days) ||
      sample.history.dim(1) != static_cast<std::size_t>(cfg.slots_per_day)) {
    throw ShapeError("sample history must be [" + std::to_string(cfg.history_days) + "," +
                     std::to_string(cfg.slots_per_day) + "], got " +
                     shape_to_string(sample.history.shape()));
  }
  expect(sample.id_onehot, static_cast<std::size_t>(cfg.id_size), "id_onehot");
  expect(sample.month, static_cast<std::size_t>(cfg.month_size), "month");
  expect(sample.day, static_cast<std::size_t>(cfg.day_size), "day");
  expect(sample.week, static_cast<std::size_t>(cfg.week_size), "week");
}

ForwardCache run_forward(const LoadCNNParams& params, const Sample& sample) {
  const LoadCNNConfig& cfg = params.config;
  check_sample(cfg, sample);

  Tensor input = sample.history.reshaped({static_cast<std::size_t>(cfg.history_days),
                                          static_cast<std::size_t>(cfg.slots_per_day), 1});
  ForwardCache fc;
  fc.h_layers = run_channel(cfg.horizontal, cfg.horizontal_pools, params.h_weights, params.h_biases,
                            input);
  fc.v_layers = run_channel(cfg.vertical, cfg.vertical_pools, params.v_weights, params.v_biases,
                            std::move(input));

  const LayerCache& h_last = fc.h_layers.back();
  const LayerCache& v_last = fc.v_layers.back();
  const Tensor& h_out = h_last.pool ? h_last.pool->output : h_last.act;
  const Tensor& v_out = v_last.pool ? v_last.pool->output : v_last.act;

  // Flatten order: day-major, then intraday, then channel (row-major layout).
  fc.features = concat({h_out.reshaped({h_out.size()}), v_out.reshaped({v_out.size()}),
                        sample.id_onehot, sample.month, sample.day, sample.week});
  fc.prediction = dense_forward(fc.features, params.head_weights, params.head_bias);
  return fc;
}

Tensor channel_backward(const std::vector<ConvLayerSpec>& specs,
                        const std::vector<Tensor>& weights, std::vector<LayerCache>& cache,
                        Tensor upstream, std::vector<Tensor>& grad_w, std::vector<Tensor>& grad_b) {
  Tensor g = std::move(upstream);
  for (int i = static_cast<int>(specs.size()) - 1; i >= 0; --i) {
    LayerCache& lc = cache[i];
    if (lc.pool) {
      g = maxpool_backward(lc.pool->argmax, g, lc.act.shape());
    }
    g = relu_backward(lc.pre_act, g);
    ConvGrads cg = conv2d_backward(lc.input, weights[i], g, specs[i].padding);
    grad_w[i] = std::move(cg.weights);
    grad_b[i] = std::move(cg.bias);
    g = std::move(cg.input);
  }
  return g;
}

}  // namespace

Tensor feature_vector(const LoadCNNParams& params, const Sample& sample) {
  return run_forward(params, sample).features;
}

Tensor forward(const LoadCNNParams& params, const Sample& sample) {
  return run_forward(params, sample).prediction;
}

double loss(const Tensor& prediction, const Tensor& target) {
  if (prediction.rank() != 1 || target.rank() != 1 || prediction.size() != target.size()) {
    throw ShapeError("loss arguments must be rank-1 tensors of equal length, got " +
                     shape_to_string(prediction.shape()) + " and " +
                     shape_to_string(target.shape()));
  }
  if (prediction.size() == 0) throw ValueError("loss of empty series");
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double r = target[i] - prediction[i];
    sum_sq += r * r;
  }
  return std::sqrt(sum_sq / static_cast<double>(prediction.size()));
}

LoadCNNParams backward(const LoadCNNParams& params, const Sample& sample) {
  ForwardCache fc = run_forward(params, sample);
  const Tensor& pred = fc.prediction;
  const Tensor& target = sample.target;
  if (target.rank() != 1 || target.size() != pred.size()) {
    throw ShapeError("sample target must be [" + std::to_string(pred.size()) + "], got " +
                     shape_to_string(target.shape()));
  }

  LoadCNNParams grads = zeros_like(params);
  const double n = static_cast<double>(pred.size());
  const double l = loss(pred, target);

  // d loss / d pred_i = (pred_i - target_i) / (n * loss); defined as 0 at
  // exactly zero residual where the square root has no derivative.
  Tensor dpred({pred.size()});
  if (l > 0.0) {
    for (std::size_t i = 0; i < pred.size(); ++i) dpred[i] = (pred[i] - target[i]) / (n * l);
  } else {
    return grads;
  }

  DenseGrads dg = dense_backward(fc.features, params.head_weights, dpred);
  grads.head_weights = std::move(dg.weights);
  grads.head_bias = std::move(dg.bias);

  const LoadCNNConfig& cfg = params.config;
  const std::size_t h_flat = cfg.flattened_channel_size(false);
  const std::size_t v_flat = cfg.flattened_channel_size(true);
  std::vector<Tensor> parts = concat_backward(
      dg.input, {h_flat, v_flat, static_cast<std::size_t>(cfg.id_size),
                 static_cast<std::size_t>(cfg.month_size), static_cast<std::size_t>(cfg.day_size),
                 static_cast<std::size_t>(cfg.week_size)});

  channel_backward(cfg.horizontal, params.h_weights, fc.h_layers,
                   parts[0].reshaped(cfg.channel_output_shape(false)), grads.h_weights,
                   grads.h_biases);
  channel_backward(cfg.vertical, params.v_weights, fc.v_layers,
                   parts[1].reshaped(cfg.channel_output_shape(true)), grads.v_weights,
                   grads.v_biases);
  return grads;
}

double batch_loss(const LoadCNNParams& params, const std::vector<const Sample*>& batch) {
  if (batch.empty()) throw ValueError("batch_loss of empty batch");
  double total = 0.0;
  for (const Sample* s : batch) total += loss(forward(params, *s), s->target);
  return total / static_cast<double>(batch.size());
}

namespace {

void accumulate(LoadCNNParams& acc, const LoadCNNParams& g) {
  auto add = [](Tensor& a, const Tensor& b) {
    double* pa = a.data();
    const double* pb = b.data();
    for (std::size_t i = 0; i < a.size(); ++i) pa[i] += pb[i];
  };
  for (std::size_t i = 0; i < acc.h_weights.size(); ++i) {
    add(acc.h_weights[i], g.h_weights[i]);
    add(acc.h_biases[i], g.h_biases[i]);
  }
  for (std::size_t i = 0; i < acc.v_weights.size(); ++i) {
    add(acc.v_weights[i], g.v_weights[i]);
    add(acc.v_biases[i], g.v_biases[i]);
  }
  add(acc.head_weights, g.head_weights);
  add(acc.head_bias, g.head_bias);
}

void scale(LoadCNNParams& p, double factor) {
  p.for_each([factor](const std::string&, Tensor& t) {
    double* d = t.data();
    for (std::size_t i = 0; i < t.size(); ++i) d[i] *= factor;
  });
}

// Samples are reduced in fixed groups of 8 so the floating-point summation
// order is identical for every worker count.
constexpr std::size_t kGradGroup = 8;

}  // namespace

BatchResult batch_backward(const LoadCNNParams& params, const std::vector<const Sample*>& batch,
                           int threads) {
  if (batch.empty()) throw ValueError("batch_backward of empty batch");
  const std::size_t n = batch.size();
  const std::size_t groups = (n + kGradGroup - 1) / kGradGroup;

  std::vector<LoadCNNParams> partials(groups);
  std::vector<double> partial_losses(groups, 0.0);

  auto run_group = [&](std::size_t g) {
    LoadCNNParams acc = zeros_like(params);
    double loss_sum = 0.0;
    const std::size_t hi = std::min(n, (g + 1) * kGradGroup);
    for (std::size_t i = g * kGradGroup; i < hi; ++i) {
      const Sample& s = *batch[i];
      loss_sum += loss(forward(params, s), s.target);
      accumulate(acc, backward(params, s));
    }
    partials[g] = std::move(acc);
    partial_losses[g] = loss_sum;
  };

  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, groups);

  if (workers <= 1) {
    for (std::size_t g = 0; g < groups; ++g) run_group(g);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t g = next.fetch_add(1); g < groups; g = next.fetch_add(1)) run_group(g);
      });
    }
    for (std::thread& t : pool) t.join();
  }

  BatchResult res{0.0, std::move(partials[0])};
  for (std::size_t g = 1; g < groups; ++g) accumulate(res.grads, partials[g]);
  for (std::size_t g = 0; g < groups; ++g) res.mean_loss += partial_losses[g];
  res.mean_loss /= static_cast<double>(n);
  scale(res.grads, 1.0 / static_cast<double>(n));
  return res;
}

long param_count(const LoadCNNConfig& config) {
  config.validate();
  long total = 0;
  for (const ConvLayerSpec& s : config.horizontal) total += s.weight_count() + s.bias_count();
  for (const ConvLayerSpec& s : config.vertical) total += s.weight_count() + s.bias_count();
  total += static_cast<long>(config.feature_size()) * config.output_size + config.output_size;
  return total;
}

std::vector<double> flatten_values(const LoadCNNParams& params) {
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(params.value_count()));
  params.for_each([&values](const std::string&, const Tensor& t) {
    values.insert(values.end(), t.data(), t.data() + t.size());
  });
  return values;
}

void assign_values(LoadCNNParams& params, const std::vector<double>& values) {
  std::size_t off = 0;
  params.for_each([&values, &off](const std::string&, Tensor& t) {
    if (off + t.size() > values.size()) {
      throw ShapeError("value vector too short for parameter set");
    }
    std::copy(values.begin() + off, values.begin() + off + t.size(), t.data());
    off += t.size();
  });
  if (off != values.size()) {
    throw ShapeError("value vector length " + std::to_string(values.size()) +
                     " does not match parameter count " + std::to_string(off));
  }
}

}  // namespace loadcnn
