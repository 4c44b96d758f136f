#include "loadcnn/gradsuite.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "loadcnn/data.hpp"
#include "loadcnn/gradcheck.hpp"
#include "loadcnn/layers.hpp"
#include "loadcnn/model.hpp"
#include "loadcnn/rng.hpp"

namespace loadcnn {

namespace {

Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-scale, scale);
  return t;
}

double weighted_sum(const Tensor& values, const Tensor& weights) {
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) s += values[i] * weights[i];
  return s;
}

std::vector<double> cat(std::initializer_list<const Tensor*> tensors) {
  std::vector<double> out;
  for (const Tensor* t : tensors) out.insert(out.end(), t->data(), t->data() + t->size());
  return out;
}

double conv_trial(Rng& rng, Padding padding, double epsilon, bool flip_sign) {
  const std::size_t h = 2 + rng.below(4), w = 2 + rng.below(4);
  const std::size_t ci = 1 + rng.below(3), co = 1 + rng.below(3);
  const std::size_t kh = 1 + rng.below(std::min<std::size_t>(3, h));
  const std::size_t kw = 1 + rng.below(std::min<std::size_t>(3, w));

  const Tensor input = random_tensor(rng, {h, w, ci});
  const Tensor weights = random_tensor(rng, {kh, kw, ci, co});
  const Tensor bias = random_tensor(rng, {co});
  const Tensor out = conv2d_forward(input, weights, bias, padding);
  const Tensor upstream = random_tensor(rng, out.shape());

  ConvGrads grads = conv2d_backward(input, weights, upstream, padding);
  if (flip_sign) {
    for (std::size_t i = 0; i < grads.weights.size(); ++i) grads.weights[i] = -grads.weights[i];
  }

  const std::vector<double> x = cat({&input, &weights, &bias});
  const std::vector<double> analytic = cat({&grads.input, &grads.weights, &grads.bias});
  auto f = [&](const std::vector<double>& v) {
    Tensor in2(input.shape(), {v.begin(), v.begin() + input.size()});
    Tensor w2(weights.shape(),
              {v.begin() + input.size(), v.begin() + input.size() + weights.size()});
    Tensor b2(bias.shape(), {v.end() - bias.size(), v.end()});
    return weighted_sum(conv2d_forward(in2, w2, b2, padding), upstream);
  };
  return grad_check(f, x, analytic, epsilon);
}

double maxpool_trial(Rng& rng, double epsilon) {
  const std::size_t h = 2 + rng.below(4), w = 2 + rng.below(4), c = 1 + rng.below(2);
  const PoolSpec pool{static_cast<int>(1 + rng.below(std::min<std::size_t>(2, h))),
                      static_cast<int>(1 + rng.below(std::min<std::size_t>(2, w)))};

  // Distinct, well-separated values so the 1e-5 perturbation cannot flip a tie.
  Tensor input({h, w, c});
  std::vector<double> levels(input.size());
  std::iota(levels.begin(), levels.end(), 0.0);
  rng.shuffle(levels);
  for (std::size_t i = 0; i < input.size(); ++i) input[i] = levels[i] * 0.1;

  PoolResult res = maxpool_forward(input, pool);
  const Tensor upstream = random_tensor(rng, res.output.shape());
  const Tensor analytic = maxpool_backward(res.argmax, upstream, input.shape());

  auto f = [&](const std::vector<double>& v) {
    Tensor in2(input.shape(), v);
    return weighted_sum(maxpool_forward(in2, pool).output, upstream);
  };
  return grad_check(f, {input.data(), input.data() + input.size()},
                    {analytic.data(), analytic.data() + analytic.size()}, epsilon);
}

double relu_trial(Rng& rng, double epsilon) {
  const std::size_t n = 4 + rng.below(8);
  Tensor input({n});
  for (std::size_t i = 0; i < n; ++i) {
    const double magnitude = 0.05 + rng.uniform();  // keep away from the kink at 0
    input[i] = rng.uniform() < 0.5 ? -magnitude : magnitude;
  }
  const Tensor upstream = random_tensor(rng, {n});
  const Tensor analytic = relu_backward(input, upstream);
  auto f = [&](const std::vector<double>& v) {
    return weighted_sum(relu(Tensor(input.shape(), v)), upstream);
  };
  return grad_check(f, {input.data(), input.data() + n},
                    {analytic.data(), analytic.data() + n}, epsilon);
}

double dense_trial(Rng& rng, double epsilon) {
  const std::size_t n = 2 + rng.below(5), m = 2 + rng.below(4);
  const Tensor input = random_tensor(rng, {n});
  const Tensor weights = random_tensor(rng, {n, m});
  const Tensor bias = random_tensor(rng, {m});
  const Tensor upstream = random_tensor(rng, {m});
  DenseGrads grads = dense_backward(input, weights, upstream);

  const std::vector<double> x = cat({&input, &weights, &bias});
  const std::vector<double> analytic = cat({&grads.input, &grads.weights, &grads.bias});
  auto f = [&](const std::vector<double>& v) {
    Tensor in2(input.shape(), {v.begin(), v.begin() + n});
    Tensor w2(weights.shape(), {v.begin() + n, v.begin() + n + n * m});
    Tensor b2(bias.shape(), {v.end() - m, v.end()});
    return weighted_sum(dense_forward(in2, w2, b2), upstream);
  };
  return grad_check(f, x, analytic, epsilon);
}

double concat_trial(Rng& rng, double epsilon) {
  const std::size_t n_parts = 1 + rng.below(4);
  std::vector<Tensor> parts;
  std::vector<std::size_t> sizes;
  std::vector<double> x;
  for (std::size_t p = 0; p < n_parts; ++p) {
    parts.push_back(random_tensor(rng, {1 + rng.below(5)}));
    sizes.push_back(parts.back().size());
    x.insert(x.end(), parts.back().data(), parts.back().data() + parts.back().size());
  }
  const Tensor out = concat(parts);
  const Tensor upstream = random_tensor(rng, out.shape());
  std::vector<double> analytic;
  for (const Tensor& g : concat_backward(upstream, sizes)) {
    analytic.insert(analytic.end(), g.data(), g.data() + g.size());
  }
  auto f = [&](const std::vector<double>& v) {
    std::vector<Tensor> ps;
    std::size_t off = 0;
    for (std::size_t s : sizes) {
      ps.emplace_back(std::vector<std::size_t>{s},
                      std::vector<double>(v.begin() + off, v.begin() + off + s));
      off += s;
    }
    return weighted_sum(concat(ps), upstream);
  };
  return grad_check(f, x, analytic, epsilon);
}

Sample random_sample(Rng& rng) {
  Window w;
  w.history = Tensor({7, 48});
  for (std::size_t i = 0; i < w.history.size(); ++i) w.history[i] = rng.uniform(0.0, 2.0);
  w.target = Tensor({48});
  for (std::size_t i = 0; i < w.target.size(); ++i) w.target[i] = rng.uniform(0.0, 2.0);
  w.customer_index = static_cast<int>(rng.below(929));
  w.target_day = 8;
  w.target_date = Date::from_ymd(2009, 7, 1).plus_days(static_cast<int>(rng.below(500)));
  return make_sample(w, 929);
}

double model_trial(Rng& rng, double epsilon, int coords_per_instance) {
  const LoadCNNConfig cfg = default_config();
  const LoadCNNParams params = init_params(cfg, rng.next_u64());
  const Sample sample = random_sample(rng);

  const std::vector<double> x = flatten_values(params);
  const std::vector<double> analytic = flatten_values(backward(params, sample));

  std::vector<std::size_t> coords;
  coords.reserve(coords_per_instance);
  for (int i = 0; i < coords_per_instance; ++i) coords.push_back(rng.below(x.size()));

  LoadCNNParams probe = zero_params(cfg);
  auto f = [&](const std::vector<double>& v) {
    assign_values(probe, v);
    return loss(forward(probe, sample), sample.target);
  };
  return grad_check(f, x, analytic, epsilon, &coords);
}

}  // namespace

std::vector<GradCheckReport> run_gradient_suite(std::uint64_t seed,
                                                const GradSuiteOptions& options) {
  Rng rng(seed + seed_offset::gradcheck);
  std::vector<GradCheckReport> reports;

  auto run = [&](const std::string& name, auto&& trial, int trials) {
    double worst = 0.0;
    for (int i = 0; i < trials; ++i) worst = std::max(worst, trial());
    reports.push_back({name, worst, worst < options.tolerance});
  };

  run("conv2d-valid",
      [&] { return conv_trial(rng, Padding::valid, options.epsilon,
                              options.flip_conv_weight_sign); },
      options.trials_per_layer);
  run("conv2d-same",
      [&] { return conv_trial(rng, Padding::same, options.epsilon,
                              options.flip_conv_weight_sign); },
      options.trials_per_layer);
  run("maxpool", [&] { return maxpool_trial(rng, options.epsilon); }, options.trials_per_layer);
  run("relu", [&] { return relu_trial(rng, options.epsilon); }, options.trials_per_layer);
  run("dense", [&] { return dense_trial(rng, options.epsilon); }, options.trials_per_layer);
  run("concat", [&] { return concat_trial(rng, options.epsilon); }, options.trials_per_layer);
  // Two random instances, 50 sampled parameter coordinates each.
  run("model", [&] { return model_trial(rng, options.epsilon, 50); }, 2);

  return reports;
}

}  // namespace loadcnn
