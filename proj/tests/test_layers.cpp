#include <doctest.h>

#include <cmath>
#include <vector>

#include "loadcnn/gradcheck.hpp"
#include "loadcnn/layers.hpp"
#include "loadcnn/rng.hpp"
#include "oracles.hpp"

using namespace loadcnn;

namespace {

Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

}  // namespace

TEST_SUITE("layers") {

TEST_CASE("conv2d valid: ones kernel sums the window") {
  Tensor input({1, 3, 1}, {1, 2, 3});
  Tensor kernel = Tensor::full({1, 3, 1, 1}, 1.0);
  Tensor bias({1});
  Tensor out = conv2d_forward(input, kernel, bias, Padding::valid);
  CHECK(out.shape() == std::vector<std::size_t>{1, 1, 1});
  CHECK(out[0] == doctest::Approx(6.0));
}

TEST_CASE("conv2d same on zero input returns the bias everywhere") {
  Rng rng(7);
  Tensor input({7, 48, 1});
  Tensor kernel = random_tensor(rng, {1, 7, 1, 3});
  Tensor bias({3}, {0.5, -1.25, 2.0});
  Tensor out = conv2d_forward(input, kernel, bias, Padding::same);
  REQUIRE(out.shape() == std::vector<std::size_t>{7, 48, 3});
  for (std::size_t y = 0; y < 7; ++y) {
    for (std::size_t x = 0; x < 48; ++x) {
      for (std::size_t c = 0; c < 3; ++c) CHECK(out.at(y, x, c) == bias[c]);
    }
  }
}

TEST_CASE("conv2d same matches the brute-force oracle on a [4,6,2] instance") {
  Rng rng(11);
  Tensor input = random_tensor(rng, {4, 6, 2});
  Tensor kernel = random_tensor(rng, {3, 1, 2, 3});
  Tensor bias = random_tensor(rng, {3});
  Tensor got = conv2d_forward(input, kernel, bias, Padding::same);
  Tensor want = oracle::conv2d(input, kernel, bias, Padding::same);
  REQUIRE(got.same_shape(want));
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(std::fabs(got[i] - want[i]) <= 1e-12);
  }
}

TEST_CASE("conv2d equals the oracle on random small instances, both paddings") {
  Rng rng(13);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t h = 1 + rng.below(8), w = 1 + rng.below(8);
    const std::size_t ci = 1 + rng.below(3), co = 1 + rng.below(3);
    const std::size_t kh = 1 + rng.below(h), kw = 1 + rng.below(w);
    const Padding padding = trial % 2 ? Padding::same : Padding::valid;
    Tensor input = random_tensor(rng, {h, w, ci});
    Tensor kernel = random_tensor(rng, {kh, kw, ci, co});
    Tensor bias = random_tensor(rng, {co});
    Tensor got = conv2d_forward(input, kernel, bias, padding);
    Tensor want = oracle::conv2d(input, kernel, bias, padding);
    REQUIRE(got.same_shape(want));
    for (std::size_t i = 0; i < got.size(); ++i) REQUIRE(std::fabs(got[i] - want[i]) <= 1e-12);
  }
}

TEST_CASE("same padding preserves spatial dims for kernels 1..7 on dims 1..16") {
  Tensor bias({1});
  for (std::size_t k = 1; k <= 7; ++k) {
    Tensor kernel = Tensor::full({k, k, 1, 1}, 0.25);
    for (std::size_t d = 1; d <= 16; ++d) {
      Tensor input = Tensor::full({d, d, 1}, 1.0);
      Tensor out = conv2d_forward(input, kernel, bias, Padding::same);
      REQUIRE(out.dim(0) == d);
      REQUIRE(out.dim(1) == d);
    }
  }
}

TEST_CASE("conv2d shape errors name the offending dimension") {
  Tensor input({2, 2, 1});
  Tensor kernel({3, 3, 1, 1});
  Tensor bias({1});
  CHECK_THROWS_AS(conv2d_forward(input, kernel, bias, Padding::valid), ShapeError);
  CHECK_THROWS_AS(conv2d_forward(Tensor({4}), kernel, bias, Padding::same), ShapeError);
  CHECK_THROWS_WITH_AS(conv2d_forward(input, Tensor({1, 1, 2, 1}), bias, Padding::same),
                       doctest::Contains("in_channels"), ShapeError);
  CHECK_THROWS_AS(conv2d_forward(input, Tensor({1, 1, 1, 2}), bias, Padding::same), ShapeError);
}

TEST_CASE("conv2d backward: zero upstream gives zero gradients") {
  Rng rng(17);
  Tensor input = random_tensor(rng, {3, 4, 2});
  Tensor kernel = random_tensor(rng, {1, 3, 2, 2});
  Tensor upstream({3, 4, 2});
  ConvGrads g = conv2d_backward(input, kernel, upstream, Padding::same);
  for (std::size_t i = 0; i < g.input.size(); ++i) CHECK(g.input[i] == 0.0);
  for (std::size_t i = 0; i < g.weights.size(); ++i) CHECK(g.weights[i] == 0.0);
  for (std::size_t i = 0; i < g.bias.size(); ++i) CHECK(g.bias[i] == 0.0);
}

TEST_CASE("conv2d backward: scalar chain rule") {
  const double x = 1.7, w = -0.6, g = 2.5;
  ConvGrads grads = conv2d_backward(Tensor({1, 1, 1}, {x}), Tensor({1, 1, 1, 1}, {w}),
                                    Tensor({1, 1, 1}, {g}), Padding::valid);
  CHECK(grads.input[0] == doctest::Approx(g * w));
  CHECK(grads.weights[0] == doctest::Approx(g * x));
  CHECK(grads.bias[0] == doctest::Approx(g));
}

TEST_CASE("conv2d backward matches finite differences of the summed output") {
  Rng rng(19);
  Tensor input = random_tensor(rng, {4, 6, 2});
  Tensor kernel = random_tensor(rng, {3, 1, 2, 3});
  Tensor bias = random_tensor(rng, {3});
  const Tensor out = conv2d_forward(input, kernel, bias, Padding::same);
  const Tensor upstream = Tensor::full(out.shape(), 1.0);
  ConvGrads g = conv2d_backward(input, kernel, upstream, Padding::same);

  auto sum_out_from_input = [&](const std::vector<double>& v) {
    Tensor in2(input.shape(), v);
    Tensor o = conv2d_forward(in2, kernel, bias, Padding::same);
    double s = 0.0;
    for (std::size_t i = 0; i < o.size(); ++i) s += o[i];
    return s;
  };
  auto sum_out_from_weights = [&](const std::vector<double>& v) {
    Tensor k2(kernel.shape(), v);
    Tensor o = conv2d_forward(input, k2, bias, Padding::same);
    double s = 0.0;
    for (std::size_t i = 0; i < o.size(); ++i) s += o[i];
    return s;
  };

  const std::vector<double> in_v(input.data(), input.data() + input.size());
  for (std::size_t i = 0; i < input.size(); ++i) {
    const double fd = oracle::central_diff(sum_out_from_input, in_v, i, 1e-5);
    REQUIRE(oracle::rel_err(g.input[i], fd) < 1e-6);
  }
  const std::vector<double> k_v(kernel.data(), kernel.data() + kernel.size());
  for (std::size_t i = 0; i < kernel.size(); ++i) {
    const double fd = oracle::central_diff(sum_out_from_weights, k_v, i, 1e-5);
    REQUIRE(oracle::rel_err(g.weights[i], fd) < 1e-6);
  }
}

TEST_CASE("maxpool picks the window maximum and records its coordinate") {
  Tensor input({2, 2, 1}, {1, 2, 3, 4});
  PoolResult res = maxpool_forward(input, PoolSpec{2, 2});
  CHECK(res.output.shape() == std::vector<std::size_t>{1, 1, 1});
  CHECK(res.output[0] == 4.0);
  CHECK(res.argmax[0] == 3);  // flat index of (1,1)
}

TEST_CASE("maxpool ties break to the first cell in scan order") {
  Tensor input = Tensor::full({4, 6, 2}, 3.25);
  PoolResult res = maxpool_forward(input, PoolSpec{2, 2});
  REQUIRE(res.output.shape() == std::vector<std::size_t>{2, 3, 2});
  for (std::size_t y = 0; y < 2; ++y) {
    for (std::size_t x = 0; x < 3; ++x) {
      for (std::size_t c = 0; c < 2; ++c) {
        CHECK(res.output.at(y, x, c) == 3.25);
        CHECK(res.argmax[(y * 3 + x) * 2 + c] == ((y * 2) * 6 + x * 2) * 2 + c);
      }
    }
  }
}

TEST_CASE("maxpool [7,48,3] with window 1x2 matches the pairwise-maxima oracle") {
  Rng rng(23);
  Tensor input = random_tensor(rng, {7, 48, 3});
  PoolResult res = maxpool_forward(input, PoolSpec{1, 2});
  Tensor want = oracle::maxpool(input, PoolSpec{1, 2});
  REQUIRE(res.output.shape() == std::vector<std::size_t>{7, 24, 3});
  REQUIRE(res.output == want);
}

TEST_CASE("maxpool drops trailing remainders") {
  Tensor input({3, 5, 1});
  PoolResult res = maxpool_forward(input, PoolSpec{2, 2});
  CHECK(res.output.shape() == std::vector<std::size_t>{1, 2, 1});
  CHECK_THROWS_AS(maxpool_forward(input, PoolSpec{4, 2}), ShapeError);
}

TEST_CASE("maxpool backward routes gradient to the argmax only") {
  Tensor input({2, 2, 1}, {1, 2, 3, 4});
  PoolResult res = maxpool_forward(input, PoolSpec{2, 2});
  Tensor grad = maxpool_backward(res.argmax, Tensor::full({1, 1, 1}, 1.0), input.shape());
  CHECK(grad == Tensor({2, 2, 1}, {0, 0, 0, 1}));

  Tensor zero_grad = maxpool_backward(res.argmax, Tensor({1, 1, 1}), input.shape());
  for (std::size_t i = 0; i < zero_grad.size(); ++i) CHECK(zero_grad[i] == 0.0);
}

TEST_CASE("maxpool backward conserves gradient mass") {
  Rng rng(29);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t h = 1 + rng.below(8), w = 1 + rng.below(8), c = 1 + rng.below(3);
    const PoolSpec pool{static_cast<int>(1 + rng.below(h)), static_cast<int>(1 + rng.below(w))};
    Tensor input = random_tensor(rng, {h, w, c});
    PoolResult res = maxpool_forward(input, pool);
    Tensor upstream = random_tensor(rng, res.output.shape());
    Tensor grad = maxpool_backward(res.argmax, upstream, input.shape());
    double up_sum = 0.0, grad_sum = 0.0;
    for (std::size_t i = 0; i < upstream.size(); ++i) up_sum += upstream[i];
    for (std::size_t i = 0; i < grad.size(); ++i) grad_sum += grad[i];
    REQUIRE(grad_sum == doctest::Approx(up_sum).epsilon(1e-12));
  }
}

TEST_CASE("relu basics") {
  Tensor input({3}, {-1, 0, 2});
  CHECK(relu(input) == Tensor({3}, {0, 0, 2}));
  CHECK(relu_backward(input, Tensor({3}, {5, 5, 5})) == Tensor({3}, {0, 0, 5}));
}

TEST_CASE("relu output is non-negative and backward is zero where output is zero") {
  Rng rng(31);
  Tensor input = random_tensor(rng, {6, 5, 2});
  Tensor out = relu(input);
  Tensor want = oracle::relu(input);
  CHECK(out == want);
  Tensor back = relu_backward(input, Tensor::full(input.shape(), 1.0));
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out[i] >= 0.0);
    if (out[i] == 0.0) CHECK(back[i] == 0.0);
  }
}

TEST_CASE("dense: identity weights pass the input through, zero input gives the bias") {
  Tensor eye({3, 3});
  for (std::size_t i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
  Tensor input({3}, {4, -2, 9});
  CHECK(dense_forward(input, eye, Tensor({3})) == input);

  Tensor bias({3}, {0.5, 1.5, -2.0});
  CHECK(dense_forward(Tensor({3}), eye, bias) == bias);
}

TEST_CASE("dense matches the double-loop oracle and finite differences") {
  Rng rng(37);
  Tensor input = random_tensor(rng, {5});
  Tensor weights = random_tensor(rng, {5, 3});
  Tensor bias = random_tensor(rng, {3});
  Tensor got = dense_forward(input, weights, bias);
  Tensor want = oracle::dense(input, weights, bias);
  for (std::size_t i = 0; i < got.size(); ++i) REQUIRE(std::fabs(got[i] - want[i]) <= 1e-12);

  Tensor upstream = random_tensor(rng, {3});
  DenseGrads g = dense_backward(input, weights, upstream);
  auto weighted = [&](const Tensor& o) {
    double s = 0.0;
    for (std::size_t i = 0; i < o.size(); ++i) s += o[i] * upstream[i];
    return s;
  };
  auto f_in = [&](const std::vector<double>& v) {
    return weighted(dense_forward(Tensor({5}, v), weights, bias));
  };
  auto f_w = [&](const std::vector<double>& v) {
    return weighted(dense_forward(input, Tensor({5, 3}, v), bias));
  };
  const std::vector<double> in_v(input.data(), input.data() + 5);
  for (std::size_t i = 0; i < 5; ++i) {
    REQUIRE(oracle::rel_err(g.input[i], oracle::central_diff(f_in, in_v, i, 1e-5)) < 1e-6);
  }
  const std::vector<double> w_v(weights.data(), weights.data() + 15);
  for (std::size_t i = 0; i < 15; ++i) {
    REQUIRE(oracle::rel_err(g.weights[i], oracle::central_diff(f_w, w_v, i, 1e-5)) < 1e-6);
  }

  CHECK_THROWS_AS(dense_forward(input, Tensor({4, 3}), bias), ShapeError);
}

TEST_CASE("concat joins parts in order and slices back bit-exactly") {
  CHECK(concat({Tensor({2}, {1, 2}), Tensor({1}, {3})}) == Tensor({3}, {1, 2, 3}));
  Tensor single({4}, {9, 8, 7, 6});
  CHECK(concat({single}) == single);
  CHECK_THROWS_AS(concat({Tensor({2, 2})}), ShapeError);

  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Tensor> parts;
    std::vector<std::size_t> sizes;
    for (std::size_t p = 0; p < 1 + rng.below(5); ++p) {
      parts.push_back(random_tensor(rng, {1 + rng.below(6)}));
      sizes.push_back(parts.back().size());
    }
    Tensor joined = concat(parts);
    std::vector<Tensor> back = concat_backward(joined, sizes);
    REQUIRE(back.size() == parts.size());
    for (std::size_t p = 0; p < parts.size(); ++p) REQUIRE(back[p] == parts[p]);
  }
}

TEST_CASE("grad_check is exact for a linear dense map") {
  Rng rng(43);
  Tensor weights = random_tensor(rng, {4, 3});
  Tensor bias = random_tensor(rng, {3});
  Tensor input = random_tensor(rng, {4});
  Tensor upstream = random_tensor(rng, {3});
  DenseGrads g = dense_backward(input, weights, upstream);
  auto f = [&](const std::vector<double>& v) {
    Tensor o = dense_forward(Tensor({4}, v), weights, bias);
    double s = 0.0;
    for (std::size_t i = 0; i < o.size(); ++i) s += o[i] * upstream[i];
    return s;
  };
  const double err = grad_check(f, {input.data(), input.data() + 4},
                                {g.input.data(), g.input.data() + 4}, 1e-5);
  CHECK(err < 1e-8);
}

TEST_CASE("grad_check on conv2d at a random smooth point stays below 1e-6") {
  Rng rng(47);
  Tensor input = random_tensor(rng, {3, 5, 2});
  Tensor kernel = random_tensor(rng, {1, 3, 2, 2});
  Tensor bias = random_tensor(rng, {2});
  Tensor out = conv2d_forward(input, kernel, bias, Padding::same);
  Tensor upstream = random_tensor(rng, out.shape());
  ConvGrads g = conv2d_backward(input, kernel, upstream, Padding::same);

  auto f = [&](const std::vector<double>& v) {
    Tensor k2(kernel.shape(), v);
    Tensor o = conv2d_forward(input, k2, bias, Padding::same);
    double s = 0.0;
    for (std::size_t i = 0; i < o.size(); ++i) s += o[i] * upstream[i];
    return s;
  };
  const double err =
      grad_check(f, {kernel.data(), kernel.data() + kernel.size()},
                 {g.weights.data(), g.weights.data() + g.weights.size()}, 1e-5);
  CHECK(err < 1e-6);
}

}  // TEST_SUITE
