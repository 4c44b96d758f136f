#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace loadcnn {

/// |a - b| / max(|a|, |b|, 1e-8).
double relative_error(double a, double b);

/// Central finite differences of a scalar function against an analytic
/// gradient. Checks every coordinate unless `coords` selects a subset; returns
/// the maximum relative error. The function must be smooth at x (callers keep
/// away from ReLU and pool-tie kinks).
double grad_check(const std::function<double(const std::vector<double>&)>& f,
                  const std::vector<double>& x, const std::vector<double>& analytic,
                  double epsilon, const std::vector<std::size_t>* coords = nullptr);

}  // namespace loadcnn
