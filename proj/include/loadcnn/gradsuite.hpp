#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace loadcnn {

struct GradCheckReport {
  std::string layer;
  double max_rel_error = 0.0;
  bool passed = false;
};

struct GradSuiteOptions {
  int trials_per_layer = 100;
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  /// Test hook: negates the conv weight gradients so the suite must flag conv.
  bool flip_conv_weight_sign = false;
};

/// Finite-difference checks for every layer primitive plus the end-to-end
/// model loss. Deterministic per seed; each entry reports the worst relative
/// error seen across its trials.
std::vector<GradCheckReport> run_gradient_suite(std::uint64_t seed,
                                                const GradSuiteOptions& options = {});

}  // namespace loadcnn
