#include "loadcnn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "loadcnn/errors.hpp"

namespace loadcnn {

double relative_error(double a, double b) {
  const double denom = std::max({std::fabs(a), std::fabs(b), 1e-8});
  return std::fabs(a - b) / denom;
}

double grad_check(const std::function<double(const std::vector<double>&)>& f,
                  const std::vector<double>& x, const std::vector<double>& analytic,
                  double epsilon, const std::vector<std::size_t>* coords) {
  if (epsilon <= 0.0) throw ValueError("grad_check epsilon must be positive");
  if (analytic.size() != x.size()) {
    throw ShapeError("analytic gradient has " + std::to_string(analytic.size()) +
                     " entries for " + std::to_string(x.size()) + " coordinates");
  }
  std::vector<double> point = x;
  double worst = 0.0;
  auto check_coord = [&](std::size_t i) {
    const double saved = point[i];
    point[i] = saved + epsilon;
    const double hi = f(point);
    point[i] = saved - epsilon;
    const double lo = f(point);
    point[i] = saved;
    const double fd = (hi - lo) / (2.0 * epsilon);
    worst = std::max(worst, relative_error(analytic[i], fd));
  };
  if (coords) {
    for (std::size_t i : *coords) check_coord(i);
  } else {
    for (std::size_t i = 0; i < x.size(); ++i) check_coord(i);
  }
  return worst;
}

}  // namespace loadcnn
