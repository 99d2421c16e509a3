#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "gsmooth/tensor.hpp"

namespace gsmooth::testing {

/// |a - b| relative to the larger magnitude. Differences below `abs_floor`
/// count as exact, so values near zero are held to an absolute tolerance.
inline double rel_error(double a, double b, double abs_floor = 1e-9) {
  const double diff = std::abs(a - b);
  if (diff < abs_floor) return 0.0;
  return diff / std::max(std::abs(a), std::abs(b));
}

/// Compares backward() on `leaves` against central differences of `loss_fn`.
/// Returns the worst relative error.
inline double max_fd_error(std::vector<Tensor>& leaves, const std::function<Tensor()>& loss_fn,
                           double h = 1e-5) {
  for (auto& t : leaves) t.zero_grad();
  backward(loss_fn());
  std::vector<std::vector<double>> analytic;
  for (auto& t : leaves) analytic.emplace_back(t.grad().begin(), t.grad().end());

  double worst = 0.0;
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    auto values = leaves[l].mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = loss_fn().item();
      values[i] = saved - h;
      const double down = loss_fn().item();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      worst = std::max(worst, rel_error(analytic[l][i], numeric));
    }
  }
  return worst;
}

}  // namespace gsmooth::testing
