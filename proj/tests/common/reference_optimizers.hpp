#pragma once

// Plain SGD, Adam (no bias correction) and SVRG written directly against a
// gradient callback, with no sigma anywhere. Used as the unsmoothed baselines
// the smoothed optimizers are compared with.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "gsmooth/optimizers.hpp"
#include "gsmooth/rng.hpp"

namespace gsmooth::reference {

/// Mean gradient over `batch` at x; returns the mean loss.
using PlainGradient =
    std::function<double(std::span<const double> x, std::span<const std::size_t> batch, std::span<double> grad)>;

using Trajectory = std::vector<std::vector<double>>;

inline Trajectory sgd(const PlainGradient& grad_fn, std::size_t population, std::vector<double> x,
                      double lr, std::size_t batch_size, std::uint64_t seed, std::size_t steps) {
  IndexSampler sampler(population, seed);
  std::vector<std::size_t> batch(batch_size);
  std::vector<double> g(x.size());
  Trajectory out;
  for (std::size_t t = 0; t < steps; ++t) {
    sampler.fill(batch);
    grad_fn(x, batch, g);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= lr * g[i];
    out.push_back(x);
  }
  return out;
}

inline Trajectory adam(const PlainGradient& grad_fn, std::size_t population, std::vector<double> x,
                       double lr, double beta, double theta, double eps, std::size_t batch_size,
                       std::uint64_t seed, std::size_t steps) {
  IndexSampler sampler(population, seed);
  std::vector<std::size_t> batch(batch_size);
  std::vector<double> g(x.size()), m(x.size(), 0.0), v(x.size(), 0.0);
  Trajectory out;
  for (std::size_t t = 0; t < steps; ++t) {
    sampler.fill(batch);
    grad_fn(x, batch, g);
    for (std::size_t i = 0; i < x.size(); ++i) {
      m[i] = beta * m[i] + (1.0 - beta) * g[i];
      v[i] = theta * v[i] + (1.0 - theta) * g[i] * g[i];
      x[i] -= lr * m[i] / std::sqrt(v[i] + eps);
    }
    out.push_back(x);
  }
  return out;
}

/// Full gradient in blocks of 64 indices, combined as a size-weighted mean.
inline void full_gradient(const PlainGradient& grad_fn, std::size_t population, std::span<const double> x,
                          std::span<double> out) {
  std::vector<double> part(out.size());
  std::fill(out.begin(), out.end(), 0.0);
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < population; start += 64) {
    const std::size_t end = std::min(population, start + 64);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    grad_fn(x, idx, part);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += static_cast<double>(end - start) * part[j];
  }
  for (auto& v : out) v *= 1.0 / static_cast<double>(population);
}

/// Inner iterates of `outer` SVRG epochs of length m; the next snapshot is the
/// iterate x_t with t uniform on {0, ..., m-1}.
inline Trajectory svrg(const PlainGradient& grad_fn, std::size_t population, std::vector<double> snapshot,
                       double lr, std::size_t m, std::uint64_t seed, std::size_t outer) {
  IndexSampler sampler(population, seed);
  CounterRng pick(derive_seed(seed, 0x736e6170));
  std::vector<std::size_t> batch(1);
  const std::size_t d = snapshot.size();
  std::vector<double> mu(d), g(d), g_anchor(d);
  Trajectory out;
  for (std::size_t s = 0; s < outer; ++s) {
    const std::size_t keep = pick.index(m);
    full_gradient(grad_fn, population, snapshot, mu);
    std::vector<double> x = snapshot;
    std::vector<double> next = x;
    for (std::size_t t = 1; t <= m; ++t) {
      sampler.fill(batch);
      grad_fn(x, batch, g);
      grad_fn(snapshot, batch, g_anchor);
      for (std::size_t j = 0; j < d; ++j) x[j] -= lr * (g[j] - g_anchor[j] + mu[j]);
      out.push_back(x);
      if (t == keep) next = x;
    }
    snapshot = next;
  }
  return out;
}

}  // namespace gsmooth::reference
