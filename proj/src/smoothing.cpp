#include "gsmooth/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "gsmooth/rng.hpp"

namespace gsmooth {

namespace {

constexpr double kInvSqrtPi = std::numbers::inv_sqrtpi;

double relu_base(double x) { return x > 0.0 ? x : 0.0; }

double norm_sq(std::span<const double> v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return s;
}

void require_ordered(const char* who, double sigma, double tau) {
  if (sigma < 0.0 || tau < sigma) {
    std::ostringstream msg;
    msg << who << ": requires tau >= sigma >= 0 (sigma=" << sigma << ", tau=" << tau << ")";
    throw std::invalid_argument(msg.str());
  }
}

// Running mean/variance (Welford).
struct Accumulator {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void push(double v) {
    ++n;
    const double delta = v - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (v - mean);
  }
  MCEstimate finish(std::uint64_t seed) const {
    const double var = n > 1 ? m2 / static_cast<double>(n - 1) : 0.0;
    return {mean, std::sqrt(var / static_cast<double>(n)), n, seed};
  }
};

[[noreturn]] void non_finite_sample(const char* who, std::span<const double> point, double value) {
  std::ostringstream msg;
  msg << who << ": f evaluated to " << value << " at a sampled point";
  throw MonteCarloError(msg.str(), std::vector<double>(point.begin(), point.end()));
}

}  // namespace

// ---- closed forms --------------------------------------------------------

double smooth_relu(double x, double sigma) noexcept {
  if (sigma == 0.0) return relu_base(x);
  const double z = x / sigma;
  return 0.5 * x * std::erfc(-z) + 0.5 * sigma * kInvSqrtPi * std::exp(-z * z);
}

double smooth_relu_derivative(double x, double sigma) noexcept {
  if (sigma == 0.0) return x > 0.0 ? 1.0 : 0.0;
  return 0.5 * std::erfc(-x / sigma);
}

double smooth_relu_sq(double x, double sigma) noexcept {
  if (sigma == 0.0) return x > 0.0 ? x * x : 0.0;
  const double z = x / sigma;
  return 0.25 * std::erfc(-z) * (sigma * sigma + 2.0 * x * x) +
         0.5 * sigma * x * kInvSqrtPi * std::exp(-z * z);
}

double smooth_relu_sq_derivative(double x, double sigma) noexcept {
  return 2.0 * smooth_relu(x, sigma);
}

SmoothReluTerms smooth_relu_terms(double x, double sigma) noexcept {
  if (sigma == 0.0) {
    return {relu_base(x), x > 0.0 ? 1.0 : 0.0, x > 0.0 ? x * x : 0.0};
  }
  const double z = x / sigma;
  const double e = std::erfc(-z);
  const double g = std::exp(-z * z);
  return {0.5 * x * e + 0.5 * sigma * kInvSqrtPi * g, 0.5 * e,
          0.25 * e * (sigma * sigma + 2.0 * x * x) + 0.5 * sigma * x * kInvSqrtPi * g};
}

double smooth_sq_norm(std::span<const double> x, double sigma) noexcept {
  return norm_sq(x) + 0.5 * sigma * sigma * static_cast<double>(x.size());
}

SmoothableScalar relu_smoothable() noexcept {
  return {&relu_base, &smooth_relu, &smooth_relu_sq, &smooth_relu_derivative};
}

// ---- test functions --------------------------------------------------------

AnalyticTestFunction quadratic_test_function(std::size_t dimension, double curvature) {
  AnalyticTestFunction tf;
  tf.name = "quadratic";
  tf.dimension = dimension;
  tf.smoothness = curvature;
  const double c = curvature;
  const double d = static_cast<double>(dimension);
  tf.value = [c](std::span<const double> x) { return 0.5 * c * norm_sq(x); };
  tf.gradient = [c](std::span<const double> x) {
    std::vector<double> g(x.begin(), x.end());
    for (auto& v : g) v *= c;
    return g;
  };
  tf.smoothed_value = [c, d](std::span<const double> x, double s) {
    return 0.5 * c * norm_sq(x) + 0.25 * c * s * s * d;
  };
  tf.smoothed_gradient = [c](std::span<const double> x, double) {
    std::vector<double> g(x.begin(), x.end());
    for (auto& v : g) v *= c;
    return g;
  };
  return tf;
}

AnalyticTestFunction quartic_test_function(double radius) {
  constexpr double pi = std::numbers::pi;
  AnalyticTestFunction tf;
  tf.name = "quartic";
  tf.dimension = 1;
  tf.smoothness = 12.0 * radius * radius + 4.0 + 4.0 * pi * pi;
  tf.value = [](std::span<const double> v) {
    const double x = v[0];
    return x * x * x * x - 2.0 * x * x + std::cos(2.0 * pi * x);
  };
  tf.gradient = [](std::span<const double> v) {
    const double x = v[0];
    return std::vector<double>{4.0 * x * x * x - 4.0 * x - 2.0 * pi * std::sin(2.0 * pi * x)};
  };
  tf.smoothed_value = [](std::span<const double> v, double s) {
    const double x = v[0];
    const double s2 = s * s;
    return x * x * x * x + (3.0 * s2 - 2.0) * x * x + 0.75 * s2 * s2 - s2 +
           std::cos(2.0 * pi * x) * std::exp(-pi * pi * s2);
  };
  tf.smoothed_gradient = [](std::span<const double> v, double s) {
    const double x = v[0];
    const double s2 = s * s;
    return std::vector<double>{4.0 * x * x * x + 2.0 * (3.0 * s2 - 2.0) * x -
                               2.0 * pi * std::sin(2.0 * pi * x) * std::exp(-pi * pi * s2)};
  };
  return tf;
}

// ---- Monte Carlo -------------------------------------------------------------

void gaussian_perturbation(std::uint64_t seed, std::uint64_t sample, std::span<double> u) noexcept {
  const double scale = std::sqrt(GaussianKernelConvention::kUnitVariance);
  const std::uint64_t base = sample * u.size();
  for (std::size_t j = 0; j < u.size(); ++j) u[j] = scale * keyed_normal(seed, base + j);
}

GaussianDraws::GaussianDraws(std::uint64_t seed, std::size_t samples, std::size_t dimension)
    : seed_(seed), samples_(samples), dimension_(dimension), values_(samples * dimension) {
  for (std::size_t i = 0; i < samples; ++i) {
    gaussian_perturbation(seed, i, std::span<double>(values_).subspan(i * dimension, dimension));
  }
}

MCEstimate mc_smooth_value(const ScalarField& f, std::span<const double> x, double sigma,
                           std::size_t samples, std::uint64_t seed) {
  if (samples < 2) throw std::invalid_argument("mc_smooth_value: needs at least 2 samples");
  if (sigma < 0.0) throw std::invalid_argument("mc_smooth_value: sigma must be non-negative");
  if (sigma == 0.0) {
    const double v = f(x);
    if (!std::isfinite(v)) non_finite_sample("mc_smooth_value", x, v);
    return {v, 0.0, samples, seed};
  }
  const std::size_t d = x.size();
  std::vector<double> u(d), point(d);
  Accumulator acc;
  for (std::size_t i = 0; i < samples; ++i) {
    gaussian_perturbation(seed, i, u);
    for (std::size_t j = 0; j < d; ++j) point[j] = x[j] + sigma * u[j];
    const double v = f(point);
    if (!std::isfinite(v)) non_finite_sample("mc_smooth_value", point, v);
    acc.push(v);
  }
  return acc.finish(seed);
}

MCEstimate mc_smooth_value(const ScalarField& f, std::span<const double> x, double sigma,
                           const GaussianDraws& draws) {
  if (draws.samples() < 2) throw std::invalid_argument("mc_smooth_value: needs at least 2 samples");
  if (sigma < 0.0) throw std::invalid_argument("mc_smooth_value: sigma must be non-negative");
  if (draws.dimension() != x.size()) {
    throw std::invalid_argument("mc_smooth_value: draws have dimension " + std::to_string(draws.dimension()) +
                                ", point has " + std::to_string(x.size()));
  }
  if (sigma == 0.0) {
    const double v = f(x);
    if (!std::isfinite(v)) non_finite_sample("mc_smooth_value", x, v);
    return {v, 0.0, draws.samples(), draws.seed()};
  }
  const std::size_t d = x.size();
  std::vector<double> point(d);
  Accumulator acc;
  for (std::size_t i = 0; i < draws.samples(); ++i) {
    const auto u = draws.sample(i);
    for (std::size_t j = 0; j < d; ++j) point[j] = x[j] + sigma * u[j];
    const double v = f(point);
    if (!std::isfinite(v)) non_finite_sample("mc_smooth_value", point, v);
    acc.push(v);
  }
  return acc.finish(draws.seed());
}

std::vector<MCEstimate> mc_smooth_grad(const ScalarField& f, std::span<const double> x,
                                       double sigma, std::size_t samples, std::uint64_t seed,
                                       GradientForm form) {
  if (!(sigma > 0.0)) throw std::invalid_argument("mc_smooth_grad: sigma must be positive");
  if (samples < 2) throw std::invalid_argument("mc_smooth_grad: needs at least 2 samples");
  const std::size_t d = x.size();
  double baseline = 0.0;
  if (form == GradientForm::difference) {
    baseline = f(x);
    if (!std::isfinite(baseline)) non_finite_sample("mc_smooth_grad", x, baseline);
  }
  std::vector<double> u(d), point(d);
  std::vector<Accumulator> acc(d);
  const double factor = 2.0 / sigma;
  for (std::size_t i = 0; i < samples; ++i) {
    gaussian_perturbation(seed, i, u);
    for (std::size_t j = 0; j < d; ++j) point[j] = x[j] + sigma * u[j];
    const double v = f(point);
    if (!std::isfinite(v)) non_finite_sample("mc_smooth_grad", point, v);
    const double w = factor * (v - baseline);
    for (std::size_t j = 0; j < d; ++j) acc[j].push(w * u[j]);
  }
  std::vector<MCEstimate> out;
  out.reserve(d);
  for (const auto& a : acc) out.push_back(a.finish(seed));
  return out;
}

// ---- lemma checks ------------------------------------------------------------

double BoundReport::max_observed() const noexcept {
  double m = 0.0;
  for (const auto& p : points) m = std::max(m, p.observed);
  return m;
}

double BoundReport::min_margin() const noexcept {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& p : points) m = std::min(m, p.margin());
  return m;
}

std::size_t BoundReport::violations() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(points.begin(), points.end(), [](const PointMargin& p) { return p.violated(); }));
}

BoundReport check_value_bound(const AnalyticTestFunction& tf, double sigma, double tau,
                              std::span<const std::vector<double>> points) {
  require_ordered("check_value_bound", sigma, tau);
  const double d = static_cast<double>(tf.dimension);
  const double bound = tf.smoothness * d / 4.0 * std::abs(tau * tau - sigma * sigma);
  BoundReport report;
  for (const auto& x : points) {
    const double observed = std::abs(tf.smoothed_value(x, tau) - tf.smoothed_value(x, sigma));
    report.points.push_back({x[0], observed, bound});
  }
  return report;
}

GradBoundReport check_grad_bounds(const AnalyticTestFunction& tf, double sigma, double tau,
                                  std::span<const std::vector<double>> points) {
  require_ordered("check_grad_bounds", sigma, tau);
  const double d = static_cast<double>(tf.dimension);
  const double L = tf.smoothness;
  const double diff_bound = L * std::pow((3.0 + d) / 2.0, 1.5) * std::sqrt(std::abs(tau * tau - sigma * sigma));

  GradBoundReport report;
  for (const auto& x : points) {
    const double base = norm_sq(tf.gradient(x));
    for (double s : {sigma, tau}) {
      const double observed = norm_sq(tf.smoothed_gradient(x, s));
      const double bound = 2.0 * base + 0.25 * L * L * s * s * std::pow(6.0 + d, 3.0);
      report.second_moment.points.push_back({x[0], observed, bound});
    }
    const auto g_tau = tf.smoothed_gradient(x, tau);
    const auto g_sigma = tf.smoothed_gradient(x, sigma);
    double diff = 0.0;
    for (std::size_t j = 0; j < g_tau.size(); ++j) diff += (g_tau[j] - g_sigma[j]) * (g_tau[j] - g_sigma[j]);
    report.difference.points.push_back({x[0], std::sqrt(diff), diff_bound});
  }
  return report;
}

BoundReport check_composition(const AnalyticTestFunction& tf, double sigma, double tau,
                              std::span<const std::vector<double>> points, std::size_t samples,
                              std::uint64_t seed) {
  require_ordered("check_composition", sigma, tau);
  if (sigma == tau) return check_composition(tf, sigma, tau, points, GaussianDraws(seed, 0, tf.dimension));
  return check_composition(tf, sigma, tau, points, GaussianDraws(seed, samples, tf.dimension));
}

BoundReport check_composition(const AnalyticTestFunction& tf, double sigma, double tau,
                              std::span<const std::vector<double>> points, const GaussianDraws& draws) {
  require_ordered("check_composition", sigma, tau);
  const double eta = std::sqrt(tau * tau - sigma * sigma);
  const auto inner = [&tf, sigma](std::span<const double> y) { return tf.smoothed_value(y, sigma); };
  BoundReport report;
  for (const auto& x : points) {
    const double exact = tf.smoothed_value(x, tau);
    if (eta == 0.0) {
      // (f_sigma)_0 = f_sigma exactly
      report.points.push_back({x[0], std::abs(tf.smoothed_value(x, sigma) - exact), 0.0});
      continue;
    }
    const auto est = mc_smooth_value(inner, x, eta, draws);
    report.points.push_back({x[0], std::abs(est.value - exact), 3.0 * est.std_error});
  }
  return report;
}

std::vector<std::vector<double>> linspace_points(double lo, double hi, std::size_t count,
                                                 std::size_t dimension) {
  std::vector<std::vector<double>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = count > 1 ? static_cast<double>(i) / static_cast<double>(count - 1) : 0.0;
    out.emplace_back(dimension, lo + t * (hi - lo));
  }
  return out;
}

}  // namespace gsmooth
