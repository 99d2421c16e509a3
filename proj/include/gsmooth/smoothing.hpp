#pragma once

// Gaussian smoothing of scalar functions.
//
// Kernel convention, used everywhere in this library:
//
//   f_sigma(x) = pi^{-d/2} \int f(x + sigma u) exp(-|u|^2) du
//              = E[f(x + sigma u)],  u ~ Normal(0, I/2)
//
// so each coordinate of the perturbation sigma*u has variance sigma^2/2. The
// closed forms below (erf(x/sigma), exp(-pi^2 sigma^2), sigma^2 d/2) all
// follow from this convention.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gsmooth {

struct GaussianKernelConvention {
  /// Per-coordinate variance of u in x + sigma*u.
  static constexpr double kUnitVariance = 0.5;

  std::size_t dimension = 1;
  double sigma = 0.0;

  /// Variance of one coordinate of the actual perturbation sigma*u.
  double perturbation_variance() const noexcept { return sigma * sigma * kUnitVariance; }
};

// ---- closed forms --------------------------------------------------------

/// relu smoothed: x/2 (1 + erf(x/sigma)) + sigma/(2 sqrt(pi)) exp(-x^2/sigma^2).
/// sigma == 0 returns max(x, 0).
double smooth_relu(double x, double sigma) noexcept;
/// d/dx smooth_relu = (1 + erf(x/sigma))/2; the relu step (0 at x = 0) when sigma == 0.
double smooth_relu_derivative(double x, double sigma) noexcept;

/// (relu^2) smoothed: (1 + erf(x/sigma))(sigma^2 + 2x^2)/4 + sigma x/(2 sqrt(pi)) exp(-x^2/sigma^2).
double smooth_relu_sq(double x, double sigma) noexcept;
/// d/dx smooth_relu_sq = 2 smooth_relu(x, sigma).
double smooth_relu_sq_derivative(double x, double sigma) noexcept;

/// smooth_relu, its derivative and smooth_relu_sq from one erfc and one exp.
/// Each field equals the corresponding scalar function exactly.
struct SmoothReluTerms {
  double value = 0.0;
  double derivative = 0.0;
  double square = 0.0;
};
SmoothReluTerms smooth_relu_terms(double x, double sigma) noexcept;

/// |x|^2 smoothed: |x|^2 + sigma^2 d / 2.
double smooth_sq_norm(std::span<const double> x, double sigma) noexcept;

/// A scalar nonlinearity together with its smoothed forms.
struct SmoothableScalar {
  double (*base)(double) = nullptr;
  double (*smoothed)(double x, double sigma) = nullptr;
  double (*smoothed_sq)(double x, double sigma) = nullptr;
  double (*smoothed_derivative)(double x, double sigma) = nullptr;
};

SmoothableScalar relu_smoothable() noexcept;

// ---- analytic test functions ----------------------------------------------

using ScalarField = std::function<double(std::span<const double>)>;
using VectorField = std::function<std::vector<double>(std::span<const double>)>;
using SmoothedField = std::function<double(std::span<const double>, double)>;
using SmoothedVectorField = std::function<std::vector<double>(std::span<const double>, double)>;

/// A function with closed-form smoothing and a smoothness constant L.
struct AnalyticTestFunction {
  std::string name;
  std::size_t dimension = 1;
  double smoothness = 0.0;  // L
  ScalarField value;
  VectorField gradient;
  SmoothedField smoothed_value;              // f_sigma(x)
  SmoothedVectorField smoothed_gradient;     // grad f_sigma(x)
};

/// f(x) = (c/2)|x|^2 in `dimension` coordinates; L = c.
AnalyticTestFunction quadratic_test_function(std::size_t dimension, double curvature = 1.0);

/// f(x) = x^4 - 2x^2 + cos(2 pi x), with
/// f_sigma(x) = x^4 + (3 sigma^2 - 2) x^2 + 0.75 sigma^4 - sigma^2 + cos(2 pi x) exp(-pi^2 sigma^2).
/// The quartic is only locally L-smooth; L is the bound 12 R^2 + 4 + 4 pi^2 on
/// |f''| over [-R, R].
AnalyticTestFunction quartic_test_function(double radius = 3.0);

// ---- Monte Carlo oracle ----------------------------------------------------

struct MCEstimate {
  double value = 0.0;
  double std_error = 0.0;  // sample standard deviation / sqrt(samples)
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

class MonteCarloError : public std::runtime_error {
 public:
  MonteCarloError(const std::string& what, std::vector<double> point)
      : std::runtime_error(what), point_(std::move(point)) {}
  const std::vector<double>& point() const noexcept { return point_; }

 private:
  std::vector<double> point_;
};

/// Perturbation u for sample `sample` (d coordinates, each Normal(0, 1/2)).
/// A pure function of (seed, sample), shared by every estimator below.
void gaussian_perturbation(std::uint64_t seed, std::uint64_t sample, std::span<double> u) noexcept;

/// The first `samples` perturbations of a seed, drawn once. Estimators given a
/// bank reproduce the seed-based results exactly.
class GaussianDraws {
 public:
  GaussianDraws(std::uint64_t seed, std::size_t samples, std::size_t dimension);
  std::span<const double> sample(std::size_t i) const noexcept {
    return std::span<const double>(values_).subspan(i * dimension_, dimension_);
  }
  std::size_t samples() const noexcept { return samples_; }
  std::size_t dimension() const noexcept { return dimension_; }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
  std::size_t samples_;
  std::size_t dimension_;
  std::vector<double> values_;
};

/// Sample mean of f(x + sigma u). sigma == 0 returns f(x) with zero error.
MCEstimate mc_smooth_value(const ScalarField& f, std::span<const double> x, double sigma,
                           std::size_t samples, std::uint64_t seed);
MCEstimate mc_smooth_value(const ScalarField& f, std::span<const double> x, double sigma,
                           const GaussianDraws& draws);

enum class GradientForm {
  moment,      // (2/sigma) u f(x + sigma u)
  difference,  // (2/sigma) u (f(x + sigma u) - f(x))
};

/// Per-coordinate estimate of grad f_sigma(x). Requires sigma > 0.
std::vector<MCEstimate> mc_smooth_grad(const ScalarField& f, std::span<const double> x,
                                       double sigma, std::size_t samples, std::uint64_t seed,
                                       GradientForm form = GradientForm::difference);

// ---- lemma verifiers -------------------------------------------------------

/// Added to every analytic bound before declaring a violation.
inline constexpr double kBoundTolerance = 1e-9;

struct PointMargin {
  double x = 0.0;          // first coordinate of the evaluation point
  double observed = 0.0;
  double bound = 0.0;
  double margin() const noexcept { return bound - observed; }
  bool violated() const noexcept { return observed > bound + kBoundTolerance; }
};

struct BoundReport {
  std::vector<PointMargin> points;
  double max_observed() const noexcept;
  double min_margin() const noexcept;
  std::size_t violations() const noexcept;
};

/// |f_tau(x) - f_sigma(x)| against L d/4 |tau^2 - sigma^2|. Throws std::invalid_argument if tau < sigma.
BoundReport check_value_bound(const AnalyticTestFunction& tf, double sigma, double tau,
                              std::span<const std::vector<double>> points);

struct GradBoundReport {
  BoundReport second_moment;  // |grad f_s|^2 <= 2|grad f|^2 + L^2 s^2 (6+d)^3 / 4, at s = sigma and s = tau
  BoundReport difference;     // |grad f_tau - grad f_sigma| <= L ((3+d)/2)^{3/2} sqrt|tau^2 - sigma^2|
};

GradBoundReport check_grad_bounds(const AnalyticTestFunction& tf, double sigma, double tau,
                                  std::span<const std::vector<double>> points);

/// Monte-Carlo smoothing of f_sigma by eta = sqrt(tau^2 - sigma^2), compared with the
/// closed-form f_tau. `observed` is |MC - f_tau|, `bound` is 3 standard errors.
BoundReport check_composition(const AnalyticTestFunction& tf, double sigma, double tau,
                              std::span<const std::vector<double>> points, std::size_t samples,
                              std::uint64_t seed);
BoundReport check_composition(const AnalyticTestFunction& tf, double sigma, double tau,
                              std::span<const std::vector<double>> points, const GaussianDraws& draws);

/// Evenly spaced one-dimensional points in [lo, hi].
std::vector<std::vector<double>> linspace_points(double lo, double hi, std::size_t count,
                                                 std::size_t dimension = 1);

}  // namespace gsmooth
