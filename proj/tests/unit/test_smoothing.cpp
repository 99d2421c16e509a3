#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "gsmooth/smoothing.hpp"

using namespace gsmooth;

namespace {

constexpr std::size_t kOracleSamples = 1000000;

double sq_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

void expect_within_3se(const MCEstimate& est, double exact, const char* what) {
  EXPECT_LE(std::abs(est.value - exact), 3.0 * est.std_error)
      << what << ": mc " << est.value << " exact " << exact << " se " << est.std_error;
}

}  // namespace

// ---- closed forms ------------------------------------------------------------

TEST(SmoothRelu, Examples) {
  EXPECT_NEAR(smooth_relu(0.0, 1.0), 1.0 / (2.0 * std::sqrt(std::numbers::pi)), 1e-15);
  EXPECT_NEAR(smooth_relu(0.0, 1.0), 0.2820947918, 1e-10);
  EXPECT_EQ(smooth_relu(-3.0, 0.0), 0.0);
  EXPECT_NEAR(smooth_relu(10.0, 0.1), 10.0, 1e-12);
}

TEST(SmoothRelu, ConvergesToReluAsSigmaShrinks) {
  for (double x : {-2.0, -0.3, 0.4, 1.5}) {
    EXPECT_NEAR(smooth_relu(x, 1e-8), std::max(x, 0.0), 1e-8);
    EXPECT_NEAR(smooth_relu_sq(x, 1e-8), std::pow(std::max(x, 0.0), 2), 1e-8);
  }
}

TEST(SmoothRelu, DerivativesMatchFiniteDifferences) {
  const double h = 1e-6;
  for (double sigma : {0.1, 0.5, 1.0}) {
    for (double x = -2.0; x <= 2.0; x += 0.25) {
      const double fd = (smooth_relu(x + h, sigma) - smooth_relu(x - h, sigma)) / (2 * h);
      EXPECT_NEAR(smooth_relu_derivative(x, sigma), fd, 1e-8);
      const double fd_sq = (smooth_relu_sq(x + h, sigma) - smooth_relu_sq(x - h, sigma)) / (2 * h);
      EXPECT_NEAR(smooth_relu_sq_derivative(x, sigma), fd_sq, 1e-8);
    }
  }
}

TEST(SmoothRelu, FusedTermsEqualScalarForms) {
  for (double sigma : {0.0, 0.1, 1.0, 3.0}) {
    for (double x = -12.0; x <= 12.0; x += 0.37) {
      const auto t = smooth_relu_terms(x, sigma);
      EXPECT_EQ(t.value, smooth_relu(x, sigma)) << x << " " << sigma;
      EXPECT_EQ(t.derivative, smooth_relu_derivative(x, sigma)) << x << " " << sigma;
      EXPECT_EQ(t.square, smooth_relu_sq(x, sigma)) << x << " " << sigma;
    }
  }
}

TEST(SmoothReluSq, Examples) {
  for (double s : {0.1, 0.5, 2.0}) EXPECT_NEAR(smooth_relu_sq(0.0, s), s * s / 4.0, 1e-15);
  EXPECT_EQ(smooth_relu_sq(3.0, 0.0), 9.0);
  EXPECT_EQ(smooth_relu_sq(-1.0, 0.0), 0.0);
}

TEST(SmoothReluSq, MatchesMonteCarloAtOneHalf) {
  const double x[] = {1.0};
  const auto f = [](std::span<const double> y) { return std::pow(std::max(y[0], 0.0), 2); };
  expect_within_3se(mc_smooth_value(f, x, 0.5, kOracleSamples, 3), smooth_relu_sq(1.0, 0.5), "(relu^2)_0.5(1)");
}

TEST(SmoothSqNorm, Examples) {
  const double zero3[] = {0, 0, 0};
  EXPECT_DOUBLE_EQ(smooth_sq_norm(zero3, 1.0), 1.5);
  const double x[] = {1.5, -2.0};
  EXPECT_EQ(smooth_sq_norm(x, 0.0), sq_norm(x));
  const double ones[] = {1, 1};
  EXPECT_DOUBLE_EQ(smooth_sq_norm(ones, 2.0), 6.0);
}

TEST(Smoothing, JensenOnGrid) {
  for (double sigma : {0.01, 0.1, 1.0}) {
    for (int i = 0; i <= 200; ++i) {
      const double x = -5.0 + 0.05 * i;
      const double h = smooth_relu(x, sigma);
      EXPECT_GE(smooth_relu_sq(x, sigma), h * h) << "x=" << x << " sigma=" << sigma;
    }
  }
}

TEST(Smoothing, ConvexFunctionLiesBelowItsSmoothing) {
  const auto tf = quadratic_test_function(2);
  for (const auto& x : linspace_points(-3, 3, 25, 2)) {
    for (double sigma : {0.1, 0.5, 1.0}) EXPECT_GE(tf.smoothed_value(x, sigma), tf.value(x));
  }
}

TEST(Smoothing, QuadraticKeepsItsHessian) {
  const auto tf = quadratic_test_function(1, 3.0);
  const double h = 1e-3;
  for (double sigma : {0.0, 0.5, 1.0}) {
    for (double x0 : {-1.0, 0.0, 2.0}) {
      const std::vector<double> a{x0 - h}, b{x0}, c{x0 + h};
      const double second =
          (tf.smoothed_value(a, sigma) - 2 * tf.smoothed_value(b, sigma) + tf.smoothed_value(c, sigma)) / (h * h);
      EXPECT_NEAR(second, 3.0, 1e-6);
    }
  }
}

TEST(Smoothing, QuarticClosedFormAtZero) {
  const auto tf = quartic_test_function();
  const std::vector<double> x{0.0};
  EXPECT_NEAR(tf.smoothed_value(x, 1.0), 0.75 - 1.0 + std::exp(-std::numbers::pi * std::numbers::pi), 1e-15);
  EXPECT_NEAR(tf.smoothed_value(x, 1.0), -0.2499483, 1e-7);
  EXPECT_DOUBLE_EQ(tf.smoothness, 12 * 9 + 4 + 4 * std::numbers::pi * std::numbers::pi);
}

// ---- Monte Carlo ------------------------------------------------------------------

TEST(MonteCarlo, SquaredNormAtOrigin) {
  const double x[] = {0, 0, 0};
  expect_within_3se(mc_smooth_value(sq_norm, x, 1.0, kOracleSamples, 5), 1.5, "|x|^2 at 0");
}

TEST(MonteCarlo, QuarticAtZero) {
  const auto tf = quartic_test_function();
  const double x[] = {0.0};
  expect_within_3se(mc_smooth_value(tf.value, x, 1.0, kOracleSamples, 6), tf.smoothed_value(x, 1.0), "quartic");
}

TEST(MonteCarlo, ZeroSigmaIsExact) {
  const double x[] = {1.0, 2.0};
  const auto est = mc_smooth_value(sq_norm, x, 0.0, 100, 1);
  EXPECT_EQ(est.value, 5.0);
  EXPECT_EQ(est.std_error, 0.0);
}

TEST(MonteCarlo, SameSeedIsBitIdentical) {
  const double x[] = {0.3, -0.2};
  const auto a = mc_smooth_value(sq_norm, x, 0.7, 5000, 42);
  const auto b = mc_smooth_value(sq_norm, x, 0.7, 5000, 42);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.std_error, b.std_error);
  const auto c = mc_smooth_value(sq_norm, x, 0.7, 5000, 43);
  EXPECT_NE(a.value, c.value);
}

TEST(MonteCarlo, DrawBankReproducesSeededEstimates) {
  const auto tf = quartic_test_function();
  const GaussianDraws draws(19, 20000, 1);
  for (double x0 : {-1.0, 0.4}) {
    const double x[] = {x0};
    const auto direct = mc_smooth_value(tf.value, x, 0.6, 20000, 19);
    const auto banked = mc_smooth_value(tf.value, x, 0.6, draws);
    EXPECT_EQ(direct.value, banked.value);
    EXPECT_EQ(direct.std_error, banked.std_error);
  }
}

TEST(MonteCarlo, PerturbationsHaveHalfVariance) {
  double sum = 0.0, sum_sq = 0.0;
  const std::size_t n = 200000;
  double u[1];
  for (std::size_t i = 0; i < n; ++i) {
    gaussian_perturbation(8, i, u);
    sum += u[0];
    sum_sq += u[0] * u[0];
  }
  EXPECT_NEAR(sum / n, 0.0, 4.0 * std::sqrt(0.5 / n));
  EXPECT_NEAR(sum_sq / n, GaussianKernelConvention::kUnitVariance, 0.01);
}

TEST(MonteCarlo, NonFiniteSampleReportsThePoint) {
  const double x[] = {0.0};
  const auto f = [](std::span<const double> y) { return y[0] > 0.5 ? std::numeric_limits<double>::infinity() : 0.0; };
  try {
    (void)mc_smooth_value(f, x, 1.0, 1000, 1);
    FAIL() << "non-finite sample accepted";
  } catch (const MonteCarloError& e) {
    ASSERT_EQ(e.point().size(), 1u);
    EXPECT_GT(e.point()[0], 0.5);
  }
}

TEST(MonteCarlo, GradientOfQuadratic) {
  const double x[] = {1.0, 0.0};
  const auto g = mc_smooth_grad(sq_norm, x, 0.5, kOracleSamples, 7);
  ASSERT_EQ(g.size(), 2u);
  expect_within_3se(g[0], 2.0, "d/dx0");
  expect_within_3se(g[1], 0.0, "d/dx1");
}

TEST(MonteCarlo, GradientOfConstant) {
  const double x[] = {0.5, -1.0};
  const auto f = [](std::span<const double>) { return 4.0; };
  for (const auto& e : mc_smooth_grad(f, x, 0.5, 10000, 3, GradientForm::difference)) {
    EXPECT_EQ(e.value, 0.0);
    EXPECT_EQ(e.std_error, 0.0);
  }
  for (const auto& e : mc_smooth_grad(f, x, 0.5, 200000, 3, GradientForm::moment)) {
    EXPECT_LE(std::abs(e.value), 3.0 * e.std_error);
  }
}

TEST(MonteCarlo, GradientOfQuartic) {
  const auto tf = quartic_test_function();
  const double x[] = {1.0};
  const auto g = mc_smooth_grad(tf.value, x, 0.5, kOracleSamples, 9);
  expect_within_3se(g[0], tf.smoothed_gradient(x, 0.5)[0], "quartic gradient");
}

TEST(MonteCarlo, GradientNeedsPositiveSigma) {
  const double x[] = {1.0};
  EXPECT_THROW((void)mc_smooth_grad(sq_norm, x, 0.0, 100, 1), std::invalid_argument);
}

// ---- bound checks -------------------------------------------------------------------

TEST(ValueBound, EqualSigmasAreZero) {
  const auto tf = quartic_test_function();
  const auto r = check_value_bound(tf, 0.5, 0.5, linspace_points(-2, 2, 11));
  for (const auto& p : r.points) {
    EXPECT_EQ(p.observed, 0.0);
    EXPECT_EQ(p.bound, 0.0);
  }
}

TEST(ValueBound, TightOnQuadratic) {
  const auto tf = quadratic_test_function(2);
  const auto r = check_value_bound(tf, 0.0, 1.0, linspace_points(-3, 3, 100, 2));
  for (const auto& p : r.points) {
    EXPECT_NEAR(p.observed, 0.5, 1e-12);
    EXPECT_DOUBLE_EQ(p.bound, 0.5);
    EXPECT_LT(std::abs(p.margin()), 1e-9);
  }
}

TEST(ValueBound, QuarticSweep) {
  const auto tf = quartic_test_function();
  const auto pts = linspace_points(-2, 2, 100);
  for (double s : {0.0, 0.1, 0.5}) {
    for (double t : {0.1, 0.5, 1.0}) {
      if (t <= s) continue;
      EXPECT_EQ(check_value_bound(tf, s, t, pts).violations(), 0u) << s << "," << t;
    }
  }
}

TEST(ValueBound, RejectsTauBelowSigma) {
  const auto tf = quartic_test_function();
  EXPECT_THROW((void)check_value_bound(tf, 1.0, 0.5, linspace_points(-1, 1, 3)), std::invalid_argument);
  EXPECT_THROW((void)check_grad_bounds(tf, 1.0, 0.5, linspace_points(-1, 1, 3)), std::invalid_argument);
}

TEST(GradBounds, ZeroSigmaHasMarginGradSquared) {
  const auto tf = quartic_test_function();
  const auto pts = linspace_points(-2, 2, 21);
  const auto r = check_grad_bounds(tf, 0.0, 0.0, pts);
  ASSERT_FALSE(r.second_moment.points.empty());
  for (const auto& p : r.second_moment.points) EXPECT_NEAR(p.margin(), p.observed, 1e-9 * (1 + p.observed));
}

TEST(GradBounds, EqualSigmasGiveZeroDifference) {
  const auto tf = quartic_test_function();
  const auto r = check_grad_bounds(tf, 0.5, 0.5, linspace_points(-2, 2, 21));
  for (const auto& p : r.difference.points) {
    EXPECT_EQ(p.observed, 0.0);
    EXPECT_EQ(p.bound, 0.0);
  }
}

TEST(GradBounds, QuarticSweep) {
  const auto tf = quartic_test_function();
  const auto r = check_grad_bounds(tf, 0.5, 0.5, linspace_points(-2, 2, 100));
  EXPECT_EQ(r.second_moment.violations(), 0u);
  EXPECT_EQ(r.difference.violations(), 0u);
  const auto r2 = check_grad_bounds(tf, 0.1, 1.0, linspace_points(-2, 2, 100));
  EXPECT_EQ(r2.second_moment.violations(), 0u);
  EXPECT_EQ(r2.difference.violations(), 0u);
}

TEST(Composition, QuarticSemigroup) {
  const auto tf = quartic_test_function();
  const auto pts = linspace_points(-1.5, 1.5, 7);
  const auto r = check_composition(tf, 0.3, 0.5, pts, kOracleSamples, 11);
  EXPECT_EQ(r.violations(), 0u);
  for (const auto& p : r.points) EXPECT_GT(p.bound, 0.0);
}
