#include <cmath>
#include <algorithm>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "../common/reference_optimizers.hpp"
#include "gsmooth/optimizers.hpp"

using namespace gsmooth;

namespace {

// f_k(x) = quartic(x - c_k) per coordinate, with closed-form smoothing.
AnalyticSource shifted_quartic_source(const std::vector<double>& centers, std::size_t dim) {
  const auto tf = std::make_shared<AnalyticTestFunction>(quartic_test_function());
  std::vector<SmoothedComponent> comps;
  for (double c : centers) {
    comps.push_back(SmoothedComponent{
        [tf, c](std::span<const double> x, double s) {
          double v = 0.0;
          for (double xi : x) {
            const double y[] = {xi - c};
            v += tf->smoothed_value(y, s);
          }
          return v;
        },
        [tf, c](std::span<const double> x, double s) {
          std::vector<double> g(x.size());
          for (std::size_t j = 0; j < x.size(); ++j) {
            const double y[] = {x[j] - c};
            g[j] = tf->smoothed_gradient(y, s)[0];
          }
          return g;
        }});
  }
  return AnalyticSource(std::move(comps), dim);
}

reference::PlainGradient plain(GradientSource& source) {
  return [&source](std::span<const double> x, std::span<const std::size_t> batch, std::span<double> g) {
    return source.gradient(x, batch, 0.0, g);
  };
}

const std::vector<double> kCenters{-0.8, -0.3, 0.1, 0.45, 0.9, 1.2};

}  // namespace

// ---- schedules -------------------------------------------------------------------

TEST(SigmaSchedule, Examples) {
  const auto c = SigmaSchedule::constant(0.5);
  for (std::size_t t : {1u, 2u, 100u}) EXPECT_EQ(c.at(t), 0.5);
  EXPECT_DOUBLE_EQ(SigmaSchedule::geometric(1.0, 0.5).at(3), 0.25);
  EXPECT_EQ(SigmaSchedule::explicit_list({1, 0.1, 0.01}).at(2), 0.1);
}

TEST(SigmaSchedule, ExplicitListEnds) {
  const auto strict = SigmaSchedule::explicit_list({1, 0.1, 0.01});
  EXPECT_THROW((void)strict.at(4), std::out_of_range);
  const auto repeating = SigmaSchedule::explicit_list({1, 0.1, 0.01}, true);
  EXPECT_EQ(repeating.at(50), 0.01);
  EXPECT_THROW((void)strict.at(0), std::invalid_argument);
}

TEST(SigmaSchedule, RejectsBadParameters) {
  EXPECT_THROW((void)SigmaSchedule::constant(-1), std::invalid_argument);
  EXPECT_THROW((void)SigmaSchedule::geometric(1.0, 1.0), std::invalid_argument);
  EXPECT_THROW((void)SigmaSchedule::explicit_list({}), std::invalid_argument);
  EXPECT_TRUE(SigmaSchedule::explicit_list({0, 0}).identically_zero());
  EXPECT_FALSE(SigmaSchedule::geometric(1.0, 0.5).identically_zero());
}

TEST(SigmaSchedule, AdamWarningsAreAdvisory) {
  const auto lr = [](std::size_t) { return 0.01; };
  EXPECT_TRUE(adam_schedule_warnings(SigmaSchedule::constant(0.3), lr, 100).empty());
  const auto w = adam_schedule_warnings(SigmaSchedule::geometric(1.0, 0.5), lr, 20);
  ASSERT_FALSE(w.empty());
  EXPECT_EQ(w.front(), 1u);
}

// ---- SGD -------------------------------------------------------------------------

TEST(GSmoothSgd, QuadraticStepIgnoresSigma) {
  for (double sigma : {0.0, 0.5, 2.0}) {
    auto source = shifted_quadratic_source({{0.0}, {0.0}, {0.0}});
    GSmoothSgd opt(source, SigmaSchedule::constant(sigma), 0.1, 1, 4);
    std::vector<double> x{1.0};
    const auto rec = opt.step(x);
    EXPECT_DOUBLE_EQ(x[0], 0.9);
    EXPECT_EQ(rec.step, 1u);
    EXPECT_EQ(rec.sigma, sigma);
    EXPECT_DOUBLE_EQ(rec.update_norm, 0.1);
  }
}

TEST(GSmoothSgd, ZeroScheduleMatchesPlainSgd) {
  auto source = shifted_quartic_source(kCenters, 3);
  GSmoothSgd opt(source, SigmaSchedule::explicit_list(std::vector<double>(200, 0.0)), 0.01, 2, 77);
  std::vector<double> x{0.3, -0.2, 1.1};
  const auto ref = reference::sgd(plain(source), kCenters.size(), x, 0.01, 2, 77, 200);
  for (std::size_t t = 0; t < 200; ++t) {
    opt.step(x);
    ASSERT_EQ(x, ref[t]) << "step " << t + 1;
  }
}

TEST(GSmoothSgd, NonFiniteGradientNamesTheStep) {
  std::vector<SmoothedComponent> comps{SmoothedComponent{
      [](std::span<const double> x, double) { return 0.5 * x[0] * x[0]; },
      [](std::span<const double> x, double) {
        return std::vector<double>{x[0] == 0.0 ? std::nan("") : x[0]};
      }}};
  AnalyticSource source(std::move(comps), 1);
  GSmoothSgd opt(source, SigmaSchedule::constant(0.0), 1.0, 1, 1);
  std::vector<double> x{1.0};
  opt.step(x);
  try {
    opt.step(x);
    FAIL() << "NaN gradient accepted";
  } catch (const OptimizerError& e) {
    EXPECT_NE(std::string(e.what()).find("step 2"), std::string::npos) << e.what();
  }
}

TEST(GSmoothSgd, RejectsBadArguments) {
  auto source = shifted_quadratic_source({{0.0}});
  EXPECT_THROW(GSmoothSgd(source, SigmaSchedule::constant(0), 0.0, 1, 1), std::invalid_argument);
  EXPECT_THROW(GSmoothSgd(source, SigmaSchedule::constant(0), 0.1, 0, 1), std::invalid_argument);
  GSmoothSgd opt(source, SigmaSchedule::constant(0), 0.1, 1, 1);
  std::vector<double> wrong(2, 0.0);
  EXPECT_THROW(opt.step(wrong), std::invalid_argument);
}

// ---- Adam ------------------------------------------------------------------------

TEST(GSmoothAdam, ZeroMomentsGiveSignSteps) {
  std::vector<double> x{0.0, 0.0, 0.0};
  const std::vector<double> g{2.5, -0.1, 7.0};
  AdamState state{std::vector<double>(3, 0.0), std::vector<double>(3, 0.0), 0};
  GSmoothAdam::apply(x, g, state, 0.3, 0.0, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(x[0], -0.3);
  EXPECT_DOUBLE_EQ(x[1], 0.3);
  EXPECT_DOUBLE_EQ(x[2], -0.3);
}

TEST(GSmoothAdam, FirstMomentIsGeometricSeries) {
  std::vector<double> x{0.0};
  const std::vector<double> g{2.0};
  AdamState state{{0.0}, {0.0}, 0};
  for (int t = 1; t <= 30; ++t) {
    GSmoothAdam::apply(x, g, state, 0.01, 0.9, 0.999, 1e-8);
    EXPECT_NEAR(state.m[0], (1.0 - std::pow(0.9, t)) * 2.0, 1e-12) << "t=" << t;
  }
}

TEST(GSmoothAdam, ZeroDenominatorIsAnError) {
  std::vector<double> x{1.0, 1.0};
  const std::vector<double> g{1.0, 0.0};
  AdamState state{{0.0, 0.0}, {0.0, 0.0}, 0};
  EXPECT_THROW(GSmoothAdam::apply(x, g, state, 0.1, 0.9, 0.999, 0.0), OptimizerError);
}

TEST(GSmoothAdam, MomentsStayWithinGradientBound) {
  std::mt19937_64 gen(3);
  const double G = 1.7;
  std::uniform_real_distribution<double> dist(-G, G);
  std::vector<double> x(4, 0.0), g(4);
  AdamState state{std::vector<double>(4, 0.0), std::vector<double>(4, 0.0), 0};
  for (int t = 0; t < 500; ++t) {
    for (auto& v : g) v = dist(gen);
    GSmoothAdam::apply(x, g, state, 0.01, 0.9, 0.999, 1e-8);
    for (std::size_t i = 0; i < 4; ++i) {
      ASSERT_LE(std::abs(state.m[i]), G);
      ASSERT_LE(state.v[i], G * G);
    }
  }
}

TEST(GSmoothAdam, ZeroScheduleMatchesPlainAdam) {
  auto source = shifted_quartic_source(kCenters, 3);
  GSmoothAdam opt(source, SigmaSchedule::constant(0.0), AdamConfig::constant(0.01, 0.9, 0.999, 1e-8, 2), 5);
  std::vector<double> x{0.3, -0.2, 1.1};
  const auto ref = reference::adam(plain(source), kCenters.size(), x, 0.01, 0.9, 0.999, 1e-8, 2, 5, 200);
  for (std::size_t t = 0; t < 200; ++t) {
    opt.step(x);
    ASSERT_EQ(x, ref[t]) << "step " << t + 1;
  }
}

// ---- SVRG ------------------------------------------------------------------------

TEST(GSmoothSvrg, DirectionAtSnapshotIsControlVariate) {
  auto source = shifted_quartic_source(kCenters, 2);
  GSmoothSvrg opt(source, SigmaSchedule::constant(0.4), SvrgConfig{}, 1);
  const std::vector<double> snap{0.2, -0.7};
  std::vector<double> mu(2), v(2);
  opt.control_variate(snap, 0.4, mu);
  for (std::size_t k = 0; k < kCenters.size(); ++k) {
    const std::size_t batch[] = {k};
    opt.direction(snap, snap, mu, batch, 0.4, 0.4, v);
    EXPECT_EQ(v, mu);
  }
}

TEST(GSmoothSvrg, DirectionIsUnbiasedOverAllIndices) {
  auto source = shifted_quartic_source(kCenters, 2);
  GSmoothSvrg opt(source, SigmaSchedule::constant(0.3), SvrgConfig{}, 1);
  const std::vector<double> snap{0.2, -0.7};
  const std::vector<double> x{-0.4, 0.5};
  std::vector<double> mu(2), v(2), mean(2, 0.0), full(2);
  opt.control_variate(snap, 0.3, mu);
  for (std::size_t k = 0; k < kCenters.size(); ++k) {
    const std::size_t batch[] = {k};
    opt.direction(x, snap, mu, batch, 0.3, 0.3, v);
    for (std::size_t j = 0; j < 2; ++j) mean[j] += v[j] / static_cast<double>(kCenters.size());
  }
  std::vector<std::size_t> all(kCenters.size());
  std::iota(all.begin(), all.end(), 0);
  source.gradient(x, all, 0.3, full);
  for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(mean[j], full[j], 1e-12);
}

TEST(GradientSource, PerSampleMeanEqualsFullGradient) {
  auto source = shifted_quartic_source(kCenters, 2);
  const std::vector<double> x{0.6, -1.2};
  std::vector<double> g(2), mean(2, 0.0), full(2);
  for (std::size_t k = 0; k < kCenters.size(); ++k) {
    const std::size_t batch[] = {k};
    source.gradient(x, batch, 0.5, g);
    for (std::size_t j = 0; j < 2; ++j) mean[j] += g[j] / static_cast<double>(kCenters.size());
  }
  std::vector<std::size_t> all(kCenters.size());
  std::iota(all.begin(), all.end(), 0);
  source.gradient(x, all, 0.5, full);
  for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(mean[j], full[j], 1e-13);
}

TEST(GSmoothSvrg, SingleComponentReducesToSgd) {
  const std::vector<double> one{0.35};
  auto svrg_source = shifted_quartic_source(one, 2);
  auto sgd_source = shifted_quartic_source(one, 2);
  SvrgConfig cfg;
  cfg.lr = 0.01;
  cfg.inner_steps = 25;
  cfg.snapshot = SnapshotRule::last;
  GSmoothSvrg svrg(svrg_source, SigmaSchedule::constant(0.2), cfg, 9);
  GSmoothSgd sgd(sgd_source, SigmaSchedule::constant(0.2), 0.01, 1, 9);
  std::vector<double> snap{1.0, -0.5};
  std::vector<double> x = snap;
  for (int s = 0; s < 4; ++s) {
    svrg.outer(snap);
    for (std::size_t t = 0; t < cfg.inner_steps; ++t) sgd.step(x);
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(snap[j], x[j], 1e-12);
  }
}

TEST(GSmoothSvrg, ZeroScheduleMatchesPlainSvrg) {
  auto source = shifted_quartic_source(kCenters, 3);
  SvrgConfig cfg;
  cfg.lr = 0.01;
  cfg.inner_steps = 20;
  GSmoothSvrg opt = make_svrg(source, cfg, 31);
  std::vector<double> snap{0.3, -0.2, 1.1};
  const auto ref = reference::svrg(plain(source), kCenters.size(), snap, 0.01, 20, 31, 10);
  std::size_t i = 0;
  for (int s = 0; s < 10; ++s) {
    opt.outer(snap, [&](const SvrgInnerRecord&, std::span<const double> x) {
      ASSERT_TRUE(std::equal(x.begin(), x.end(), ref[i].begin())) << "inner step " << i + 1;
      ++i;
    });
  }
  EXPECT_EQ(i, ref.size());
}

TEST(GSmoothSvrg, SnapshotIndexIsWithinTheEpoch) {
  auto source = shifted_quadratic_source({{1.0}, {-1.0}});
  SvrgConfig cfg;
  cfg.inner_steps = 7;
  GSmoothSvrg opt(source, SigmaSchedule::constant(0.1), cfg, 2);
  std::vector<double> snap{3.0};
  std::vector<int> seen(7, 0);
  for (int s = 0; s < 200; ++s) {
    const auto r = opt.outer(snap);
    ASSERT_LT(r.snapshot_index, 7u);
    ASSERT_EQ(r.inner.size(), 7u);
    EXPECT_EQ(r.tau, r.sigma);
    ++seen[r.snapshot_index];
  }
  for (int c : seen) EXPECT_GT(c, 0);
}

TEST(GSmoothSvrg, ContractsOnStronglyConvexQuadratic) {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<std::vector<double>> centers(20, std::vector<double>(4));
  for (auto& c : centers) {
    for (auto& v : c) v = noise(gen);
  }
  std::vector<double> opt_point(4, 0.0);
  for (const auto& c : centers) {
    for (std::size_t j = 0; j < 4; ++j) opt_point[j] += c[j] / 20.0;
  }
  auto source = shifted_quadratic_source(centers);
  SvrgConfig cfg;
  cfg.lr = 0.1;
  cfg.inner_steps = 50;
  GSmoothSvrg opt(source, SigmaSchedule::constant(0.1), cfg, 8);
  std::vector<double> snap(4, 5.0);
  auto gap = [&] {
    double d = 0.0;
    for (std::size_t j = 0; j < 4; ++j) d += (snap[j] - opt_point[j]) * (snap[j] - opt_point[j]);
    return 0.5 * d;
  };
  const double start = gap();
  for (int s = 0; s < 6; ++s) opt.outer(snap);
  EXPECT_LT(gap(), 1e-6 * start);
}

TEST(MonteCarloSource, ZeroSigmaUsesExactGradient) {
  const auto tf = quartic_test_function();
  MonteCarloSource source({{tf.value, tf.gradient}}, 1, 1000, 3);
  const std::vector<double> x{0.7};
  std::vector<double> g(1);
  const std::size_t batch[] = {0};
  const double loss = source.gradient(x, batch, 0.0, g);
  EXPECT_EQ(g[0], tf.gradient(x)[0]);
  EXPECT_EQ(loss, tf.value(x));
}

TEST(MonteCarloSource, SmoothedGradientIsCloseToClosedForm) {
  const auto tf = quartic_test_function();
  MonteCarloSource source({{tf.value, tf.gradient}}, 1, 400000, 3);
  const std::vector<double> x{0.7};
  std::vector<double> g(1);
  const std::size_t batch[] = {0};
  source.gradient(x, batch, 0.5, g);
  EXPECT_NEAR(g[0], tf.smoothed_gradient(x, 0.5)[0], 0.1);
}
