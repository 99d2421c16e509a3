#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>

#include "gsmooth/bench.hpp"
#include "gsmooth/csv.hpp"
#include "gsmooth/smoothing.hpp"

namespace gsmooth {

namespace {

AnalyticTestFunction test_function(const std::string& name, std::size_t quadratic_dimension) {
  if (name == "quartic") return quartic_test_function();
  if (name == "quadratic") return quadratic_test_function(quadratic_dimension);
  throw ConfigError("unknown test function '" + name + "' (expected quartic or quadratic)");
}

void emit(std::ostringstream& out, LemmaReport& report, const std::string& lemma, const std::string& fn,
          double sigma, double tau, const BoundReport& br) {
  for (const auto& p : br.points) {
    ++report.checks;
    if (p.violated()) ++report.violations;
    out << lemma << ',' << fn << ',' << csv::num(sigma) << ',' << csv::num(tau) << ',' << csv::num(p.x) << ','
        << csv::num(p.observed) << ',' << csv::num(p.bound) << ',' << csv::num(p.margin()) << ','
        << (p.violated() ? 1 : 0) << '\n';
  }
}

}  // namespace

std::string smooth_demo(const DemoOptions& o) {
  const auto tf = test_function(o.function, 1);
  for (double s : o.sigmas) {
    if (!(s >= 0.0)) throw ConfigError("smooth-demo: sigma must be >= 0");
  }
  if (o.points == 0) throw ConfigError("smooth-demo: needs at least one point");
  std::ostringstream out;
  out << "function,sigma,x,f,f_sigma,f_sigma_mc,mc_std_error\n";
  const auto xs = linspace_points(o.x_min, o.x_max, o.points, tf.dimension);
  for (double s : o.sigmas) {
    for (const auto& x : xs) {
      const MCEstimate mc = mc_smooth_value(tf.value, x, s, o.samples, o.seed);
      out << tf.name << ',' << csv::num(s) << ',' << csv::num(x[0]) << ',' << csv::num(tf.value(x)) << ','
          << csv::num(tf.smoothed_value(x, s)) << ',' << csv::num(mc.value) << ',' << csv::num(mc.std_error)
          << '\n';
    }
  }
  return out.str();
}

LemmaReport lemma_check(const LemmaOptions& o) {
  for (double s : o.sigmas) {
    if (!(s >= 0.0)) throw ConfigError("lemma-check: sigma values must be >= 0");
  }
  for (const auto& l : o.lemmas) {
    if (l != "1d" && l != "2a" && l != "2b" && l != "jensen" && l != "composition") {
      throw ConfigError("unknown lemma '" + l + "' (expected 1d, 2a, 2b, jensen or composition)");
    }
  }
  LemmaReport report;
  std::ostringstream out;
  out << "lemma,function,sigma,tau,x,observed,bound,margin,violated\n";
  auto wants = [&](const char* l) { return std::find(o.lemmas.begin(), o.lemmas.end(), l) != o.lemmas.end(); };

  for (const auto& fn : o.functions) {
    const auto tf = test_function(fn, o.quadratic_dimension);
    const auto pts = linspace_points(o.x_min, o.x_max, o.points, tf.dimension);
    std::optional<GaussianDraws> draws;
    if (wants("composition")) draws.emplace(o.seed, o.samples, tf.dimension);
    std::map<std::pair<double, double>, BoundReport> composition;
    for (double a : o.sigmas) {
      for (double b : o.sigmas) {
        // The bounds depend on |tau^2 - sigma^2| only; evaluate each pair in order.
        const double sigma = std::min(a, b);
        const double tau = std::max(a, b);
        if (wants("1d")) {
          const auto br = check_value_bound(tf, sigma, tau, pts);
          emit(out, report, "1d", fn, a, b, br);
          if (fn == "quadratic") {
            for (const auto& p : br.points) {
              report.max_abs_margin_1d_quadratic = std::max(report.max_abs_margin_1d_quadratic, std::abs(p.margin()));
            }
          }
        }
        if (wants("2a") || wants("2b")) {
          const auto gr = check_grad_bounds(tf, sigma, tau, pts);
          if (wants("2a")) emit(out, report, "2a", fn, a, b, gr.second_moment);
          if (wants("2b")) emit(out, report, "2b", fn, a, b, gr.difference);
        }
        if (wants("composition")) {
          auto it = composition.find({sigma, tau});
          if (it == composition.end()) {
            it = composition.emplace(std::pair{sigma, tau}, check_composition(tf, sigma, tau, pts, *draws)).first;
          }
          emit(out, report, "composition", fn, a, b, it->second);
        }
      }
      if (wants("jensen")) {
        // relu_s(x)^2 <= (relu^2)_s(x) at every point; for convex f also f(x) <= f_s(x).
        BoundReport relu_pairs;
        for (const auto& x : pts) {
          const double h = gsmooth::smooth_relu(x[0], a);
          relu_pairs.points.push_back({x[0], h * h, smooth_relu_sq(x[0], a)});
        }
        if (&fn == &o.functions.front()) emit(out, report, "jensen", "relu", a, a, relu_pairs);
        if (fn == "quadratic") {
          BoundReport convex;
          for (const auto& x : pts) convex.points.push_back({x[0], tf.value(x), tf.smoothed_value(x, a)});
          emit(out, report, "jensen", fn, a, a, convex);
        }
      }
    }
  }
  report.csv = out.str();
  return report;
}

}  // namespace gsmooth
