#pragma once

// Stochastic optimizers and their Gaussian-smoothed counterparts.
//
// Each smoothed optimizer takes per-sample gradients of the smoothed loss
// f_{k,sigma} from a GradientSource and a SigmaSchedule. The unsmoothed
// baselines are the same update rules run with a zero schedule against a
// source that evaluates the plain loss; with a shared sampling seed the two
// produce bit-identical iterates when sigma is identically zero.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gsmooth/rng.hpp"
#include "gsmooth/smoothing.hpp"

namespace gsmooth {

// ---- sigma schedules ---------------------------------------------------------

class SigmaSchedule {
 public:
  enum class Kind { constant, geometric, explicit_list };

  static SigmaSchedule constant(double sigma);
  /// sigma_1 = initial, sigma_t = ratio * sigma_{t-1}; ratio in (0, 1).
  static SigmaSchedule geometric(double initial, double ratio);
  /// sigma_t = values[t-1]. Past the end: last value if repeat_last, else an error.
  static SigmaSchedule explicit_list(std::vector<double> values, bool repeat_last = false);

  /// sigma_t for t >= 1.
  double at(std::size_t t) const;

  Kind kind() const noexcept { return kind_; }
  bool identically_zero() const noexcept;

 private:
  SigmaSchedule() = default;
  Kind kind_ = Kind::constant;
  double initial_ = 0.0;
  double ratio_ = 1.0;
  std::vector<double> values_;
  bool repeat_last_ = false;
};

/// Steps t in [1, horizon) where sqrt|sigma_t^2 - sigma_{t+1}^2| > lr(t), the
/// schedule condition the smoothed Adam analysis assumes. Advisory only.
std::vector<std::size_t> adam_schedule_warnings(const SigmaSchedule& schedule,
                                                const std::function<double(std::size_t)>& lr,
                                                std::size_t horizon);

// ---- gradient sources --------------------------------------------------------

class OptimizerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-sample smoothed losses f_{k,sigma} over a fixed training set of size K.
class GradientSource {
 public:
  virtual ~GradientSource() = default;
  virtual std::size_t num_samples() const = 0;
  virtual std::size_t dim() const = 0;
  /// Writes the mean over `batch` of grad f_{k,sigma}(x) into `grad` and
  /// returns the mean of f_{k,sigma}(x).
  virtual double gradient(std::span<const double> x, std::span<const std::size_t> batch,
                          double sigma, std::span<double> grad) = 0;
};

/// One component with closed-form smoothed value and gradient.
struct SmoothedComponent {
  SmoothedField value;             // f_{k,sigma}(x)
  SmoothedVectorField gradient;    // grad f_{k,sigma}(x)
};

/// Analytic mode: gradients come straight from closed forms.
class AnalyticSource : public GradientSource {
 public:
  AnalyticSource(std::vector<SmoothedComponent> components, std::size_t dim);
  std::size_t num_samples() const override { return components_.size(); }
  std::size_t dim() const override { return dim_; }
  double gradient(std::span<const double> x, std::span<const std::size_t> batch, double sigma,
                  std::span<double> grad) override;

 private:
  std::vector<SmoothedComponent> components_;
  std::size_t dim_;
};

/// f_k(x) = 0.5 |x - c_k|^2 (smoothed gradient x - c_k for every sigma).
AnalyticSource shifted_quadratic_source(std::vector<std::vector<double>> centers);

/// Monte-Carlo mode: gradients estimated with the difference-form estimator.
/// At sigma = 0 the exact component gradients are used.
class MonteCarloSource : public GradientSource {
 public:
  struct Component {
    ScalarField value;
    VectorField gradient;  // exact gradient, used when sigma == 0
  };
  MonteCarloSource(std::vector<Component> components, std::size_t dim, std::size_t samples,
                   std::uint64_t seed);
  std::size_t num_samples() const override { return components_.size(); }
  std::size_t dim() const override { return dim_; }
  double gradient(std::span<const double> x, std::span<const std::size_t> batch, double sigma,
                  std::span<double> grad) override;

 private:
  std::vector<Component> components_;
  std::size_t dim_;
  std::size_t samples_;
  std::uint64_t seed_;
  std::uint64_t calls_ = 0;
};

// ---- samplers ----------------------------------------------------------------

/// Uniform index draws with replacement from a seeded counter stream.
class IndexSampler {
 public:
  IndexSampler(std::size_t population, std::uint64_t seed) : population_(population), rng_(seed) {}
  std::size_t next() { return rng_.index(population_); }
  void fill(std::span<std::size_t> out) {
    for (auto& i : out) i = next();
  }

 private:
  std::size_t population_;
  CounterRng rng_;
};

// ---- optimizers ----------------------------------------------------------------

struct StepRecord {
  std::size_t step = 0;      // 1-based
  double sigma = 0.0;
  double loss = 0.0;         // mean smoothed per-sample loss at x_{t-1}
  double update_norm = 0.0;  // |x_t - x_{t-1}|
};

/// x_t = x_{t-1} - lr * grad f_{k_t, sigma_t}(x_{t-1})
class GSmoothSgd {
 public:
  GSmoothSgd(GradientSource& source, SigmaSchedule schedule, double lr, std::size_t batch_size,
             std::uint64_t seed);
  StepRecord step(std::span<double> x);
  std::size_t steps_taken() const noexcept { return t_; }

 private:
  GradientSource* source_;
  SigmaSchedule schedule_;
  double lr_;
  IndexSampler sampler_;
  std::vector<std::size_t> batch_;
  std::vector<double> grad_;
  std::size_t t_ = 0;
};

struct AdamState {
  std::vector<double> m;  // first moment
  std::vector<double> v;  // second moment
  std::size_t t = 0;
};

struct AdamConfig {
  std::function<double(std::size_t)> lr = [](std::size_t) { return 0.001; };     // eta_t
  std::function<double(std::size_t)> beta = [](std::size_t) { return 0.9; };     // beta_t
  std::function<double(std::size_t)> theta = [](std::size_t) { return 0.999; }; // theta_t
  double epsilon = 1e-8;
  std::size_t batch_size = 1;

  static AdamConfig constant(double lr, double beta = 0.9, double theta = 0.999,
                             double epsilon = 1e-8, std::size_t batch_size = 1);
};

/// m <- beta_t m + (1 - beta_t) g;  v <- theta_t v + (1 - theta_t) g^2;
/// x <- x - eta_t m / sqrt(v + eps). No bias correction.
class GSmoothAdam {
 public:
  GSmoothAdam(GradientSource& source, SigmaSchedule schedule, AdamConfig config, std::uint64_t seed);
  StepRecord step(std::span<double> x);
  const AdamState& state() const noexcept { return state_; }

  /// The moment and parameter update for a given gradient; exposed for tests.
  static void apply(std::span<double> x, std::span<const double> grad, AdamState& state,
                    double lr, double beta, double theta, double epsilon);

 private:
  GradientSource* source_;
  SigmaSchedule schedule_;
  AdamConfig config_;
  IndexSampler sampler_;
  AdamState state_;
  std::vector<std::size_t> batch_;
  std::vector<double> grad_;
};

enum class ControlVariateSigma {
  snapshot_sigma,  // tau = sigma_s
  zero,            // tau = 0
};

enum class SnapshotRule {
  uniform,  // x~_s = x_t, t ~ Unif{0, ..., m-1}
  last,     // x~_s = x_m
};

struct SvrgConfig {
  double lr = 0.01;
  std::size_t inner_steps = 50;  // m
  std::size_t batch_size = 1;
  ControlVariateSigma tau = ControlVariateSigma::snapshot_sigma;
  SnapshotRule snapshot = SnapshotRule::uniform;
};

struct SvrgInnerRecord {
  StepRecord step;
  double direction_norm = 0.0;  // |v_t|
};

struct SvrgOuterResult {
  std::size_t outer = 0;  // s, 1-based
  double sigma = 0.0;
  double tau = 0.0;
  std::vector<SvrgInnerRecord> inner;
  std::size_t snapshot_index = 0;  // t chosen for the new snapshot
};

/// One outer iteration: control variate mu = mean_i grad f_{i,tau}(x~), m inner steps
/// v_t = grad f_{i_t,sigma_s}(x_{t-1}) - grad f_{i_t,tau}(x~) + mu, then snapshot selection.
class GSmoothSvrg {
 public:
  GSmoothSvrg(GradientSource& source, SigmaSchedule schedule, SvrgConfig config, std::uint64_t seed);

  /// Runs outer iteration s on `snapshot` (x~_{s-1}), replacing it with x~_s.
  /// `on_inner_step`, if set, sees each inner iterate x_t after its update.
  SvrgOuterResult outer(std::span<double> snapshot,
                        const std::function<void(const SvrgInnerRecord&, std::span<const double>)>&
                            on_inner_step = {});

  /// Inner direction for the given index set at x, given snapshot and control variate.
  void direction(std::span<const double> x, std::span<const double> snapshot,
                 std::span<const double> control, std::span<const std::size_t> batch, double sigma,
                 double tau, std::span<double> out, double* loss = nullptr);

  /// mu_tau(x~) averaged over all K components.
  void control_variate(std::span<const double> snapshot, double tau, std::span<double> out);

  std::size_t outer_iterations() const noexcept { return s_; }
  std::size_t steps_taken() const noexcept { return steps_; }

 private:
  GradientSource* source_;
  SigmaSchedule schedule_;
  SvrgConfig config_;
  IndexSampler sampler_;
  CounterRng snapshot_rng_;
  std::vector<std::size_t> batch_;
  std::vector<double> scratch_;
  std::size_t s_ = 0;
  std::size_t steps_ = 0;
};

/// Baselines: the same update rules with sigma fixed at zero.
GSmoothSgd make_sgd(GradientSource& source, double lr, std::size_t batch_size, std::uint64_t seed);
GSmoothAdam make_adam(GradientSource& source, AdamConfig config, std::uint64_t seed);
GSmoothSvrg make_svrg(GradientSource& source, SvrgConfig config, std::uint64_t seed);

}  // namespace gsmooth
