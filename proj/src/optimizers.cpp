#include "gsmooth/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace gsmooth {

namespace {

void require_finite_gradient(std::span<const double> grad, std::size_t step, const char* who) {
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      std::ostringstream msg;
      msg << who << ": non-finite gradient at step " << step << " (coordinate " << i << ")";
      throw OptimizerError(msg.str());
    }
  }
}

void require_dim(const GradientSource& source, std::span<const double> x, const char* who) {
  if (x.size() != source.dim()) {
    std::ostringstream msg;
    msg << who << ": parameter vector has " << x.size() << " entries, source expects " << source.dim();
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

// ---- schedules -----------------------------------------------------------------

SigmaSchedule SigmaSchedule::constant(double sigma) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("SigmaSchedule::constant: sigma must be >= 0");
  SigmaSchedule s;
  s.kind_ = Kind::constant;
  s.initial_ = sigma;
  return s;
}

SigmaSchedule SigmaSchedule::geometric(double initial, double ratio) {
  if (!(initial > 0.0)) throw std::invalid_argument("SigmaSchedule::geometric: initial sigma must be > 0");
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw std::invalid_argument("SigmaSchedule::geometric: ratio must lie in (0, 1)");
  }
  SigmaSchedule s;
  s.kind_ = Kind::geometric;
  s.initial_ = initial;
  s.ratio_ = ratio;
  return s;
}

SigmaSchedule SigmaSchedule::explicit_list(std::vector<double> values, bool repeat_last) {
  if (values.empty()) throw std::invalid_argument("SigmaSchedule::explicit_list: empty schedule");
  for (double v : values) {
    if (!(v >= 0.0)) throw std::invalid_argument("SigmaSchedule::explicit_list: negative sigma");
  }
  SigmaSchedule s;
  s.kind_ = Kind::explicit_list;
  s.values_ = std::move(values);
  s.repeat_last_ = repeat_last;
  return s;
}

double SigmaSchedule::at(std::size_t t) const {
  if (t == 0) throw std::invalid_argument("SigmaSchedule::at: steps are numbered from 1");
  switch (kind_) {
    case Kind::constant:
      return initial_;
    case Kind::geometric:
      return initial_ * std::pow(ratio_, static_cast<double>(t - 1));
    case Kind::explicit_list:
      if (t <= values_.size()) return values_[t - 1];
      if (repeat_last_) return values_.back();
      throw std::out_of_range("SigmaSchedule::at: step " + std::to_string(t) +
                              " is past the explicit schedule of length " +
                              std::to_string(values_.size()));
  }
  return 0.0;
}

bool SigmaSchedule::identically_zero() const noexcept {
  switch (kind_) {
    case Kind::constant:
      return initial_ == 0.0;
    case Kind::geometric:
      return false;
    case Kind::explicit_list:
      return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
  }
  return false;
}

std::vector<std::size_t> adam_schedule_warnings(const SigmaSchedule& schedule,
                                                const std::function<double(std::size_t)>& lr,
                                                std::size_t horizon) {
  std::vector<std::size_t> out;
  for (std::size_t t = 1; t < horizon; ++t) {
    const double a = schedule.at(t);
    const double b = schedule.at(t + 1);
    if (std::sqrt(std::abs(a * a - b * b)) > lr(t)) out.push_back(t);
  }
  return out;
}

// ---- sources -------------------------------------------------------------------

AnalyticSource::AnalyticSource(std::vector<SmoothedComponent> components, std::size_t dim)
    : components_(std::move(components)), dim_(dim) {
  if (components_.empty()) throw std::invalid_argument("AnalyticSource: needs at least one component");
}

double AnalyticSource::gradient(std::span<const double> x, std::span<const std::size_t> batch,
                                double sigma, std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  double loss = 0.0;
  for (std::size_t k : batch) {
    const auto& c = components_.at(k);
    loss += c.value(x, sigma);
    const auto g = c.gradient(x, sigma);
    for (std::size_t j = 0; j < dim_; ++j) grad[j] += g[j];
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (auto& g : grad) g *= inv;
  return loss * inv;
}

AnalyticSource shifted_quadratic_source(std::vector<std::vector<double>> centers) {
  if (centers.empty()) throw std::invalid_argument("shifted_quadratic_source: no centers");
  const std::size_t d = centers.front().size();
  std::vector<SmoothedComponent> comps;
  comps.reserve(centers.size());
  for (auto& c : centers) {
    if (c.size() != d) throw std::invalid_argument("shifted_quadratic_source: ragged centers");
    auto center = std::make_shared<const std::vector<double>>(std::move(c));
    comps.push_back(SmoothedComponent{
        [center](std::span<const double> x, double s) {
          double v = 0.0;
          for (std::size_t j = 0; j < x.size(); ++j) v += (x[j] - (*center)[j]) * (x[j] - (*center)[j]);
          return 0.5 * v + 0.25 * s * s * static_cast<double>(x.size());
        },
        [center](std::span<const double> x, double) {
          std::vector<double> g(x.size());
          for (std::size_t j = 0; j < x.size(); ++j) g[j] = x[j] - (*center)[j];
          return g;
        }});
  }
  return AnalyticSource(std::move(comps), d);
}

MonteCarloSource::MonteCarloSource(std::vector<Component> components, std::size_t dim,
                                   std::size_t samples, std::uint64_t seed)
    : components_(std::move(components)), dim_(dim), samples_(samples), seed_(seed) {
  if (components_.empty()) throw std::invalid_argument("MonteCarloSource: needs at least one component");
}

double MonteCarloSource::gradient(std::span<const double> x, std::span<const std::size_t> batch,
                                  double sigma, std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  const std::uint64_t call_seed = derive_seed(seed_, calls_++);
  double loss = 0.0;
  for (std::size_t k : batch) {
    const auto& c = components_.at(k);
    if (sigma == 0.0) {
      loss += c.value(x);
      const auto g = c.gradient(x);
      for (std::size_t j = 0; j < dim_; ++j) grad[j] += g[j];
      continue;
    }
    const std::uint64_t seed = derive_seed(call_seed, k);
    loss += mc_smooth_value(c.value, x, sigma, samples_, seed).value;
    const auto est = mc_smooth_grad(c.value, x, sigma, samples_, seed, GradientForm::difference);
    for (std::size_t j = 0; j < dim_; ++j) grad[j] += est[j].value;
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (auto& g : grad) g *= inv;
  return loss * inv;
}

// ---- SGD -----------------------------------------------------------------------

GSmoothSgd::GSmoothSgd(GradientSource& source, SigmaSchedule schedule, double lr,
                       std::size_t batch_size, std::uint64_t seed)
    : source_(&source),
      schedule_(std::move(schedule)),
      lr_(lr),
      sampler_(source.num_samples(), seed),
      batch_(batch_size),
      grad_(source.dim()) {
  if (!(lr > 0.0)) throw std::invalid_argument("GSmoothSgd: learning rate must be > 0");
  if (batch_size == 0) throw std::invalid_argument("GSmoothSgd: batch size must be >= 1");
}

StepRecord GSmoothSgd::step(std::span<double> x) {
  require_dim(*source_, x, "GSmoothSgd::step");
  ++t_;
  const double sigma = schedule_.at(t_);
  sampler_.fill(batch_);
  const double loss = source_->gradient(x, batch_, sigma, grad_);
  require_finite_gradient(grad_, t_, "GSmoothSgd");
  double norm_sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double delta = lr_ * grad_[i];
    x[i] -= delta;
    norm_sq += delta * delta;
  }
  return {t_, sigma, loss, std::sqrt(norm_sq)};
}

// ---- Adam ----------------------------------------------------------------------

AdamConfig AdamConfig::constant(double lr, double beta, double theta, double epsilon,
                                std::size_t batch_size) {
  AdamConfig c;
  c.lr = [lr](std::size_t) { return lr; };
  c.beta = [beta](std::size_t) { return beta; };
  c.theta = [theta](std::size_t) { return theta; };
  c.epsilon = epsilon;
  c.batch_size = batch_size;
  return c;
}

GSmoothAdam::GSmoothAdam(GradientSource& source, SigmaSchedule schedule, AdamConfig config,
                         std::uint64_t seed)
    : source_(&source),
      schedule_(std::move(schedule)),
      config_(std::move(config)),
      sampler_(source.num_samples(), seed),
      batch_(config_.batch_size),
      grad_(source.dim()) {
  if (config_.batch_size == 0) throw std::invalid_argument("GSmoothAdam: batch size must be >= 1");
  if (config_.epsilon < 0.0) throw std::invalid_argument("GSmoothAdam: epsilon must be >= 0");
  state_.m.assign(source.dim(), 0.0);
  state_.v.assign(source.dim(), 0.0);
}

void GSmoothAdam::apply(std::span<double> x, std::span<const double> grad, AdamState& state,
                        double lr, double beta, double theta, double epsilon) {
  if (!(lr > 0.0)) throw std::invalid_argument("GSmoothAdam: step size must be > 0");
  if (beta < 0.0 || beta >= 1.0 || theta < 0.0 || theta >= 1.0) {
    throw std::invalid_argument("GSmoothAdam: beta_t and theta_t must lie in [0, 1)");
  }
  ++state.t;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double g = grad[i];
    state.m[i] = beta * state.m[i] + (1.0 - beta) * g;
    state.v[i] = theta * state.v[i] + (1.0 - theta) * g * g;
    const double denom = std::sqrt(state.v[i] + epsilon);
    if (denom == 0.0) {
      throw OptimizerError("GSmoothAdam: division by zero at step " + std::to_string(state.t) +
                           " (v and epsilon are zero at coordinate " + std::to_string(i) + ")");
    }
    x[i] -= lr * state.m[i] / denom;
  }
}

StepRecord GSmoothAdam::step(std::span<double> x) {
  require_dim(*source_, x, "GSmoothAdam::step");
  const std::size_t t = state_.t + 1;
  const double sigma = schedule_.at(t);
  sampler_.fill(batch_);
  const double loss = source_->gradient(x, batch_, sigma, grad_);
  require_finite_gradient(grad_, t, "GSmoothAdam");
  const std::vector<double> before(x.begin(), x.end());
  apply(x, grad_, state_, config_.lr(t), config_.beta(t), config_.theta(t), config_.epsilon);
  double norm_sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) norm_sq += (x[i] - before[i]) * (x[i] - before[i]);
  return {t, sigma, loss, std::sqrt(norm_sq)};
}

// ---- SVRG ----------------------------------------------------------------------

GSmoothSvrg::GSmoothSvrg(GradientSource& source, SigmaSchedule schedule, SvrgConfig config,
                         std::uint64_t seed)
    : source_(&source),
      schedule_(std::move(schedule)),
      config_(config),
      sampler_(source.num_samples(), seed),
      snapshot_rng_(derive_seed(seed, 0x736e6170)),
      batch_(config.batch_size),
      scratch_(source.dim()) {
  if (!(config.lr > 0.0)) throw std::invalid_argument("GSmoothSvrg: learning rate must be > 0");
  if (config.inner_steps == 0) throw std::invalid_argument("GSmoothSvrg: inner length m must be >= 1");
  if (config.batch_size == 0) throw std::invalid_argument("GSmoothSvrg: batch size must be >= 1");
}

void GSmoothSvrg::control_variate(std::span<const double> snapshot, double tau, std::span<double> out) {
  constexpr std::size_t kChunk = 64;
  const std::size_t K = source_->num_samples();
  std::fill(out.begin(), out.end(), 0.0);
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < K; start += kChunk) {
    const std::size_t end = std::min(K, start + kChunk);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    source_->gradient(snapshot, idx, tau, scratch_);
    const double w = static_cast<double>(end - start);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += w * scratch_[j];
  }
  const double inv = 1.0 / static_cast<double>(K);
  for (auto& v : out) v *= inv;
}

void GSmoothSvrg::direction(std::span<const double> x, std::span<const double> snapshot,
                            std::span<const double> control, std::span<const std::size_t> batch,
                            double sigma, double tau, std::span<double> out, double* loss) {
  const double l = source_->gradient(x, batch, sigma, out);
  if (loss) *loss = l;
  source_->gradient(snapshot, batch, tau, scratch_);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = out[j] - scratch_[j] + control[j];
}

SvrgOuterResult GSmoothSvrg::outer(
    std::span<double> snapshot,
    const std::function<void(const SvrgInnerRecord&, std::span<const double>)>& on_inner_step) {
  require_dim(*source_, snapshot, "GSmoothSvrg::outer");
  ++s_;
  const double sigma = schedule_.at(s_);
  const double tau = config_.tau == ControlVariateSigma::snapshot_sigma ? sigma : 0.0;
  if (tau > sigma) throw std::logic_error("GSmoothSvrg: tau must not exceed sigma_s");

  const std::size_t m = config_.inner_steps;
  SvrgOuterResult result;
  result.outer = s_;
  result.sigma = sigma;
  result.tau = tau;
  result.snapshot_index =
      config_.snapshot == SnapshotRule::uniform ? snapshot_rng_.index(m) : m;

  const std::vector<double> anchor(snapshot.begin(), snapshot.end());
  std::vector<double> control(anchor.size());
  control_variate(anchor, tau, control);
  require_finite_gradient(control, steps_ + 1, "GSmoothSvrg (control variate)");

  std::vector<double> x = anchor;
  std::vector<double> chosen;
  if (result.snapshot_index == 0) chosen = x;
  std::vector<double> v(anchor.size());
  result.inner.reserve(m);
  for (std::size_t t = 1; t <= m; ++t) {
    ++steps_;
    sampler_.fill(batch_);
    double loss = 0.0;
    direction(x, anchor, control, batch_, sigma, tau, v, &loss);
    require_finite_gradient(v, steps_, "GSmoothSvrg");
    double norm_sq = 0.0;
    double vnorm_sq = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double delta = config_.lr * v[j];
      x[j] -= delta;
      norm_sq += delta * delta;
      vnorm_sq += v[j] * v[j];
    }
    SvrgInnerRecord rec{{steps_, sigma, loss, std::sqrt(norm_sq)}, std::sqrt(vnorm_sq)};
    result.inner.push_back(rec);
    if (on_inner_step) on_inner_step(rec, x);
    if (t == result.snapshot_index) chosen = x;
  }
  if (config_.snapshot == SnapshotRule::last) chosen = x;
  std::copy(chosen.begin(), chosen.end(), snapshot.begin());
  return result;
}

GSmoothSgd make_sgd(GradientSource& source, double lr, std::size_t batch_size, std::uint64_t seed) {
  return GSmoothSgd(source, SigmaSchedule::constant(0.0), lr, batch_size, seed);
}

GSmoothAdam make_adam(GradientSource& source, AdamConfig config, std::uint64_t seed) {
  return GSmoothAdam(source, SigmaSchedule::constant(0.0), std::move(config), seed);
}

GSmoothSvrg make_svrg(GradientSource& source, SvrgConfig config, std::uint64_t seed) {
  return GSmoothSvrg(source, SigmaSchedule::constant(0.0), config, seed);
}

}  // namespace gsmooth
