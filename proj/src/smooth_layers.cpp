#include "gsmooth/smooth_layers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gsmooth/rng.hpp"
#include "gsmooth/smoothing.hpp"

namespace gsmooth {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

[[noreturn]] void chain_error(std::size_t index, const LayerSpec& spec, const Shape& in,
                              const std::string& why) {
  std::ostringstream msg;
  msg << "layer " << index << " (" << layer_name(spec) << ") cannot take input " << to_string(in)
      << ": " << why;
  throw ShapeError(msg.str());
}

Shape output_shape_of(std::size_t index, const LayerSpec& spec, const Shape& in) {
  return std::visit(
      Overloaded{
          [&](const DenseLayer& l) -> Shape {
            if (l.d_in == 0 || l.d_out == 0) chain_error(index, spec, in, "zero-sized dense layer");
            if (in.size() != 1 || in[0] != l.d_in) {
              chain_error(index, spec, in, "expects a vector of length " + std::to_string(l.d_in));
            }
            return {l.d_out};
          },
          [&](const ConvLayer& l) -> Shape {
            if (l.kernels == 0 || l.k == 0 || l.stride == 0) {
              chain_error(index, spec, in, "kernel count, size and stride must be positive");
            }
            if (in.size() != 3) chain_error(index, spec, in, "expects {channels, height, width}");
            if (in[1] < l.k || in[2] < l.k) chain_error(index, spec, in, "kernel larger than the input");
            return {l.kernels, (in[1] - l.k) / l.stride + 1, (in[2] - l.k) / l.stride + 1};
          },
          [&](const ActivationLayer&) -> Shape { return in; },
          [&](const AvgPoolLayer& l) -> Shape {
            if (l.window == 0 || l.stride == 0) chain_error(index, spec, in, "window and stride must be positive");
            if (in.size() != 3) chain_error(index, spec, in, "expects {channels, height, width}");
            if (in[1] < l.window || in[2] < l.window) chain_error(index, spec, in, "window larger than the input");
            return {in[0], (in[1] - l.window) / l.stride + 1, (in[2] - l.window) / l.stride + 1};
          },
          [&](const DropoutLayer& l) -> Shape {
            if (!(l.p >= 0.0 && l.p <= 1.0)) chain_error(index, spec, in, "dropout p must lie in [0, 1]");
            return in;
          },
          [&](const FlattenLayer&) -> Shape { return {numel(in)}; },
      },
      spec.kind);
}

Shape batched(std::size_t n, const Shape& sample) {
  Shape s{n};
  s.insert(s.end(), sample.begin(), sample.end());
  return s;
}

}  // namespace

// ---- tensor-level ops ------------------------------------------------------

Tensor smooth_relu(const Tensor& x, double sigma) {
  if (sigma == 0.0) return relu(x);
  return map_elementwise(x, "smooth_relu", [sigma](double v) {
    const auto t = smooth_relu_terms(v, sigma);
    return std::pair{t.value, t.derivative};
  });
}

Tensor smooth_relu_sq(const Tensor& x, double sigma) {
  return map_elementwise(x, "smooth_relu_sq", [sigma](double v) {
    const auto t = smooth_relu_terms(v, sigma);
    return std::pair{t.square, 2.0 * t.value};
  });
}

std::vector<double> window_coverage(std::size_t height, std::size_t width, std::size_t k,
                                    std::size_t s) {
  if (k == 0 || s == 0) throw ShapeError("conv_norm: kernel size and stride must be positive");
  if (k > height || k > width) {
    throw ShapeError("conv_norm: kernel size " + std::to_string(k) + " exceeds input " +
                     std::to_string(height) + "x" + std::to_string(width));
  }
  const std::size_t oh = (height - k) / s + 1;
  const std::size_t ow = (width - k) / s + 1;
  std::vector<double> count(height * width, 0.0);
  for (std::size_t a = 0; a < oh; ++a) {
    for (std::size_t b = 0; b < ow; ++b) {
      for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) count[(a * s + i) * width + b * s + j] += 1.0;
      }
    }
  }
  return count;
}

Tensor conv_norm(const Tensor& x, std::size_t k, std::size_t s) {
  if (x.rank() < 2) throw ShapeError("conv_norm: expects [..., H, W], got " + to_string(x.shape()));
  const std::size_t h = x.shape()[x.rank() - 2];
  const std::size_t w = x.shape()[x.rank() - 1];
  const auto plane = window_coverage(h, w, k, s);
  const std::size_t planes = x.numel() / plane.size();
  std::vector<double> mask;
  mask.reserve(x.numel());
  for (std::size_t p = 0; p < planes; ++p) mask.insert(mask.end(), plane.begin(), plane.end());
  return sum(mul(square(x), Tensor::from(x.shape(), std::move(mask))));
}

Tensor r1(const Tensor& x, const Tensor& theta, double sigma) {
  if (x.rank() != 1 || theta.rank() != 2 || theta.shape()[1] != x.shape()[0]) {
    throw ShapeError("r1: theta " + to_string(theta.shape()) + " does not act on x " +
                     to_string(x.shape()));
  }
  const std::size_t d_in = x.shape()[0];
  const std::size_t d_out = theta.shape()[0];
  const Tensor sq = smooth_relu_sq(x, sigma);
  const Tensor h = smooth_relu(x, sigma);
  // |W diag(v)|_F^2 = sum_j v_j^2 sum_i W_ij^2
  const Tensor col = matmul(Tensor::full({1, d_out}, 1.0), square(theta));
  const Tensor spread = sum(mul(col, reshape(sq, {1, d_in})));
  const Tensor mean_sq = sum(mul(col, reshape(square(h), {1, d_in})));
  const double c = 0.5 * sigma * sigma * static_cast<double>(d_in);
  return spread - mean_sq + c * sum(sq);
}

Tensor r2(const Tensor& x, const Tensor& theta, std::size_t k, std::size_t stride, double sigma) {
  if (x.rank() != 2) throw ShapeError("r2: expects x [H,W], got " + to_string(x.shape()));
  if (theta.shape() != Shape{k, k}) {
    throw ShapeError("r2: kernel " + to_string(theta.shape()) + " is not " + std::to_string(k) + "x" +
                     std::to_string(k));
  }
  const Tensor h = smooth_relu(x, sigma);
  const Tensor windows = conv_norm(h, k, stride);
  const double s2 = sigma * sigma;
  const double w = static_cast<double>((x.shape()[1] - k) / stride + 1);
  return 0.5 * s2 * windows + sum(smooth_relu_sq(x, sigma)) -
         frobenius_norm_sq(h) + 0.5 * s2 * w * w * frobenius_norm_sq(theta);
}

Tensor dropout_regularizer(const Tensor& x_in, const Tensor& x_out, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("dropout_regularizer: p must lie in [0, 1]");
  return p * frobenius_norm_sq(x_out) + (1.0 - p) * frobenius_norm_sq(x_in - x_out);
}

// ---- specs -----------------------------------------------------------------

LayerSpec LayerSpec::dense(std::size_t d_in, std::size_t d_out, double lambda) {
  return {DenseLayer{d_in, d_out}, lambda};
}
LayerSpec LayerSpec::conv(std::size_t kernels, std::size_t k, std::size_t stride, double lambda) {
  return {ConvLayer{kernels, k, stride}, lambda};
}
LayerSpec LayerSpec::activation(double lambda) { return {ActivationLayer{}, lambda}; }
LayerSpec LayerSpec::avg_pool(std::size_t window, std::size_t stride) {
  return {AvgPoolLayer{window, stride}, 0.0};
}
LayerSpec LayerSpec::dropout(double p, double lambda) { return {DropoutLayer{p}, lambda}; }
LayerSpec LayerSpec::flatten() { return {FlattenLayer{}, 0.0}; }

std::string layer_name(const LayerSpec& spec) {
  return std::visit(
      Overloaded{
          [](const DenseLayer& l) { return "dense " + std::to_string(l.d_in) + "->" + std::to_string(l.d_out); },
          [](const ConvLayer& l) {
            return "conv " + std::to_string(l.kernels) + "x" + std::to_string(l.k) + "x" +
                   std::to_string(l.k) + " s" + std::to_string(l.stride);
          },
          [](const ActivationLayer&) { return std::string("relu"); },
          [](const AvgPoolLayer& l) {
            return "avgpool " + std::to_string(l.window) + " s" + std::to_string(l.stride);
          },
          [](const DropoutLayer& l) { return "dropout " + std::to_string(l.p); },
          [](const FlattenLayer&) { return std::string("flatten"); },
      },
      spec.kind);
}

std::vector<LayerSpec> conv_net_layers(const ConvNetGeometry& g, const ConvNetLambdas& lambdas) {
  if (g.image < g.k) throw ShapeError("conv_net_layers: kernel larger than the image");
  const std::size_t conv_out = g.image - g.k + 1;
  if (conv_out < g.pool) throw ShapeError("conv_net_layers: pooling window larger than the feature map");
  const std::size_t pooled = (conv_out - g.pool) / g.pool + 1;
  return {
      LayerSpec::conv(g.kernels, g.k, 1),
      LayerSpec::activation(lambdas.relu1),
      LayerSpec::avg_pool(g.pool, g.pool),
      LayerSpec::flatten(),
      LayerSpec::dense(g.kernels * pooled * pooled, g.hidden, lambdas.dense1),
      LayerSpec::activation(lambdas.relu2),
      LayerSpec::dense(g.hidden, g.classes, lambdas.output),
  };
}

// ---- network ---------------------------------------------------------------

SmoothedNetwork::SmoothedNetwork(Shape input_shape, std::vector<LayerSpec> layers, NetworkOptions options)
    : layers_(std::move(layers)), options_(options) {
  if (layers_.empty()) throw ShapeError("SmoothedNetwork: no layers");
  for (std::size_t d : input_shape) {
    if (d == 0) throw ShapeError("SmoothedNetwork: input shape " + to_string(input_shape) + " has a zero extent");
  }
  shapes_.push_back(std::move(input_shape));
  first_parametric_ = layers_.size();
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& spec = layers_[i];
    if (spec.lambda < 0.0) chain_error(i, spec, shapes_.back(), "lambda must be >= 0");
    shapes_.push_back(output_shape_of(i, spec, shapes_.back()));
    Slot slot;
    if (const auto* d = std::get_if<DenseLayer>(&spec.kind)) {
      slot = {params_.size(), true};
      params_.push_back(Tensor::zeros({d->d_in, d->d_out}, true));
      params_.push_back(Tensor::zeros({d->d_out}, true));
    } else if (const auto* c = std::get_if<ConvLayer>(&spec.kind)) {
      slot = {params_.size(), true};
      params_.push_back(Tensor::zeros({c->kernels, shapes_[i][0], c->k, c->k}, true));
      params_.push_back(Tensor::zeros({c->kernels}, true));
    }
    if (slot.has_params && first_parametric_ == layers_.size()) first_parametric_ = i;
    slots_.push_back(slot);
  }
}

void SmoothedNetwork::init_glorot(std::uint64_t seed) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (!slots_[i].has_params) continue;
    Tensor& w = params_[slots_[i].weight];
    double fan_in = 0.0;
    double fan_out = 0.0;
    if (const auto* d = std::get_if<DenseLayer>(&layers_[i].kind)) {
      fan_in = static_cast<double>(d->d_in);
      fan_out = static_cast<double>(d->d_out);
    } else {
      const auto& s = w.shape();
      const double area = static_cast<double>(s[2] * s[3]);
      fan_in = static_cast<double>(s[1]) * area;
      fan_out = static_cast<double>(s[0]) * area;
    }
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    CounterRng rng(derive_seed(seed, i));
    for (auto& v : w.mutable_data()) v = limit * (2.0 * rng.uniform() - 1.0);
    auto b = params_[slots_[i].weight + 1].mutable_data();
    std::fill(b.begin(), b.end(), 0.0);
  }
}

std::size_t SmoothedNetwork::num_parameters() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.numel();
  return n;
}

std::vector<double> SmoothedNetwork::parameters() const {
  std::vector<double> out;
  out.reserve(num_parameters());
  for (const auto& p : params_) out.insert(out.end(), p.data().begin(), p.data().end());
  return out;
}

void SmoothedNetwork::set_parameters(std::span<const double> flat) {
  if (flat.size() != num_parameters()) {
    throw ShapeError("set_parameters: got " + std::to_string(flat.size()) + " values, network has " +
                     std::to_string(num_parameters()));
  }
  std::size_t offset = 0;
  for (auto& p : params_) {
    auto dst = p.mutable_data();
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), dst.size(), dst.begin());
    offset += dst.size();
  }
}

Tensor SmoothedNetwork::activate(const Tensor& x, double sigma) const {
  return options_.smoothed ? smooth_relu(x, sigma) : relu(x);
}

SmoothedNetwork::Evaluation SmoothedNetwork::evaluate(const Tensor& inputs, const Tensor& targets,
                                                      double sigma) const {
  if (!(sigma >= 0.0)) throw std::invalid_argument("SmoothedNetwork: sigma must be >= 0");
  if (inputs.rank() == 0 || inputs.shape() != batched(inputs.shape()[0], shapes_.front())) {
    throw ShapeError("SmoothedNetwork: inputs " + to_string(inputs.shape()) + " do not match [N, " +
                     to_string(shapes_.front()) + "]");
  }
  const std::size_t n = inputs.shape()[0];
  if (targets.shape() != batched(n, shapes_.back())) {
    throw ShapeError("SmoothedNetwork: targets " + to_string(targets.shape()) + " do not match outputs " +
                     to_string(batched(n, shapes_.back())));
  }

  const bool regularize = options_.smoothed && sigma > 0.0;
  const double s2 = sigma * sigma;
  const double batch = static_cast<double>(n);
  std::vector<Tensor> terms;
  auto add_term = [&](const LayerSpec& spec, const Tensor& t) {
    if (spec.lambda != 0.0) terms.push_back(spec.lambda * t);
  };

  Tensor x = inputs;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& spec = layers_[i];
    const bool reg_here = regularize && i > first_parametric_ && spec.lambda != 0.0;
    std::visit(
        Overloaded{
            [&](const DenseLayer& l) {
              const Tensor& w = params_[slots_[i].weight];
              const Tensor& b = params_[slots_[i].weight + 1];
              if (reg_here) {
                const double c = static_cast<double>(
                    options_.dense_coefficient == DenseCoefficient::output_dim ? l.d_out : l.d_in);
                add_term(spec, (0.5 * s2 * batch) * frobenius_norm_sq(w) +
                                   (0.5 * s2 * c) * frobenius_norm_sq(x));
              }
              x = bias_add(matmul(x, w), b);
            },
            [&](const ConvLayer& l) {
              const Tensor& w = params_[slots_[i].weight];
              const Tensor& b = params_[slots_[i].weight + 1];
              if (reg_here) {
                const double width = static_cast<double>(shapes_[i + 1][2]);
                add_term(spec, (0.5 * s2 * width * width * batch) * frobenius_norm_sq(w) +
                                   (0.5 * s2) * conv_norm(x, l.k, l.stride));
              }
              x = bias_add(conv2d_valid(x, w, l.stride), b);
            },
            [&](const ActivationLayer&) {
              const Tensor h = activate(x, sigma);
              if (reg_here) {
                const Tensor spread = sum(smooth_relu_sq(x, sigma));
                const Tensor mean_sq = frobenius_norm_sq(h);
                add_term(spec, options_.sign == RegularizerSign::minus ? spread - mean_sq
                                                                          : spread + mean_sq);
              }
              x = h;
            },
            [&](const AvgPoolLayer& l) { x = avg_pool(x, l.window, l.stride); },
            [&](const DropoutLayer& l) {
              const Tensor out = (1.0 - l.p) * x;
              if (reg_here) add_term(spec, dropout_regularizer(x, out, l.p));
              x = out;
            },
            [&](const FlattenLayer&) { x = flatten(x); },
        },
        spec.kind);
  }

  Evaluation ev;
  ev.output = x;
  ev.data_loss = (1.0 / batch) * frobenius_norm_sq(x - targets);
  if (terms.empty()) {
    ev.regularizer = Tensor::scalar(0.0);
    ev.loss = ev.data_loss;
  } else {
    Tensor total = terms.front();
    for (std::size_t t = 1; t < terms.size(); ++t) total = total + terms[t];
    ev.regularizer = (1.0 / batch) * total;
    ev.loss = ev.data_loss + ev.regularizer;
  }
  return ev;
}

Tensor SmoothedNetwork::predict(const Tensor& inputs, double sigma) const {
  const std::size_t n = inputs.rank() ? inputs.shape()[0] : 0;
  return evaluate(inputs, Tensor::zeros(batched(n, shapes_.back())), sigma).output.detach();
}

double SmoothedNetwork::loss_and_gradient(const Tensor& inputs, const Tensor& targets, double sigma,
                                          std::span<double> grad) {
  if (grad.size() != num_parameters()) {
    throw ShapeError("loss_and_gradient: gradient buffer has " + std::to_string(grad.size()) +
                     " entries, network has " + std::to_string(num_parameters()));
  }
  for (auto& p : params_) p.zero_grad();
  const Evaluation ev = evaluate(inputs, targets, sigma);
  const double loss = ev.loss.item();
  backward(ev.loss);
  std::size_t offset = 0;
  for (const auto& p : params_) {
    const auto g = p.grad();
    if (g.empty()) {
      std::fill_n(grad.begin() + static_cast<std::ptrdiff_t>(offset), p.numel(), 0.0);
    } else {
      std::copy(g.begin(), g.end(), grad.begin() + static_cast<std::ptrdiff_t>(offset));
    }
    offset += p.numel();
  }
  return loss;
}

Tensor one_hot(std::span<const int> labels, std::size_t classes) {
  std::vector<double> v(labels.size() * classes, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw std::out_of_range("one_hot: label " + std::to_string(labels[i]) + " outside [0, " +
                              std::to_string(classes) + ")");
    }
    v[i * classes + static_cast<std::size_t>(labels[i])] = 1.0;
  }
  return Tensor::from({labels.size(), classes}, std::move(v));
}

double accuracy(const Tensor& outputs, std::span<const int> labels) {
  if (outputs.rank() != 2 || outputs.shape()[0] != labels.size()) {
    throw ShapeError("accuracy: outputs " + to_string(outputs.shape()) + " vs " +
                     std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) return 0.0;
  const std::size_t classes = outputs.shape()[1];
  const auto d = outputs.data();
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto row = d.subspan(i * classes, classes);
    const auto best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    if (best == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

Tensor gather_batch(std::span<const double> samples, const Shape& sample_shape,
                    std::span<const std::size_t> batch) {
  const std::size_t size = numel(sample_shape);
  const std::size_t count = samples.size() / size;
  std::vector<double> v(batch.size() * size);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (batch[b] >= count) throw std::out_of_range("gather_batch: index " + std::to_string(batch[b]));
    std::copy_n(samples.begin() + static_cast<std::ptrdiff_t>(batch[b] * size), size,
                v.begin() + static_cast<std::ptrdiff_t>(b * size));
  }
  return Tensor::from(batched(batch.size(), sample_shape), std::move(v));
}

NetworkSource::NetworkSource(SmoothedNetwork& network, std::span<const double> inputs,
                             std::span<const int> labels)
    : network_(&network),
      inputs_(inputs),
      labels_(labels),
      sample_size_(numel(network.input_shape())),
      classes_(network.output_shape().at(0)) {
  if (labels.empty()) throw std::invalid_argument("NetworkSource: empty training set");
  if (inputs.size() != labels.size() * sample_size_) {
    throw ShapeError("NetworkSource: " + std::to_string(inputs.size()) + " input values for " +
                     std::to_string(labels.size()) + " samples of " + to_string(network.input_shape()));
  }
}

double NetworkSource::gradient(std::span<const double> x, std::span<const std::size_t> batch,
                               double sigma, std::span<double> grad) {
  network_->set_parameters(x);
  std::vector<int> picked(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) picked[b] = labels_[batch[b]];
  const Tensor in = gather_batch(inputs_, network_->input_shape(), batch);
  return network_->loss_and_gradient(in, one_hot(picked, classes_), sigma, grad);
}

}  // namespace gsmooth
