#pragma once

// Closed-form smoothed layers and the regularized network objective.
//
// A network is a sequence of layers. With smoothing on, each relu is replaced
// by relu_sigma and every layer after the first adds its regularizer, weighted
// by the layer's lambda:
//
//   activation   sum (relu^2)_sigma(x) - sum relu_sigma(x)^2
//   dense        sigma^2/2 |W|_F^2 + sigma^2 c/2 |x_in|^2      (c = d_out by default)
//   conv         sigma^2/2 w^2 |W|_F^2 + sigma^2/2 |x_in|_C^2  (w = output width)
//   dropout      p |x_out|^2 + (1-p) |x_in - x_out|^2
//   avgpool, flatten: none
//
// Parameter-independent constants are dropped. At sigma == 0 no regularizer is
// built, so the loss is exactly the plain network's squared error.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gsmooth/optimizers.hpp"
#include "gsmooth/tensor.hpp"

namespace gsmooth {

// ---- tensor-level smoothed ops ---------------------------------------------

/// Elementwise relu_sigma; plain relu at sigma == 0.
Tensor smooth_relu(const Tensor& x, double sigma);
/// Elementwise (relu^2)_sigma; relu(x)^2 at sigma == 0.
Tensor smooth_relu_sq(const Tensor& x, double sigma);

/// Number of k x k windows on the stride-s grid covering each position of an
/// H x W plane. Throws ShapeError if k exceeds either extent.
std::vector<double> window_coverage(std::size_t height, std::size_t width, std::size_t k,
                                    std::size_t s);

/// Squared entries of every k x k stride-s window, each entry counted once per
/// covering window. Accepts [H,W] or [..., H, W]; leading axes are summed.
Tensor conv_norm(const Tensor& x, std::size_t k, std::size_t s);

/// |W diag(sqrt((relu^2)_s(x)))|_F^2 - |W diag(relu_s(x))|_F^2 + s^2 dim(x)/2 sum (relu^2)_s(x)
/// for x [d_in] and W [d_out, d_in].
Tensor r1(const Tensor& x, const Tensor& theta, double sigma);

/// s^2/2 |relu_s(x)|_C^2 + sum (relu^2)_s(x) - |relu_s(x)|_F^2 + s^2/2 w^2 |W|_F^2
/// for x [H,W] and a single k x k kernel W at stride `stride`.
Tensor r2(const Tensor& x, const Tensor& theta, std::size_t k, std::size_t stride, double sigma);

/// p |x_out|^2 + (1-p) |x_in - x_out|^2.
Tensor dropout_regularizer(const Tensor& x_in, const Tensor& x_out, double p);

// ---- layer specs -----------------------------------------------------------

struct DenseLayer {
  std::size_t d_in = 0;
  std::size_t d_out = 0;
};
struct ConvLayer {
  std::size_t kernels = 0;
  std::size_t k = 0;
  std::size_t stride = 1;
};
struct ActivationLayer {};
struct AvgPoolLayer {
  std::size_t window = 2;
  std::size_t stride = 2;
};
struct DropoutLayer {
  double p = 0.0;
};
struct FlattenLayer {};

using LayerKind =
    std::variant<DenseLayer, ConvLayer, ActivationLayer, AvgPoolLayer, DropoutLayer, FlattenLayer>;

struct LayerSpec {
  LayerKind kind;
  double lambda = 0.0;

  static LayerSpec dense(std::size_t d_in, std::size_t d_out, double lambda = 0.0);
  static LayerSpec conv(std::size_t kernels, std::size_t k, std::size_t stride = 1, double lambda = 0.0);
  static LayerSpec activation(double lambda = 0.0);
  static LayerSpec avg_pool(std::size_t window, std::size_t stride);
  static LayerSpec dropout(double p, double lambda = 0.0);
  static LayerSpec flatten();
};

std::string layer_name(const LayerSpec& spec);

enum class RegularizerSign {
  minus,  // sum (relu^2)_s - sum relu_s^2
  plus,   // sum (relu^2)_s + sum relu_s^2
};

enum class DenseCoefficient {
  output_dim,  // sigma^2 d_out / 2
  input_dim,   // sigma^2 d_in / 2
};

struct NetworkOptions {
  bool smoothed = true;
  RegularizerSign sign = RegularizerSign::minus;
  DenseCoefficient dense_coefficient = DenseCoefficient::output_dim;
};

/// Conv -> relu -> avgpool -> flatten -> dense -> relu -> dense on a square
/// single-channel image.
struct ConvNetGeometry {
  std::size_t image = 28;
  std::size_t kernels = 32;
  std::size_t k = 4;
  std::size_t pool = 2;
  std::size_t hidden = 128;
  std::size_t classes = 10;
};

/// lambda for the first relu, the hidden dense layer, the second relu and the output layer.
struct ConvNetLambdas {
  double relu1 = 1e-7;
  double dense1 = 1e-7;
  double relu2 = 1e-5;
  double output = 1e-5;

  static ConvNetLambdas svrg() { return {1e-13, 1e-13, 1e-11, 1e-11}; }
};

std::vector<LayerSpec> conv_net_layers(const ConvNetGeometry& g, const ConvNetLambdas& lambdas = {});

class SmoothedNetwork {
 public:
  /// `input_shape` is per sample: {C,H,W} for image input or {d} for vectors.
  /// Throws ShapeError naming the first layer whose input does not fit.
  SmoothedNetwork(Shape input_shape, std::vector<LayerSpec> layers, NetworkOptions options = {});

  /// Glorot-uniform weights, zero biases.
  void init_glorot(std::uint64_t seed);

  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
  const NetworkOptions& options() const noexcept { return options_; }
  const Shape& input_shape() const noexcept { return shapes_.front(); }
  const Shape& output_shape() const noexcept { return shapes_.back(); }
  /// Per-sample shape entering layer i (i == layers().size() gives the output).
  const Shape& shape_at(std::size_t i) const { return shapes_.at(i); }

  std::size_t num_parameters() const noexcept;
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> flat);
  /// Leaf tensors in flattening order (weight then bias per parametric layer).
  const std::vector<Tensor>& parameter_tensors() const noexcept { return params_; }

  struct Evaluation {
    Tensor output;       // [N, classes]
    Tensor data_loss;    // mean over the batch of |x_L - y|^2
    Tensor regularizer;  // mean over the batch of sum_l lambda_l reg_l
    Tensor loss;         // data_loss + regularizer
  };

  /// inputs [N, input_shape...], targets [N, classes].
  Evaluation evaluate(const Tensor& inputs, const Tensor& targets, double sigma) const;

  /// Forward pass only, no regularizers.
  Tensor predict(const Tensor& inputs, double sigma) const;

  /// Loss at the current parameters; writes d loss / d params in flattening order.
  double loss_and_gradient(const Tensor& inputs, const Tensor& targets, double sigma,
                           std::span<double> grad);

 private:
  struct Slot {
    std::size_t weight = 0;  // index into params_
    bool has_params = false;
  };

  Tensor activate(const Tensor& x, double sigma) const;

  std::vector<LayerSpec> layers_;
  NetworkOptions options_;
  std::vector<Shape> shapes_;
  std::vector<Slot> slots_;
  std::vector<Tensor> params_;
  std::size_t first_parametric_ = 0;
};

/// Class-index targets as one-hot rows.
Tensor one_hot(std::span<const int> labels, std::size_t classes);

/// Fraction of rows whose argmax matches the label.
double accuracy(const Tensor& outputs, std::span<const int> labels);

/// Per-sample losses of a network over a fixed labelled set.
class NetworkSource : public GradientSource {
 public:
  /// `inputs` holds K samples of network.input_shape() back to back.
  NetworkSource(SmoothedNetwork& network, std::span<const double> inputs, std::span<const int> labels);

  std::size_t num_samples() const override { return labels_.size(); }
  std::size_t dim() const override { return network_->num_parameters(); }
  double gradient(std::span<const double> x, std::span<const std::size_t> batch, double sigma,
                  std::span<double> grad) override;

 private:
  SmoothedNetwork* network_;
  std::span<const double> inputs_;
  std::span<const int> labels_;
  std::size_t sample_size_;
  std::size_t classes_;
};

/// Gathers rows `batch` of a sample-major buffer into a [B, shape...] tensor.
Tensor gather_batch(std::span<const double> samples, const Shape& sample_shape,
                    std::span<const std::size_t> batch);

}  // namespace gsmooth
