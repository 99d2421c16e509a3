#pragma once

// Dense row-major tensors of doubles with reverse-mode differentiation.
//
// Every operation that has an input with requires_grad() set records a node
// linking the output to its inputs. backward(loss) walks those nodes in
// reverse topological order, accumulates gradients into every leaf that
// requires them, and then releases the graph: saved intermediates are freed
// and a second backward through the same graph throws GraphError. Leaf
// gradients accumulate across backward calls until zero_grad().
//
// A graph and its tensors belong to one thread. Independent graphs may be
// built and differentiated concurrently.

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gsmooth {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape) noexcept;
std::string to_string(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GraphError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

namespace detail {
struct TensorImpl;
struct Node;
}  // namespace detail

class Tensor {
 public:
  /// A scalar zero.
  Tensor();

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  const Shape& shape() const noexcept;
  std::size_t rank() const noexcept { return shape().size(); }
  std::size_t numel() const noexcept;

  std::span<const double> data() const noexcept;
  /// Writable view of a leaf's values. Throws GraphError on non-leaf tensors.
  std::span<double> mutable_data();
  /// The single value of a one-element tensor.
  double item() const;

  bool requires_grad() const noexcept;
  Tensor& set_requires_grad(bool on = true);
  bool is_leaf() const noexcept;

  bool has_grad() const noexcept;
  /// Accumulated gradient; empty span when none has been produced.
  std::span<const double> grad() const noexcept;
  void zero_grad() noexcept;

  /// Copy of the values with no graph history.
  Tensor detach() const;

  bool same_as(const Tensor& other) const noexcept { return impl_ == other.impl_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<detail::TensorImpl> impl_;

  friend struct TensorAccess;
};

/// Populates grad() on every requires_grad leaf reachable from `loss`, which
/// must hold exactly one element. Consumes the graph.
void backward(const Tensor& loss);

// ---- primitives ----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor shift(const Tensor& a, double offset);

/// [M,K] x [K,N] -> [M,N]
Tensor matmul(const Tensor& a, const Tensor& b);

/// Adds b[C] along axis 1 of x[N,C,...]. The only broadcasting operation.
Tensor bias_add(const Tensor& x, const Tensor& bias);

/// Valid (unpadded) cross-correlation.
/// input [N,C,H,W], kernels [K,C,k,k] -> [N,K,(H-k)/s+1,(W-k)/s+1]
Tensor conv2d_valid(const Tensor& input, const Tensor& kernels, std::size_t stride);

/// Window average over the two trailing axes of [N,C,H,W], no padding.
Tensor avg_pool(const Tensor& input, std::size_t window, std::size_t stride);

Tensor square(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor erf(const Tensor& a);
Tensor relu(const Tensor& a);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor frobenius_norm_sq(const Tensor& a);

/// [N, ...] -> [N, prod(...)]
Tensor flatten(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);

/// [D] -> [D,D] with the vector on the diagonal.
Tensor diag_embed(const Tensor& v);

/// Elementwise map with caller-supplied values and derivatives, evaluated
/// once in the forward pass. `name` appears in error messages.
Tensor map_elementwise(const Tensor& a, const char* name, std::vector<double> values,
                       std::vector<double> derivatives);

template <class F>
Tensor map_elementwise(const Tensor& a, const char* name, F&& value_and_derivative) {
  const auto in = a.data();
  std::vector<double> values(in.size());
  std::vector<double> derivatives(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    const auto [v, d] = value_and_derivative(in[i]);
    values[i] = v;
    derivatives[i] = d;
  }
  return map_elementwise(a, name, std::move(values), std::move(derivatives));
}

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(const Tensor& a, double c) { return scale(a, c); }
inline Tensor operator*(double c, const Tensor& a) { return scale(a, c); }

}  // namespace gsmooth
