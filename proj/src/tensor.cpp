#include "gsmooth/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>
#include <unordered_set>

namespace gsmooth {

namespace detail {

struct Node;

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;
  std::shared_ptr<Node> grad_fn;

  std::span<double> grad_buffer() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
    return grad;
  }
};

using BackwardFn = std::function<void(Node&, const TensorImpl&)>;

struct Node {
  const char* name = "";
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  BackwardFn backward;
  bool released = false;

  bool wants(std::size_t i) const { return inputs[i]->requires_grad; }
  std::span<double> grad_of(std::size_t i) { return inputs[i]->grad_buffer(); }
  std::span<const double> value_of(std::size_t i) const { return inputs[i]->data; }
};

}  // namespace detail

using detail::Node;
using detail::TensorImpl;

struct TensorAccess {
  static const std::shared_ptr<TensorImpl>& impl(const Tensor& t) { return t.impl_; }
  static Tensor wrap(std::shared_ptr<TensorImpl> impl) { return Tensor(std::move(impl)); }
};

namespace {

void check_finite(const char* op, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      std::ostringstream msg;
      msg << op << ": non-finite value " << values[i] << " at flat index " << i;
      throw NumericError(msg.str());
    }
  }
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b, const char* what) {
  std::ostringstream msg;
  msg << op << ": " << what << " (got " << to_string(a) << " and " << to_string(b) << ")";
  throw ShapeError(msg.str());
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const char* what) {
  std::ostringstream msg;
  msg << op << ": " << what << " (got " << to_string(a) << ")";
  throw ShapeError(msg.str());
}

Tensor make_result(const char* op, Shape shape, std::vector<double> values,
                   std::initializer_list<const Tensor*> inputs, detail::BackwardFn backward_fn) {
  check_finite(op, values);
  auto out = std::make_shared<TensorImpl>();
  out->shape = std::move(shape);
  out->data = std::move(values);
  bool any = false;
  for (const Tensor* in : inputs) any = any || in->requires_grad();
  if (any) {
    auto node = std::make_shared<Node>();
    node->name = op;
    for (const Tensor* in : inputs) node->inputs.push_back(TensorAccess::impl(*in));
    node->backward = std::move(backward_fn);
    out->requires_grad = true;
    out->grad_fn = std::move(node);
  }
  return TensorAccess::wrap(std::move(out));
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error(op, a.shape(), b.shape(), "shapes must match");
}

}  // namespace

std::size_t numel(const Shape& shape) noexcept {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "," : "") << shape[i];
  out << ']';
  return out.str();
}

// ---- Tensor --------------------------------------------------------------

Tensor::Tensor() : Tensor(Tensor::scalar(0.0)) {}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const auto n = gsmooth::numel(shape);
  return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  for (auto e : shape) {
    if (e == 0) shape_error("Tensor::from", shape, "extents must be positive");
  }
  if (gsmooth::numel(shape) != values.size()) {
    std::ostringstream msg;
    msg << "Tensor::from: shape " << to_string(shape) << " needs " << gsmooth::numel(shape)
        << " values, got " << values.size();
    throw ShapeError(msg.str());
  }
  check_finite("Tensor::from", values);
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(values);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({}, {value}, requires_grad);
}

const Shape& Tensor::shape() const noexcept { return impl_->shape; }
std::size_t Tensor::numel() const noexcept { return impl_->data.size(); }
std::span<const double> Tensor::data() const noexcept { return impl_->data; }

std::span<double> Tensor::mutable_data() {
  if (impl_->grad_fn) throw GraphError("mutable_data: tensor is the output of a recorded operation");
  return impl_->data;
}

double Tensor::item() const {
  if (impl_->data.size() != 1) shape_error("item", impl_->shape, "tensor must hold one element");
  return impl_->data[0];
}

bool Tensor::requires_grad() const noexcept { return impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool on) {
  if (impl_->grad_fn) throw GraphError("set_requires_grad: only leaf tensors can be toggled");
  impl_->requires_grad = on;
  return *this;
}

bool Tensor::is_leaf() const noexcept { return !impl_->grad_fn; }
bool Tensor::has_grad() const noexcept { return !impl_->grad.empty(); }
std::span<const double> Tensor::grad() const noexcept { return impl_->grad; }

void Tensor::zero_grad() noexcept {
  std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::detach() const { return from(impl_->shape, impl_->data, false); }

// ---- backward ------------------------------------------------------------

void backward(const Tensor& loss) {
  const auto& root = TensorAccess::impl(loss);
  if (root->data.size() != 1) {
    shape_error("backward", root->shape, "loss must be a scalar");
  }
  if (!root->requires_grad) {
    throw GraphError("backward: loss does not depend on any tensor that requires grad");
  }
  if (root->grad_fn && root->grad_fn->released) {
    throw GraphError("backward: graph already consumed; re-run the forward pass");
  }

  // Post-order DFS gives inputs before outputs; walk it in reverse. `order`
  // owns its entries because releasing a node drops its inputs.
  std::vector<std::shared_ptr<TensorImpl>> order;
  std::unordered_set<TensorImpl*> seen;
  std::vector<std::pair<std::shared_ptr<TensorImpl>, std::size_t>> stack;
  stack.emplace_back(root, 0);
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [impl, next] = stack.back();
    Node* node = impl->grad_fn.get();
    if (node && next < node->inputs.size()) {
      std::shared_ptr<TensorImpl> child = node->inputs[next++];
      if (child->requires_grad && seen.insert(child.get()).second) {
        if (child->grad_fn && child->grad_fn->released) {
          throw GraphError("backward: graph already consumed; re-run the forward pass");
        }
        stack.emplace_back(std::move(child), 0);
      }
    } else {
      order.push_back(std::move(impl));
      stack.pop_back();
    }
  }

  root->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorImpl* impl = it->get();
    Node* node = impl->grad_fn.get();
    if (!node) continue;
    if (!impl->grad.empty()) node->backward(*node, *impl);
    node->released = true;
    node->backward = nullptr;
    node->inputs.clear();
    impl->grad.clear();
    impl->grad.shrink_to_fit();
  }
}

// ---- elementwise ---------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  std::vector<double> out(a.numel());
  const auto x = a.data();
  const auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  return make_result("add", a.shape(), std::move(out), {&a, &b}, [](Node& n, const TensorImpl& o) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (!n.wants(k)) continue;
      auto g = n.grad_of(k);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  std::vector<double> out(a.numel());
  const auto x = a.data();
  const auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  return make_result("sub", a.shape(), std::move(out), {&a, &b}, [](Node& n, const TensorImpl& o) {
    if (n.wants(0)) {
      auto g = n.grad_of(0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    }
    if (n.wants(1)) {
      auto g = n.grad_of(1);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= o.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  std::vector<double> out(a.numel());
  const auto x = a.data();
  const auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  return make_result("mul", a.shape(), std::move(out), {&a, &b}, [](Node& n, const TensorImpl& o) {
    if (n.wants(0)) {
      auto g = n.grad_of(0);
      const auto y = n.value_of(1);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * y[i];
    }
    if (n.wants(1)) {
      auto g = n.grad_of(1);
      const auto x = n.value_of(0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * x[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (auto& v : out) v *= factor;
  return make_result("scale", a.shape(), std::move(out), {&a},
                     [factor](Node& n, const TensorImpl& o) {
                       auto g = n.grad_of(0);
                       for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * o.grad[i];
                     });
}

Tensor shift(const Tensor& a, double offset) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (auto& v : out) v += offset;
  return make_result("shift", a.shape(), std::move(out), {&a}, [](Node& n, const TensorImpl& o) {
    auto g = n.grad_of(0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
  });
}

Tensor map_elementwise(const Tensor& a, const char* name, std::vector<double> values,
                       std::vector<double> derivatives) {
  if (values.size() != a.numel() || derivatives.size() != a.numel()) {
    shape_error(name, a.shape(), "value/derivative buffers must match the input size");
  }
  auto saved = std::make_shared<std::vector<double>>(std::move(derivatives));
  return make_result(name, a.shape(), std::move(values), {&a},
                     [saved](Node& n, const TensorImpl& o) {
                       auto g = n.grad_of(0);
                       const auto& d = *saved;
                       for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * d[i];
                     });
}

Tensor square(const Tensor& a) {
  return map_elementwise(a, "square", [](double x) { return std::pair{x * x, 2.0 * x}; });
}

Tensor sqrt(const Tensor& a) {
  for (double x : a.data()) {
    if (x < 0.0) throw NumericError("sqrt: negative input " + std::to_string(x));
  }
  return map_elementwise(a, "sqrt", [](double x) {
    const double r = std::sqrt(x);
    return std::pair{r, 0.5 / r};
  });
}

Tensor exp(const Tensor& a) {
  return map_elementwise(a, "exp", [](double x) {
    const double e = std::exp(x);
    return std::pair{e, e};
  });
}

Tensor erf(const Tensor& a) {
  return map_elementwise(a, "erf", [](double x) {
    return std::pair{std::erf(x), 2.0 / std::sqrt(std::numbers::pi) * std::exp(-x * x)};
  });
}

Tensor relu(const Tensor& a) {
  return map_elementwise(a, "relu", [](double x) {
    return x > 0.0 ? std::pair{x, 1.0} : std::pair{0.0, 0.0};
  });
}

// ---- reductions ----------------------------------------------------------

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return make_result("sum", {}, {s}, {&a}, [](Node& n, const TensorImpl& o) {
    const double go = o.grad[0];
    for (auto& g : n.grad_of(0)) g += go;
  });
}

Tensor mean(const Tensor& a) {
  const double count = static_cast<double>(a.numel());
  double s = 0.0;
  for (double v : a.data()) s += v;
  return make_result("mean", {}, {s / count}, {&a}, [count](Node& n, const TensorImpl& o) {
    const double go = o.grad[0] / count;
    for (auto& g : n.grad_of(0)) g += go;
  });
}

Tensor frobenius_norm_sq(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return make_result("frobenius_norm_sq", {}, {s}, {&a}, [](Node& n, const TensorImpl& o) {
    const double go = 2.0 * o.grad[0];
    auto g = n.grad_of(0);
    const auto x = n.value_of(0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += go * x[i];
  });
}

// ---- shape ---------------------------------------------------------------

Tensor reshape(const Tensor& a, Shape shape) {
  if (gsmooth::numel(shape) != a.numel()) shape_error("reshape", a.shape(), shape, "element counts differ");
  std::vector<double> out(a.data().begin(), a.data().end());
  return make_result("reshape", std::move(shape), std::move(out), {&a},
                     [](Node& n, const TensorImpl& o) {
                       auto g = n.grad_of(0);
                       for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
                     });
}

Tensor flatten(const Tensor& a) {
  if (a.rank() < 1) shape_error("flatten", a.shape(), "needs a leading batch axis");
  const std::size_t batch = a.shape()[0];
  return reshape(a, {batch, a.numel() / batch});
}

Tensor diag_embed(const Tensor& v) {
  if (v.rank() != 1) shape_error("diag_embed", v.shape(), "expects a vector");
  const std::size_t d = v.shape()[0];
  std::vector<double> out(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) out[i * d + i] = v.data()[i];
  return make_result("diag_embed", {d, d}, std::move(out), {&v}, [d](Node& n, const TensorImpl& o) {
    auto g = n.grad_of(0);
    for (std::size_t i = 0; i < d; ++i) g[i] += o.grad[i * d + i];
  });
}

// ---- linear algebra ------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) shape_error("matmul", a.shape(), b.shape(), "operands must be matrices");
  const std::size_t m = a.shape()[0];
  const std::size_t k = a.shape()[1];
  const std::size_t n = b.shape()[1];
  if (b.shape()[0] != k) shape_error("matmul", a.shape(), b.shape(), "inner dimensions differ");

  std::vector<double> out(m * n, 0.0);
  const double* A = a.data().data();
  const double* B = b.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = B + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += aip * brow[j];
    }
  }
  return make_result("matmul", {m, n}, std::move(out), {&a, &b},
                     [m, k, n](Node& node, const TensorImpl& o) {
                       const double* G = o.grad.data();
                       if (node.wants(0)) {
                         auto ga = node.grad_of(0);
                         const double* B = node.value_of(1).data();
                         // Row updates against B^T vectorize; per-entry dot products do not.
                         std::vector<double> bt(k * n);
                         for (std::size_t p = 0; p < k; ++p) {
                           for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = B[p * n + j];
                         }
                         for (std::size_t i = 0; i < m; ++i) {
                           const double* grow = G + i * n;
                           double* garow = ga.data() + i * k;
                           for (std::size_t j = 0; j < n; ++j) {
                             const double gij = grow[j];
                             if (gij == 0.0) continue;
                             const double* btrow = bt.data() + j * k;
                             for (std::size_t p = 0; p < k; ++p) garow[p] += gij * btrow[p];
                           }
                         }
                       }
                       if (node.wants(1)) {
                         auto gb = node.grad_of(1);
                         const double* A = node.value_of(0).data();
                         for (std::size_t i = 0; i < m; ++i) {
                           const double* grow = G + i * n;
                           for (std::size_t p = 0; p < k; ++p) {
                             const double aip = A[i * k + p];
                             if (aip == 0.0) continue;
                             double* gbrow = gb.data() + p * n;
                             for (std::size_t j = 0; j < n; ++j) gbrow[j] += aip * grow[j];
                           }
                         }
                       }
                     });
}

Tensor bias_add(const Tensor& x, const Tensor& bias) {
  if (x.rank() < 2 || bias.rank() != 1 || bias.shape()[0] != x.shape()[1]) {
    shape_error("bias_add", x.shape(), bias.shape(), "bias length must equal axis 1 of the input");
  }
  const std::size_t batch = x.shape()[0];
  const std::size_t channels = x.shape()[1];
  const std::size_t inner = x.numel() / (batch * channels);
  std::vector<double> out(x.data().begin(), x.data().end());
  const auto b = bias.data();
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      double* p = out.data() + (n * channels + c) * inner;
      for (std::size_t i = 0; i < inner; ++i) p[i] += b[c];
    }
  }
  return make_result("bias_add", x.shape(), std::move(out), {&x, &bias},
                     [batch, channels, inner](Node& node, const TensorImpl& o) {
                       if (node.wants(0)) {
                         auto g = node.grad_of(0);
                         for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
                       }
                       if (node.wants(1)) {
                         auto g = node.grad_of(1);
                         for (std::size_t n = 0; n < batch; ++n) {
                           for (std::size_t c = 0; c < channels; ++c) {
                             const double* p = o.grad.data() + (n * channels + c) * inner;
                             double s = 0.0;
                             for (std::size_t i = 0; i < inner; ++i) s += p[i];
                             g[c] += s;
                           }
                         }
                       }
                     });
}

Tensor conv2d_valid(const Tensor& input, const Tensor& kernels, std::size_t stride) {
  const auto& xs = input.shape();
  const auto& ws = kernels.shape();
  if (xs.size() != 4 || ws.size() != 4) {
    shape_error("conv2d_valid", xs, ws, "expects input [N,C,H,W] and kernels [K,C,k,k]");
  }
  if (ws[1] != xs[1]) shape_error("conv2d_valid", xs, ws, "kernel channels must equal input channels");
  if (ws[2] != ws[3]) shape_error("conv2d_valid", xs, ws, "kernels must be square");
  if (stride == 0) shape_error("conv2d_valid", xs, ws, "stride must be positive");
  const std::size_t k = ws[2];
  if (xs[2] < k || xs[3] < k) shape_error("conv2d_valid", xs, ws, "input smaller than kernel");

  const std::size_t N = xs[0], C = xs[1], H = xs[2], W = xs[3], K = ws[0];
  const std::size_t Ho = (H - k) / stride + 1;
  const std::size_t Wo = (W - k) / stride + 1;
  std::vector<double> out(N * K * Ho * Wo, 0.0);
  const double* X = input.data().data();
  const double* F = kernels.data().data();
  const std::size_t s = stride;

  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t kk = 0; kk < K; ++kk) {
      double* o = out.data() + (n * K + kk) * Ho * Wo;
      for (std::size_t c = 0; c < C; ++c) {
        const double* x = X + (n * C + c) * H * W;
        const double* f = F + (kk * C + c) * k * k;
        for (std::size_t p = 0; p < k; ++p) {
          for (std::size_t q = 0; q < k; ++q) {
            const double fv = f[p * k + q];
            for (std::size_t i = 0; i < Ho; ++i) {
              const double* xr = x + (i * s + p) * W + q;
              double* orow = o + i * Wo;
              if (s == 1) {
                for (std::size_t j = 0; j < Wo; ++j) orow[j] += fv * xr[j];
              } else {
                for (std::size_t j = 0; j < Wo; ++j) orow[j] += fv * xr[j * s];
              }
            }
          }
        }
      }
    }
  }

  return make_result(
      "conv2d_valid", {N, K, Ho, Wo}, std::move(out), {&input, &kernels},
      [=](Node& node, const TensorImpl& o) {
        const double* G = o.grad.data();
        if (node.wants(1)) {
          auto gw = node.grad_of(1);
          const double* X = node.value_of(0).data();
          for (std::size_t n = 0; n < N; ++n) {
            for (std::size_t kk = 0; kk < K; ++kk) {
              const double* g = G + (n * K + kk) * Ho * Wo;
              for (std::size_t c = 0; c < C; ++c) {
                const double* x = X + (n * C + c) * H * W;
                double* gf = gw.data() + (kk * C + c) * k * k;
                for (std::size_t p = 0; p < k; ++p) {
                  for (std::size_t q = 0; q < k; ++q) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < Ho; ++i) {
                      const double* xr = x + (i * s + p) * W + q;
                      const double* gr = g + i * Wo;
                      for (std::size_t j = 0; j < Wo; ++j) acc += gr[j] * xr[j * s];
                    }
                    gf[p * k + q] += acc;
                  }
                }
              }
            }
          }
        }
        if (node.wants(0)) {
          auto gx = node.grad_of(0);
          const double* F = node.value_of(1).data();
          for (std::size_t n = 0; n < N; ++n) {
            for (std::size_t kk = 0; kk < K; ++kk) {
              const double* g = G + (n * K + kk) * Ho * Wo;
              for (std::size_t c = 0; c < C; ++c) {
                double* gxc = gx.data() + (n * C + c) * H * W;
                const double* f = F + (kk * C + c) * k * k;
                for (std::size_t p = 0; p < k; ++p) {
                  for (std::size_t q = 0; q < k; ++q) {
                    const double fv = f[p * k + q];
                    for (std::size_t i = 0; i < Ho; ++i) {
                      double* xr = gxc + (i * s + p) * W + q;
                      const double* gr = g + i * Wo;
                      for (std::size_t j = 0; j < Wo; ++j) xr[j * s] += fv * gr[j];
                    }
                  }
                }
              }
            }
          }
        }
      });
}

Tensor avg_pool(const Tensor& input, std::size_t window, std::size_t stride) {
  const auto& xs = input.shape();
  if (xs.size() != 4) shape_error("avg_pool", xs, "expects [N,C,H,W]");
  if (window == 0 || stride == 0) shape_error("avg_pool", xs, "window and stride must be positive");
  if (xs[2] < window || xs[3] < window) shape_error("avg_pool", xs, "input smaller than window");
  const std::size_t planes = xs[0] * xs[1], H = xs[2], W = xs[3];
  const std::size_t Ho = (H - window) / stride + 1;
  const std::size_t Wo = (W - window) / stride + 1;
  const double inv = 1.0 / static_cast<double>(window * window);

  std::vector<double> out(planes * Ho * Wo, 0.0);
  const double* X = input.data().data();
  for (std::size_t pl = 0; pl < planes; ++pl) {
    const double* x = X + pl * H * W;
    double* o = out.data() + pl * Ho * Wo;
    for (std::size_t i = 0; i < Ho; ++i) {
      for (std::size_t j = 0; j < Wo; ++j) {
        double acc = 0.0;
        for (std::size_t p = 0; p < window; ++p) {
          const double* xr = x + (i * stride + p) * W + j * stride;
          for (std::size_t q = 0; q < window; ++q) acc += xr[q];
        }
        o[i * Wo + j] = acc * inv;
      }
    }
  }
  Shape shape{xs[0], xs[1], Ho, Wo};
  return make_result("avg_pool", std::move(shape), std::move(out), {&input},
                     [=](Node& node, const TensorImpl& o) {
                       auto gx = node.grad_of(0);
                       for (std::size_t pl = 0; pl < planes; ++pl) {
                         double* g = gx.data() + pl * H * W;
                         const double* go = o.grad.data() + pl * Ho * Wo;
                         for (std::size_t i = 0; i < Ho; ++i) {
                           for (std::size_t j = 0; j < Wo; ++j) {
                             const double v = go[i * Wo + j] * inv;
                             for (std::size_t p = 0; p < window; ++p) {
                               double* gr = g + (i * stride + p) * W + j * stride;
                               for (std::size_t q = 0; q < window; ++q) gr[q] += v;
                             }
                           }
                         }
                       }
                     });
}

}  // namespace gsmooth
