// attfuse/tensor.hpp

// Copyright 2026  attfuse authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Reverse-mode tensor engine scoped to the operations this model needs.
// Tensors are shared handles onto graph nodes; every op that runs while
// gradients are enabled records a backward closure over its parents, and
// backward() replays them in reverse topological order. The scalar type is
// a template parameter: float for training, double for gradient checks.

#ifndef ATTFUSE_TENSOR_HPP_
#define ATTFUSE_TENSOR_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "attfuse/errors.hpp"
#include "attfuse/rng.hpp"

namespace attfuse {

inline bool& grad_mode() {
  thread_local bool enabled = true;
  return enabled;
}

// Disables graph construction for the enclosing scope (inference paths).
class NoGradGuard {
 public:
  NoGradGuard() : prev_(grad_mode()) { grad_mode() = false; }
  ~NoGradGuard() { grad_mode() = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

// Every op scans its output for NaN/Inf; flip this off only in hot loops
// that have their own checks.
inline bool& finite_checks() {
  thread_local bool enabled = true;
  return enabled;
}

template <typename T>
struct TensorNode {
  std::vector<int> shape;
  std::vector<T> value;
  std::vector<T> grad;  // allocated iff requires_grad
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode<T>>> parents;
  std::function<void(const TensorNode<T>&)> backward_fn;
};

inline std::string shape_str(const std::vector<int>& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

template <typename T>
class Tensor {
 public:
  using Node = TensorNode<T>;

  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false) {
    return from(std::move(shape), {}, requires_grad);
  }

  static Tensor full(std::vector<int> shape, T fill,
                     bool requires_grad = false) {
    const int64_t n = count(shape);
    std::vector<T> v(static_cast<size_t>(n), fill);
    return from(std::move(shape), std::move(v), requires_grad);
  }

  static Tensor from(std::vector<int> shape, std::vector<T> values,
                     bool requires_grad = false) {
    const int64_t n = count(shape);
    if (values.empty()) {
      values.assign(static_cast<size_t>(n), T(0));
    } else if (static_cast<int64_t>(values.size()) != n) {
      throw ShapeError("Tensor: " + std::to_string(values.size()) +
                       " values for shape " + shape_str(shape));
    }
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    node->requires_grad = requires_grad;
    if (requires_grad) node->grad.assign(node->value.size(), T(0));
    return Tensor(std::move(node));
  }

  static Tensor scalar(T v, bool requires_grad = false) {
    return from({1}, {v}, requires_grad);
  }

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  int ndim() const { return static_cast<int>(node_->shape.size()); }
  int dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }
  int64_t size() const { return static_cast<int64_t>(node_->value.size()); }

  const std::vector<T>& values() const { return node_->value; }
  std::vector<T>& mutable_values() { return node_->value; }
  const std::vector<T>& grad() const { return node_->grad; }
  std::vector<T>& mutable_grad() { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }

  T at(int64_t i) const { return node_->value[static_cast<size_t>(i)]; }
  T at(int r, int c) const {
    return node_->value[static_cast<size_t>(r) * dim(1) + c];
  }
  T item() const {
    if (size() != 1) throw ShapeError("item: tensor is not scalar");
    return node_->value[0];
  }

  void zero_grad() {
    if (node_->requires_grad) node_->grad.assign(node_->value.size(), T(0));
  }

  // Runs reverse-mode accumulation from this scalar.
  void backward() {
    if (size() != 1) throw ShapeError("backward: root must be scalar");
    if (!node_->requires_grad) return;

    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    struct Frame {
      Node* node;
      size_t next;
    };
    std::vector<Frame> stack{{node_.get(), 0}};
    visited.insert(node_.get());
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next < f.node->parents.size()) {
        Node* p = f.node->parents[f.next++].get();
        if (p->requires_grad && !visited.count(p)) {
          visited.insert(p);
          stack.push_back({p, 0});
        }
      } else {
        order.push_back(f.node);
        stack.pop_back();
      }
    }

    node_->grad.assign(1, T(1));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      Node* n = *it;
      if (n->backward_fn) n->backward_fn(*n);
    }
  }

  // Graph-node access for the op layer; not part of the public surface.
  const std::shared_ptr<Node>& node() const { return node_; }

  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

 private:
  static int64_t count(const std::vector<int>& shape) {
    if (shape.empty()) throw ShapeError("Tensor: rank-0 shapes unsupported");
    int64_t n = 1;
    for (int d : shape) {
      if (d <= 0) throw ShapeError("Tensor: nonpositive dim in " + shape_str(shape));
      n *= d;
    }
    return n;
  }

  std::shared_ptr<Node> node_;
};

namespace detail {

template <typename T>
void check_finite(const std::vector<T>& v, const char* op) {
  if (!finite_checks()) return;
  for (const T x : v) {
    if (!std::isfinite(x)) {
      throw NumericalError(std::string("non-finite value produced by ") + op);
    }
  }
}

// Central node factory: wires parents and the backward closure when grad
// mode is on and any parent carries gradients.
template <typename T>
Tensor<T> make_op(const char* name, std::vector<int> shape,
                  std::vector<T> value, std::vector<Tensor<T>> parents,
                  std::function<void(const TensorNode<T>&)> backward_fn) {
  check_finite(value, name);
  bool needs_grad = false;
  if (grad_mode()) {
    for (const auto& p : parents) needs_grad = needs_grad || p.requires_grad();
  }
  auto out = Tensor<T>::from(std::move(shape), std::move(value), needs_grad);
  if (needs_grad) {
    auto& node = *out.node();
    node.parents.reserve(parents.size());
    for (auto& p : parents) node.parents.push_back(p.node());
    node.backward_fn = std::move(backward_fn);
  }
  return out;
}

template <typename T>
using MatMap =
    Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using ConstMatMap = Eigen::Map<
    const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b,
                        const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

// Rows/cols view of the last dimension.
template <typename T>
std::pair<int64_t, int> as_rows(const Tensor<T>& x) {
  const int last = x.dim(x.ndim() - 1);
  return {x.size() / last, last};
}

}  // namespace detail

// ─── Elementwise ─────────────────────────────────────────────────────────────

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a, b, "add");
  std::vector<T> v(a.values());
  const auto& bv = b.values();
  for (size_t i = 0; i < v.size(); ++i) v[i] += bv[i];
  auto an = a.node(), bn = b.node();
  return detail::make_op<T>(
      "add", a.shape(), std::move(v), {a, b},
      [an, bn](const TensorNode<T>& self) {
        if (an->requires_grad) {
          for (size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
        }
        if (bn->requires_grad) {
          for (size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] += self.grad[i];
        }
      });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a, b, "sub");
  std::vector<T> v(a.values());
  const auto& bv = b.values();
  for (size_t i = 0; i < v.size(); ++i) v[i] -= bv[i];
  auto an = a.node(), bn = b.node();
  return detail::make_op<T>(
      "sub", a.shape(), std::move(v), {a, b},
      [an, bn](const TensorNode<T>& self) {
        if (an->requires_grad) {
          for (size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
        }
        if (bn->requires_grad) {
          for (size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] -= self.grad[i];
        }
      });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a, b, "mul");
  std::vector<T> v(a.values());
  const auto& bv = b.values();
  for (size_t i = 0; i < v.size(); ++i) v[i] *= bv[i];
  auto an = a.node(), bn = b.node();
  return detail::make_op<T>(
      "mul", a.shape(), std::move(v), {a, b},
      [an, bn](const TensorNode<T>& self) {
        if (an->requires_grad) {
          for (size_t i = 0; i < self.grad.size(); ++i) {
            an->grad[i] += self.grad[i] * bn->value[i];
          }
        }
        if (bn->requires_grad) {
          for (size_t i = 0; i < self.grad.size(); ++i) {
            bn->grad[i] += self.grad[i] * an->value[i];
          }
        }
      });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T c) {
  std::vector<T> v(a.values());
  for (T& x : v) x *= c;
  auto an = a.node();
  return detail::make_op<T>(
      "scale", a.shape(), std::move(v), {a},
      [an, c](const TensorNode<T>& self) {
        for (size_t i = 0; i < self.grad.size(); ++i) {
          an->grad[i] += c * self.grad[i];
        }
      });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T c) {
  std::vector<T> v(a.values());
  for (T& x : v) x += c;
  auto an = a.node();
  return detail::make_op<T>(
      "add_scalar", a.shape(), std::move(v), {a},
      [an](const TensorNode<T>& self) {
        for (size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
      });
}

namespace detail {

// Shared scaffold for unary maps whose derivative can be written in terms
// of the input x and output y.
template <typename T, typename Fwd, typename Bwd>
Tensor<T> unary_op(const char* name, const Tensor<T>& a, Fwd fwd, Bwd dydx) {
  std::vector<T> v(a.values());
  for (T& x : v) x = fwd(x);
  auto an = a.node();
  return make_op<T>(name, a.shape(), std::move(v), {a},
                    [an, dydx](const TensorNode<T>& self) {
                      for (size_t i = 0; i < self.grad.size(); ++i) {
                        an->grad[i] += self.grad[i] *
                                       dydx(an->value[i], self.value[i]);
                      }
                    });
}

}  // namespace detail

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  return detail::unary_op<T>(
      "relu", a, [](T x) { return x > T(0) ? x : T(0); },
      [](T x, T) { return x > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> tanh_op(const Tensor<T>& a) {
  return detail::unary_op<T>(
      "tanh", a, [](T x) { return std::tanh(x); },
      [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  return detail::unary_op<T>(
      "sigmoid", a, [](T x) { return T(1) / (T(1) + std::exp(-x)); },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> exp_op(const Tensor<T>& a) {
  return detail::unary_op<T>(
      "exp", a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

// Tanh-approximation GELU.
template <typename T>
inline T gelu_scalar(T x) {
  const T c = T(0.7978845608028654);  // sqrt(2/pi)
  const T a = T(0.044715);
  return T(0.5) * x * (T(1) + std::tanh(c * (x + a * x * x * x)));
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& a) {
  return detail::unary_op<T>(
      "gelu", a, [](T x) { return gelu_scalar(x); },
      [](T x, T) {
        const T c = T(0.7978845608028654);
        const T k = T(0.044715);
        const T u = c * (x + k * x * x * x);
        const T t = std::tanh(u);
        const T du = c * (T(1) + T(3) * k * x * x);
        return T(0.5) * (T(1) + t) + T(0.5) * x * (T(1) - t * t) * du;
      });
}

// ─── Matrix ops ──────────────────────────────────────────────────────────────

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) +
                     " x " + shape_str(b.shape()));
  }
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<T> v(static_cast<size_t>(m) * n);
  {
    detail::ConstMatMap<T> A(a.values().data(), m, k);
    detail::ConstMatMap<T> B(b.values().data(), k, n);
    detail::MatMap<T> Y(v.data(), m, n);
    Y.noalias() = A * B;
  }
  auto an = a.node(), bn = b.node();
  return detail::make_op<T>(
      "matmul", {m, n}, std::move(v), {a, b},
      [an, bn, m, k, n](const TensorNode<T>& self) {
        detail::ConstMatMap<T> G(self.grad.data(), m, n);
        if (an->requires_grad) {
          detail::ConstMatMap<T> B(bn->value.data(), k, n);
          detail::MatMap<T> dA(an->grad.data(), m, k);
          dA.noalias() += G * B.transpose();
        }
        if (bn->requires_grad) {
          detail::ConstMatMap<T> A(an->value.data(), m, k);
          detail::MatMap<T> dB(bn->grad.data(), k, n);
          dB.noalias() += A.transpose() * G;
        }
      });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  if (a.ndim() != 2) throw ShapeError("transpose: expected rank-2 tensor");
  const int r = a.dim(0), c = a.dim(1);
  std::vector<T> v(static_cast<size_t>(r) * c);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) {
      v[static_cast<size_t>(j) * r + i] = a.values()[static_cast<size_t>(i) * c + j];
    }
  }
  auto an = a.node();
  return detail::make_op<T>(
      "transpose", {c, r}, std::move(v), {a},
      [an, r, c](const TensorNode<T>& self) {
        for (int j = 0; j < c; ++j) {
          for (int i = 0; i < r; ++i) {
            an->grad[static_cast<size_t>(i) * c + j] +=
                self.grad[static_cast<size_t>(j) * r + i];
          }
        }
      });
}

// y[r, :] = x[r, :] + b
template <typename T>
Tensor<T> add_row_broadcast(const Tensor<T>& x, const Tensor<T>& b) {
  if (x.ndim() != 2 || b.ndim() != 1 || x.dim(1) != b.dim(0)) {
    throw ShapeError("add_row_broadcast: " + shape_str(x.shape()) + " + " +
                     shape_str(b.shape()));
  }
  const int r = x.dim(0), c = x.dim(1);
  std::vector<T> v(x.values());
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) v[static_cast<size_t>(i) * c + j] += b.at(j);
  }
  auto xn = x.node(), bn = b.node();
  return detail::make_op<T>(
      "add_row_broadcast", x.shape(), std::move(v), {x, b},
      [xn, bn, r, c](const TensorNode<T>& self) {
        if (xn->requires_grad) {
          for (size_t i = 0; i < self.grad.size(); ++i) xn->grad[i] += self.grad[i];
        }
        if (bn->requires_grad) {
          for (int i = 0; i < r; ++i) {
            for (int j = 0; j < c; ++j) {
              bn->grad[j] += self.grad[static_cast<size_t>(i) * c + j];
            }
          }
        }
      });
}

// ─── Reductions and shape ────────────────────────────────────────────────────

template <typename T>
Tensor<T> sum_all(const Tensor<T>& a) {
  T total = T(0);
  for (const T x : a.values()) total += x;
  auto an = a.node();
  return detail::make_op<T>(
      "sum", {1}, {total}, {a}, [an](const TensorNode<T>& self) {
        const T g = self.grad[0];
        for (T& gx : an->grad) gx += g;
      });
}

template <typename T>
Tensor<T> mean_all(const Tensor<T>& a) {
  return scale(sum_all(a), T(1) / static_cast<T>(a.size()));
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, std::vector<int> new_shape) {
  int64_t n = 1;
  for (int d : new_shape) n *= d;
  if (n != a.size()) {
    throw ShapeError("reshape: size mismatch " + shape_str(a.shape()) +
                     " -> " + shape_str(new_shape));
  }
  auto an = a.node();
  return detail::make_op<T>(
      "reshape", std::move(new_shape), std::vector<T>(a.values()), {a},
      [an](const TensorNode<T>& self) {
        for (size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
      });
}

// Contiguous slice along axis 0 or 1 of a rank-1/2 tensor.
template <typename T>
Tensor<T> slice(const Tensor<T>& a, int axis, int start, int len) {
  if (a.ndim() == 1) {
    if (axis != 0 || start < 0 || start + len > a.dim(0)) {
      throw ShapeError("slice: out of bounds on " + shape_str(a.shape()));
    }
    std::vector<T> v(a.values().begin() + start, a.values().begin() + start + len);
    auto an = a.node();
    return detail::make_op<T>("slice", {len}, std::move(v), {a},
                              [an, start](const TensorNode<T>& self) {
                                for (size_t i = 0; i < self.grad.size(); ++i) {
                                  an->grad[start + i] += self.grad[i];
                                }
                              });
  }
  if (a.ndim() != 2 || axis < 0 || axis > 1) {
    throw ShapeError("slice: expected rank-1/2 tensor, axis 0 or 1");
  }
  const int r = a.dim(0), c = a.dim(1);
  const int lim = axis == 0 ? r : c;
  if (start < 0 || len <= 0 || start + len > lim) {
    throw ShapeError("slice: out of bounds on " + shape_str(a.shape()));
  }
  std::vector<int> out_shape = axis == 0 ? std::vector<int>{len, c}
                                         : std::vector<int>{r, len};
  std::vector<T> v(static_cast<size_t>(out_shape[0]) * out_shape[1]);
  if (axis == 0) {
    std::copy(a.values().begin() + static_cast<size_t>(start) * c,
              a.values().begin() + static_cast<size_t>(start + len) * c,
              v.begin());
  } else {
    for (int i = 0; i < r; ++i) {
      std::copy(a.values().begin() + static_cast<size_t>(i) * c + start,
                a.values().begin() + static_cast<size_t>(i) * c + start + len,
                v.begin() + static_cast<size_t>(i) * len);
    }
  }
  auto an = a.node();
  return detail::make_op<T>(
      "slice", std::move(out_shape), std::move(v), {a},
      [an, axis, start, r, c](const TensorNode<T>& self) {
        if (axis == 0) {
          for (size_t i = 0; i < self.grad.size(); ++i) {
            an->grad[static_cast<size_t>(start) * c + i] += self.grad[i];
          }
        } else {
          const int len = self.shape[1];
          for (int i = 0; i < r; ++i) {
            for (int j = 0; j < len; ++j) {
              an->grad[static_cast<size_t>(i) * c + start + j] +=
                  self.grad[static_cast<size_t>(i) * len + j];
            }
          }
        }
      });
}

// Concatenates rank-1 tensors, or rank-2 tensors along axis 0 or 1.
template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const int nd = parts[0].ndim();
  for (const auto& p : parts) {
    if (p.ndim() != nd) throw ShapeError("concat: mixed ranks");
  }
  if (nd == 1) {
    int total = 0;
    for (const auto& p : parts) total += p.dim(0);
    std::vector<T> v;
    v.reserve(total);
    for (const auto& p : parts) {
      v.insert(v.end(), p.values().begin(), p.values().end());
    }
    std::vector<std::shared_ptr<TensorNode<T>>> nodes;
    for (const auto& p : parts) nodes.push_back(p.node());
    return detail::make_op<T>(
        "concat", {total}, std::move(v), parts,
        [nodes](const TensorNode<T>& self) {
          size_t off = 0;
          for (const auto& n : nodes) {
            if (n->requires_grad) {
              for (size_t i = 0; i < n->value.size(); ++i) {
                n->grad[i] += self.grad[off + i];
              }
            }
            off += n->value.size();
          }
        });
  }
  if (nd != 2 || axis < 0 || axis > 1) {
    throw ShapeError("concat: expected rank-1/2 tensors, axis 0 or 1");
  }
  if (axis == 0) {
    const int c = parts[0].dim(1);
    int rows = 0;
    for (const auto& p : parts) {
      if (p.dim(1) != c) throw ShapeError("concat: column mismatch");
      rows += p.dim(0);
    }
    std::vector<T> v;
    v.reserve(static_cast<size_t>(rows) * c);
    for (const auto& p : parts) {
      v.insert(v.end(), p.values().begin(), p.values().end());
    }
    std::vector<std::shared_ptr<TensorNode<T>>> nodes;
    for (const auto& p : parts) nodes.push_back(p.node());
    return detail::make_op<T>(
        "concat", {rows, c}, std::move(v), parts,
        [nodes](const TensorNode<T>& self) {
          size_t off = 0;
          for (const auto& n : nodes) {
            if (n->requires_grad) {
              for (size_t i = 0; i < n->value.size(); ++i) {
                n->grad[i] += self.grad[off + i];
              }
            }
            off += n->value.size();
          }
        });
  }
  // axis == 1
  const int r = parts[0].dim(0);
  int cols = 0;
  for (const auto& p : parts) {
    if (p.dim(0) != r) throw ShapeError("concat: row mismatch");
    cols += p.dim(1);
  }
  std::vector<T> v(static_cast<size_t>(r) * cols);
  int col_off = 0;
  for (const auto& p : parts) {
    const int pc = p.dim(1);
    for (int i = 0; i < r; ++i) {
      std::copy(p.values().begin() + static_cast<size_t>(i) * pc,
                p.values().begin() + static_cast<size_t>(i + 1) * pc,
                v.begin() + static_cast<size_t>(i) * cols + col_off);
    }
    col_off += pc;
  }
  std::vector<std::shared_ptr<TensorNode<T>>> nodes;
  std::vector<int> offsets;
  int off = 0;
  for (const auto& p : parts) {
    nodes.push_back(p.node());
    offsets.push_back(off);
    off += p.dim(1);
  }
  return detail::make_op<T>(
      "concat", {r, cols}, std::move(v), parts,
      [nodes, offsets, r, cols](const TensorNode<T>& self) {
        for (size_t k = 0; k < nodes.size(); ++k) {
          const auto& n = nodes[k];
          if (!n->requires_grad) continue;
          const int pc = n->shape[1];
          for (int i = 0; i < r; ++i) {
            for (int j = 0; j < pc; ++j) {
              n->grad[static_cast<size_t>(i) * pc + j] +=
                  self.grad[static_cast<size_t>(i) * cols + offsets[k] + j];
            }
          }
        }
      });
}

// ─── Softmax and normalization ───────────────────────────────────────────────

// Row-stable softmax over the last dimension.
template <typename T>
Tensor<T> softmax(const Tensor<T>& a) {
  const auto [rows, c] = detail::as_rows(a);
  std::vector<T> v(a.values());
  for (int64_t r = 0; r < rows; ++r) {
    T* row = v.data() + r * c;
    const T m = *std::max_element(row, row + c);
    T z = T(0);
    for (int j = 0; j < c; ++j) {
      row[j] = std::exp(row[j] - m);
      z += row[j];
    }
    for (int j = 0; j < c; ++j) row[j] /= z;
  }
  auto an = a.node();
  return detail::make_op<T>(
      "softmax", a.shape(), std::move(v), {a},
      [an, rows, c](const TensorNode<T>& self) {
        for (int64_t r = 0; r < rows; ++r) {
          const T* y = self.value.data() + r * c;
          const T* g = self.grad.data() + r * c;
          T dot = T(0);
          for (int j = 0; j < c; ++j) dot += g[j] * y[j];
          T* dx = an->grad.data() + r * c;
          for (int j = 0; j < c; ++j) dx[j] += y[j] * (g[j] - dot);
        }
      });
}

// Layer normalization over the last dimension with learned gain/bias.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain,
                     const Tensor<T>& bias, T eps = T(1e-5)) {
  const auto [rows, c] = detail::as_rows(x);
  if (gain.ndim() != 1 || gain.dim(0) != c || bias.ndim() != 1 ||
      bias.dim(0) != c) {
    throw ShapeError("layer_norm: gain/bias must match last dim");
  }
  std::vector<T> v(x.values().size());
  std::vector<T> mean(static_cast<size_t>(rows)), inv_std(static_cast<size_t>(rows));
  for (int64_t r = 0; r < rows; ++r) {
    const T* row = x.values().data() + r * c;
    T mu = T(0);
    for (int j = 0; j < c; ++j) mu += row[j];
    mu /= static_cast<T>(c);
    T var = T(0);
    for (int j = 0; j < c; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<T>(c);
    const T is = T(1) / std::sqrt(var + eps);
    mean[static_cast<size_t>(r)] = mu;
    inv_std[static_cast<size_t>(r)] = is;
    T* out = v.data() + r * c;
    for (int j = 0; j < c; ++j) {
      out[j] = (row[j] - mu) * is * gain.at(j) + bias.at(j);
    }
  }
  auto xn = x.node(), gn = gain.node(), bn = bias.node();
  return detail::make_op<T>(
      "layer_norm", x.shape(), std::move(v), {x, gain, bias},
      [xn, gn, bn, rows, c, mean, inv_std](const TensorNode<T>& self) {
        for (int64_t r = 0; r < rows; ++r) {
          const T* xv = xn->value.data() + r * c;
          const T* g = self.grad.data() + r * c;
          const T mu = mean[static_cast<size_t>(r)];
          const T is = inv_std[static_cast<size_t>(r)];
          // accumulate the two row sums the input gradient needs
          T sum_dxhat = T(0), sum_dxhat_xhat = T(0);
          for (int j = 0; j < c; ++j) {
            const T xhat = (xv[j] - mu) * is;
            const T dxhat = g[j] * gn->value[j];
            sum_dxhat += dxhat;
            sum_dxhat_xhat += dxhat * xhat;
            if (gn->requires_grad) gn->grad[j] += g[j] * xhat;
            if (bn->requires_grad) bn->grad[j] += g[j];
          }
          if (xn->requires_grad) {
            T* dx = xn->grad.data() + r * c;
            const T inv_c = T(1) / static_cast<T>(c);
            for (int j = 0; j < c; ++j) {
              const T xhat = (xv[j] - mu) * is;
              const T dxhat = g[j] * gn->value[j];
              dx[j] += is * (dxhat - inv_c * sum_dxhat - inv_c * xhat * sum_dxhat_xhat);
            }
          }
        }
      });
}

// ─── Structured ops ──────────────────────────────────────────────────────────

// Row lookup into an embedding table. Rows whose mask entry is zero emit a
// zero vector and receive no gradient.
template <typename T>
Tensor<T> embedding(const Tensor<T>& table, const std::vector<int>& ids,
                    const std::vector<int>& mask) {
  if (table.ndim() != 2) throw ShapeError("embedding: table must be rank-2");
  if (!mask.empty() && mask.size() != ids.size()) {
    throw ShapeError("embedding: mask/id length mismatch");
  }
  const int vocab = table.dim(0), d = table.dim(1);
  const int n = static_cast<int>(ids.size());
  std::vector<T> v(static_cast<size_t>(n) * d, T(0));
  for (int i = 0; i < n; ++i) {
    const int id = ids[i];
    if (id < 0 || id >= vocab) {
      throw IndexError("embedding: id " + std::to_string(id) +
                       " outside table of " + std::to_string(vocab));
    }
    if (!mask.empty() && mask[i] == 0) continue;
    std::copy(table.values().begin() + static_cast<size_t>(id) * d,
              table.values().begin() + static_cast<size_t>(id + 1) * d,
              v.begin() + static_cast<size_t>(i) * d);
  }
  auto tn = table.node();
  return detail::make_op<T>(
      "embedding", {n, d}, std::move(v), {table},
      [tn, ids, mask, d](const TensorNode<T>& self) {
        for (size_t i = 0; i < ids.size(); ++i) {
          if (!mask.empty() && mask[i] == 0) continue;
          const size_t dst = static_cast<size_t>(ids[i]) * d;
          const size_t src = i * d;
          for (int j = 0; j < d; ++j) tn->grad[dst + j] += self.grad[src + j];
        }
      });
}

// 1-D cross-correlation: x [C_in, T] -> [C_out, T'] with
// T' = (T + 2*padding - kernel) / stride + 1.
template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& weight,
                 const Tensor<T>& bias, int stride, int padding) {
  if (x.ndim() != 2 || weight.ndim() != 3) {
    throw ShapeError("conv1d: x must be [C_in, T], weight [C_out, C_in, K]");
  }
  const int c_in = x.dim(0), t_in = x.dim(1);
  const int c_out = weight.dim(0), k = weight.dim(2);
  if (weight.dim(1) != c_in) {
    throw ShapeError("conv1d: weight C_in mismatch");
  }
  if (bias.ndim() != 1 || bias.dim(0) != c_out) {
    throw ShapeError("conv1d: bias must be [C_out]");
  }
  if (stride <= 0 || padding < 0 || t_in + 2 * padding < k) {
    throw ShapeError("conv1d: invalid stride/padding for input length");
  }
  const int t_out = (t_in + 2 * padding - k) / stride + 1;

  // im2col: [C_in * K, T'] so the convolution is one GEMM
  const int ck = c_in * k;
  std::vector<T> col(static_cast<size_t>(ck) * t_out, T(0));
  for (int ci = 0; ci < c_in; ++ci) {
    const T* xr = x.values().data() + static_cast<size_t>(ci) * t_in;
    for (int kk = 0; kk < k; ++kk) {
      T* dst = col.data() + (static_cast<size_t>(ci) * k + kk) * t_out;
      for (int t = 0; t < t_out; ++t) {
        const int src = t * stride + kk - padding;
        if (src >= 0 && src < t_in) dst[t] = xr[src];
      }
    }
  }

  std::vector<T> v(static_cast<size_t>(c_out) * t_out);
  {
    detail::ConstMatMap<T> W(weight.values().data(), c_out, ck);
    detail::ConstMatMap<T> C(col.data(), ck, t_out);
    detail::MatMap<T> Y(v.data(), c_out, t_out);
    Y.noalias() = W * C;
    for (int co = 0; co < c_out; ++co) Y.row(co).array() += bias.at(co);
  }

  auto xn = x.node();
  auto wn = weight.node();
  auto bn = bias.node();
  const bool needs_grad =
      grad_mode() &&
      (x.requires_grad() || weight.requires_grad() || bias.requires_grad());
  // the column buffer is only retained when a backward pass can happen
  auto saved_col = needs_grad ? std::make_shared<std::vector<T>>(std::move(col))
                              : nullptr;
  return detail::make_op<T>(
      "conv1d", {c_out, t_out}, std::move(v), {x, weight, bias},
      [xn, wn, bn, saved_col, c_in, t_in, c_out, k, t_out, stride,
       padding](const TensorNode<T>& self) {
        const int ck = c_in * k;
        detail::ConstMatMap<T> G(self.grad.data(), c_out, t_out);
        if (bn->requires_grad) {
          for (int co = 0; co < c_out; ++co) {
            T s = T(0);
            const T* row = self.grad.data() + static_cast<size_t>(co) * t_out;
            for (int t = 0; t < t_out; ++t) s += row[t];
            bn->grad[co] += s;
          }
        }
        if (wn->requires_grad) {
          detail::ConstMatMap<T> C(saved_col->data(), ck, t_out);
          detail::MatMap<T> dW(wn->grad.data(), c_out, ck);
          dW.noalias() += G * C.transpose();
        }
        if (xn->requires_grad) {
          std::vector<T> dcol(static_cast<size_t>(ck) * t_out);
          detail::ConstMatMap<T> W(wn->value.data(), c_out, ck);
          detail::MatMap<T> dC(dcol.data(), ck, t_out);
          dC.noalias() = W.transpose() * G;
          for (int ci = 0; ci < c_in; ++ci) {
            T* dxr = xn->grad.data() + static_cast<size_t>(ci) * t_in;
            for (int kk = 0; kk < k; ++kk) {
              const T* src = dcol.data() + (static_cast<size_t>(ci) * k + kk) * t_out;
              for (int t = 0; t < t_out; ++t) {
                const int dst = t * stride + kk - padding;
                if (dst >= 0 && dst < t_in) dxr[dst] += src[t];
              }
            }
          }
        }
      });
}

// Inverted dropout; identity when not training or p == 0.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double p, bool training, Rng& rng) {
  if (!training || p <= 0.0) return x;
  if (p >= 1.0) throw ShapeError("dropout: rate must be in [0, 1)");
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  std::vector<T> mask(x.values().size());
  for (T& m : mask) m = rng.uniform() < p ? T(0) : keep_scale;
  std::vector<T> v(x.values());
  for (size_t i = 0; i < v.size(); ++i) v[i] *= mask[i];
  auto xn = x.node();
  return detail::make_op<T>(
      "dropout", x.shape(), std::move(v), {x},
      [xn, mask](const TensorNode<T>& self) {
        for (size_t i = 0; i < self.grad.size(); ++i) {
          xn->grad[i] += self.grad[i] * mask[i];
        }
      });
}

// y = x / s[0] with a scalar-tensor divisor.
template <typename T>
Tensor<T> div_scalar_tensor(const Tensor<T>& x, const Tensor<T>& s) {
  if (s.size() != 1) throw ShapeError("div_scalar_tensor: divisor not scalar");
  const T d = s.item();
  if (d == T(0)) throw NumericalError("div_scalar_tensor: division by zero");
  std::vector<T> v(x.values());
  for (T& e : v) e /= d;
  auto xn = x.node(), sn = s.node();
  return detail::make_op<T>(
      "div_scalar", x.shape(), std::move(v), {x, s},
      [xn, sn, d](const TensorNode<T>& self) {
        if (xn->requires_grad) {
          for (size_t i = 0; i < self.grad.size(); ++i) {
            xn->grad[i] += self.grad[i] / d;
          }
        }
        if (sn->requires_grad) {
          T acc = T(0);
          for (size_t i = 0; i < self.grad.size(); ++i) {
            acc += self.grad[i] * xn->value[i];
          }
          sn->grad[0] -= acc / (d * d);
        }
      });
}

// Class-weighted negative log-likelihood of `target` under softmax(logits).
template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, int target, T weight = T(1)) {
  const int c = static_cast<int>(logits.size());
  if (target < 0 || target >= c) {
    throw IndexError("cross_entropy: target out of range");
  }
  detail::check_finite(logits.values(), "cross_entropy(input)");
  const T m = *std::max_element(logits.values().begin(), logits.values().end());
  T z = T(0);
  for (const T l : logits.values()) z += std::exp(l - m);
  const T log_py = logits.values()[target] - m - std::log(z);
  auto ln = logits.node();
  return detail::make_op<T>(
      "cross_entropy", {1}, {-weight * log_py}, {logits},
      [ln, target, weight, m, z, c](const TensorNode<T>& self) {
        const T g = self.grad[0];
        for (int i = 0; i < c; ++i) {
          const T p = std::exp(ln->value[i] - m) / z;
          ln->grad[i] += g * weight * (p - (i == target ? T(1) : T(0)));
        }
      });
}

}  // namespace attfuse

#endif  // ATTFUSE_TENSOR_HPP_
