/*
 * Copyright 2026 the dpf authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <Eigen/Core>
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

#include "common.hpp"

// Dense n-d tensors with reverse-mode autodiff on a dynamic per-forward tape.
// Values default to float for training throughput; every op is templated so
// the verification harness can run the identical graph in double precision.
// Inner matmul kernels are delegated to Eigen; everything recorded on the
// tape, including all backward rules, is owned here.

namespace dpf::nn {

using Shape = std::vector<int>;

inline int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

inline std::string to_string(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) out += (i ? "x" : "") + std::to_string(s[i]);
  return out + "]";
}

// Tape recording is a thread-local mode so inference paths (sampling, finite
// differences) run without building graphs.
inline bool& grad_mode() {
  thread_local bool enabled = true;
  return enabled;
}

struct NoGradGuard {
  bool prev;
  NoGradGuard() : prev(grad_mode()) { grad_mode() = false; }
  ~NoGradGuard() { grad_mode() = prev; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

template <class S>
struct Node {
  Shape shape;
  std::vector<S> x;  // value, row-major
  std::vector<S> g;  // gradient; empty until ensure_grad()
  bool needs_grad = false;
  std::vector<std::shared_ptr<Node<S>>> parents;
  std::function<void()> pull;  // accumulates this->g into parents' g

  void ensure_grad() {
    if (g.size() != x.size()) g.assign(x.size(), S(0));
  }
};

template <class S>
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node<S>> n) : n_(std::move(n)) {}

  static Tensor leaf(Shape shape, std::vector<S> data, bool requires_grad = false) {
    if (shape_numel(shape) != static_cast<int64_t>(data.size()))
      throw UsageError("tensor: shape " + to_string(shape) + " does not match data length " +
                       std::to_string(data.size()));
    auto n = std::make_shared<Node<S>>();
    n->shape = std::move(shape);
    n->x = std::move(data);
    n->needs_grad = requires_grad;
    return Tensor(n);
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    std::vector<S> d(static_cast<size_t>(shape_numel(shape)), S(0));
    return leaf(std::move(shape), std::move(d), requires_grad);
  }

  bool defined() const { return n_ != nullptr; }
  const Shape& shape() const { return n_->shape; }
  int dim(int i) const { return n_->shape[i]; }
  int rank() const { return static_cast<int>(n_->shape.size()); }
  int64_t numel() const { return static_cast<int64_t>(n_->x.size()); }
  bool requires_grad() const { return n_->needs_grad; }

  S* data() { return n_->x.data(); }
  const S* data() const { return n_->x.data(); }
  std::vector<S>& values() { return n_->x; }
  const std::vector<S>& values() const { return n_->x; }

  /// Gradient buffer; sized on demand so leaves always expose a zero grad.
  std::vector<S>& grad() {
    n_->ensure_grad();
    return n_->g;
  }
  bool grad_populated() const { return n_->g.size() == n_->x.size(); }
  void zero_grad() {
    n_->g.assign(n_->x.size(), S(0));
  }

  S item() const {
    if (numel() != 1) throw UsageError("item: tensor " + to_string(shape()) + " is not scalar");
    return n_->x[0];
  }

  bool all_finite() const {
    for (S v : n_->x)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  std::shared_ptr<Node<S>> node() const { return n_; }

private:
  std::shared_ptr<Node<S>> n_;
};

namespace detail {

template <class S>
using EMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using EMap = Eigen::Map<EMat<S>>;
template <class S>
using ECMap = Eigen::Map<const EMat<S>>;

template <class S, class F>
Tensor<S> make_op(Shape shape, std::vector<S> value, std::vector<Tensor<S>> inputs, F&& backward) {
  auto n = std::make_shared<Node<S>>();
  n->shape = std::move(shape);
  n->x = std::move(value);
  bool track = grad_mode();
  bool any = false;
  if (track)
    for (const auto& t : inputs) any = any || t.node()->needs_grad;
  if (track && any) {
    n->needs_grad = true;
    for (const auto& t : inputs) n->parents.push_back(t.node());
    n->pull = [fn = std::forward<F>(backward), raw = n.get()]() { fn(*raw); };
  }
  return Tensor<S>(n);
}

inline void check_rank2(const Shape& s, const char* op) {
  if (s.size() != 2) throw UsageError(std::string(op) + ": expected rank-2 tensor, got " + to_string(s));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise ops

template <class S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.shape() != b.shape())
    throw UsageError("add: shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  std::vector<S> out(a.values());
  for (size_t i = 0; i < out.size(); ++i) out[i] += b.data()[i];
  auto an = a.node(), bn = b.node();
  return detail::make_op<S>(a.shape(), std::move(out), {a, b}, [an, bn](Node<S>& n) {
    if (an->needs_grad) {
      an->ensure_grad();
      for (size_t i = 0; i < n.g.size(); ++i) an->g[i] += n.g[i];
    }
    if (bn->needs_grad) {
      bn->ensure_grad();
      for (size_t i = 0; i < n.g.size(); ++i) bn->g[i] += n.g[i];
    }
  });
}

template <class S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.shape() != b.shape())
    throw UsageError("sub: shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  std::vector<S> out(a.values());
  for (size_t i = 0; i < out.size(); ++i) out[i] -= b.data()[i];
  auto an = a.node(), bn = b.node();
  return detail::make_op<S>(a.shape(), std::move(out), {a, b}, [an, bn](Node<S>& n) {
    if (an->needs_grad) {
      an->ensure_grad();
      for (size_t i = 0; i < n.g.size(); ++i) an->g[i] += n.g[i];
    }
    if (bn->needs_grad) {
      bn->ensure_grad();
      for (size_t i = 0; i < n.g.size(); ++i) bn->g[i] -= n.g[i];
    }
  });
}

template <class S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.shape() != b.shape())
    throw UsageError("mul: shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  std::vector<S> out(a.values());
  for (size_t i = 0; i < out.size(); ++i) out[i] *= b.data()[i];
  auto an = a.node(), bn = b.node();
  return detail::make_op<S>(a.shape(), std::move(out), {a, b}, [an, bn](Node<S>& n) {
    if (an->needs_grad) {
      an->ensure_grad();
      for (size_t i = 0; i < n.g.size(); ++i) an->g[i] += n.g[i] * bn->x[i];
    }
    if (bn->needs_grad) {
      bn->ensure_grad();
      for (size_t i = 0; i < n.g.size(); ++i) bn->g[i] += n.g[i] * an->x[i];
    }
  });
}

template <class S>
Tensor<S> scale(const Tensor<S>& a, S c) {
  std::vector<S> out(a.values());
  for (auto& v : out) v *= c;
  auto an = a.node();
  return detail::make_op<S>(a.shape(), std::move(out), {a}, [an, c](Node<S>& n) {
    if (!an->needs_grad) return;
    an->ensure_grad();
    for (size_t i = 0; i < n.g.size(); ++i) an->g[i] += c * n.g[i];
  });
}

/// x:[...xd] + b:[d], broadcast over all leading rows. The one documented
/// broadcast in the op set; everything else requires exact shape equality.
template <class S>
Tensor<S> add_bias(const Tensor<S>& x, const Tensor<S>& b) {
  if (b.rank() != 1 || x.rank() < 1 || x.shape().back() != b.dim(0))
    throw UsageError("add_bias: bias " + to_string(b.shape()) + " does not match last axis of " +
                     to_string(x.shape()));
  int d = b.dim(0);
  int64_t rows = x.numel() / d;
  std::vector<S> out(x.values());
  for (int64_t r = 0; r < rows; ++r)
    for (int j = 0; j < d; ++j) out[r * d + j] += b.data()[j];
  auto xn = x.node(), bn = b.node();
  return detail::make_op<S>(x.shape(), std::move(out), {x, b}, [xn, bn, rows, d](Node<S>& n) {
    if (xn->needs_grad) {
      xn->ensure_grad();
      for (size_t i = 0; i < n.g.size(); ++i) xn->g[i] += n.g[i];
    }
    if (bn->needs_grad) {
      bn->ensure_grad();
      for (int64_t r = 0; r < rows; ++r)
        for (int j = 0; j < d; ++j) bn->g[j] += n.g[r * d + j];
    }
  });
}

template <class S>
Tensor<S> gelu(const Tensor<S>& a) {
  // tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))
  const S k = static_cast<S>(0.7978845608028654);  // sqrt(2/pi)
  const S c3 = static_cast<S>(0.044715);
  std::vector<S> out(a.values().size());
  for (size_t i = 0; i < out.size(); ++i) {
    S x = a.data()[i];
    out[i] = S(0.5) * x * (S(1) + std::tanh(k * (x + c3 * x * x * x)));
  }
  auto an = a.node();
  return detail::make_op<S>(a.shape(), std::move(out), {a}, [an, k, c3](Node<S>& n) {
    if (!an->needs_grad) return;
    an->ensure_grad();
    for (size_t i = 0; i < n.g.size(); ++i) {
      S x = an->x[i];
      S u = k * (x + c3 * x * x * x);
      S t = std::tanh(u);
      S sech2 = S(1) - t * t;
      S d = S(0.5) * (S(1) + t) + S(0.5) * x * sech2 * k * (S(1) + S(3) * c3 * x * x);
      an->g[i] += n.g[i] * d;
    }
  });
}

// ---------------------------------------------------------------------------
// matmul / transpose

/// Standard matrix product. Rank-2 x rank-2, or batched rank-3 x rank-3 with
/// identical leading dimension (per-batch 2-d products).
template <class S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  auto mismatch = [&]() {
    return UsageError("matmul: incompatible shapes " + to_string(sa) + " and " + to_string(sb));
  };
  int batch = 1, m, k, n;
  if (sa.size() == 2 && sb.size() == 2) {
    m = sa[0]; k = sa[1]; n = sb[1];
    if (sb[0] != k) throw mismatch();
  } else if (sa.size() == 3 && sb.size() == 3) {
    if (sa[0] != sb[0]) throw mismatch();
    batch = sa[0]; m = sa[1]; k = sa[2]; n = sb[2];
    if (sb[1] != k) throw mismatch();
  } else {
    throw mismatch();
  }
  Shape os = (batch == 1 && sa.size() == 2) ? Shape{m, n} : Shape{batch, m, n};
  std::vector<S> out(static_cast<size_t>(batch) * m * n);
  for (int i = 0; i < batch; ++i) {
    detail::ECMap<S> A(a.data() + static_cast<int64_t>(i) * m * k, m, k);
    detail::ECMap<S> B(b.data() + static_cast<int64_t>(i) * k * n, k, n);
    detail::EMap<S> C(out.data() + static_cast<int64_t>(i) * m * n, m, n);
    C.noalias() = A * B;
  }
  auto an = a.node(), bn = b.node();
  return detail::make_op<S>(std::move(os), std::move(out), {a, b},
                            [an, bn, batch, m, k, n](Node<S>& nd) {
    for (int i = 0; i < batch; ++i) {
      detail::ECMap<S> A(an->x.data() + static_cast<int64_t>(i) * m * k, m, k);
      detail::ECMap<S> B(bn->x.data() + static_cast<int64_t>(i) * k * n, k, n);
      detail::ECMap<S> G(nd.g.data() + static_cast<int64_t>(i) * m * n, m, n);
      if (an->needs_grad) {
        an->ensure_grad();
        detail::EMap<S> dA(an->g.data() + static_cast<int64_t>(i) * m * k, m, k);
        dA.noalias() += G * B.transpose();
      }
      if (bn->needs_grad) {
        bn->ensure_grad();
        detail::EMap<S> dB(bn->g.data() + static_cast<int64_t>(i) * k * n, k, n);
        dB.noalias() += A.transpose() * G;
      }
    }
  });
}

template <class S>
Tensor<S> transpose(const Tensor<S>& a) {
  detail::check_rank2(a.shape(), "transpose");
  int r = a.dim(0), c = a.dim(1);
  std::vector<S> out(a.values().size());
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out[static_cast<size_t>(j) * r + i] = a.data()[static_cast<size_t>(i) * c + j];
  auto an = a.node();
  return detail::make_op<S>({c, r}, std::move(out), {a}, [an, r, c](Node<S>& n) {
    if (!an->needs_grad) return;
    an->ensure_grad();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j)
        an->g[static_cast<size_t>(i) * c + j] += n.g[static_cast<size_t>(j) * r + i];
  });
}

// ---------------------------------------------------------------------------
// softmax / layer norm

/// Softmax along `axis` (negative counts from the end), stabilized by
/// max-subtraction.
template <class S>
Tensor<S> softmax(const Tensor<S>& a, int axis) {
  int rank = a.rank();
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank)
    throw UsageError("softmax: axis " + std::to_string(axis) + " invalid for " + to_string(a.shape()));
  int64_t n = a.shape()[axis];
  int64_t inner = 1, outer = 1;
  for (int i = axis + 1; i < rank; ++i) inner *= a.shape()[i];
  for (int i = 0; i < axis; ++i) outer *= a.shape()[i];
  std::vector<S> out(a.values().size());
  const S* src = a.data();
  for (int64_t o = 0; o < outer; ++o)
    for (int64_t in = 0; in < inner; ++in) {
      const S* s = src + o * n * inner + in;
      S* d = out.data() + o * n * inner + in;
      S mx = s[0];
      for (int64_t i = 1; i < n; ++i) mx = std::max(mx, s[i * inner]);
      S sum = 0;
      for (int64_t i = 0; i < n; ++i) {
        S e = std::exp(s[i * inner] - mx);
        d[i * inner] = e;
        sum += e;
      }
      S inv = S(1) / sum;
      for (int64_t i = 0; i < n; ++i) d[i * inner] *= inv;
    }
  auto an = a.node();
  return detail::make_op<S>(a.shape(), std::move(out), {a}, [an, n, inner, outer](Node<S>& nd) {
    if (!an->needs_grad) return;
    an->ensure_grad();
    for (int64_t o = 0; o < outer; ++o)
      for (int64_t in = 0; in < inner; ++in) {
        const S* y = nd.x.data() + o * n * inner + in;
        const S* g = nd.g.data() + o * n * inner + in;
        S* dst = an->g.data() + o * n * inner + in;
        S dot = 0;
        for (int64_t i = 0; i < n; ++i) dot += g[i * inner] * y[i * inner];
        for (int64_t i = 0; i < n; ++i) dst[i * inner] += y[i * inner] * (g[i * inner] - dot);
      }
  });
}

/// Per-row normalization over the last axis followed by the affine map
/// gain * x_hat + bias. Variance is the population variance; eps keeps the
/// zero-variance row defined.
template <class S>
Tensor<S> layer_normalize(const Tensor<S>& x, const Tensor<S>& gain, const Tensor<S>& bias, S eps) {
  int d = x.shape().back();
  if (gain.rank() != 1 || gain.dim(0) != d || bias.rank() != 1 || bias.dim(0) != d)
    throw UsageError("layer_normalize: gain/bias must be [" + std::to_string(d) + "], got " +
                     to_string(gain.shape()) + " and " + to_string(bias.shape()));
  int64_t rows = x.numel() / d;
  std::vector<S> out(x.values().size());
  std::vector<S> inv_sd(rows), means(rows);
  for (int64_t r = 0; r < rows; ++r) {
    const S* s = x.data() + r * d;
    S mean = 0;
    for (int j = 0; j < d; ++j) mean += s[j];
    mean /= static_cast<S>(d);
    S var = 0;
    for (int j = 0; j < d; ++j) var += (s[j] - mean) * (s[j] - mean);
    var /= static_cast<S>(d);
    S inv = S(1) / std::sqrt(var + eps);
    means[r] = mean;
    inv_sd[r] = inv;
    S* o = out.data() + r * d;
    for (int j = 0; j < d; ++j) o[j] = gain.data()[j] * ((s[j] - mean) * inv) + bias.data()[j];
  }
  auto xn = x.node(), gn = gain.node(), bn = bias.node();
  return detail::make_op<S>(
      x.shape(), std::move(out), {x, gain, bias},
      [xn, gn, bn, rows, d, ms = std::move(means), is = std::move(inv_sd)](Node<S>& nd) {
        for (int64_t r = 0; r < rows; ++r) {
          const S* xi = xn->x.data() + r * d;
          const S* g = nd.g.data() + r * d;
          S mean = ms[r], inv = is[r];
          if (gn->needs_grad || bn->needs_grad) {
            if (gn->needs_grad) gn->ensure_grad();
            if (bn->needs_grad) bn->ensure_grad();
            for (int j = 0; j < d; ++j) {
              if (gn->needs_grad) gn->g[j] += g[j] * ((xi[j] - mean) * inv);
              if (bn->needs_grad) bn->g[j] += g[j];
            }
          }
          if (xn->needs_grad) {
            xn->ensure_grad();
            S* dx = xn->g.data() + r * d;
            // dxhat = g * gain; dx = inv*(dxhat - mean(dxhat) - xhat*mean(dxhat*xhat))
            S m1 = 0, m2 = 0;
            for (int j = 0; j < d; ++j) {
              S xhat = (xi[j] - mean) * inv;
              S dxh = g[j] * gn->x[j];
              m1 += dxh;
              m2 += dxh * xhat;
            }
            m1 /= static_cast<S>(d);
            m2 /= static_cast<S>(d);
            for (int j = 0; j < d; ++j) {
              S xhat = (xi[j] - mean) * inv;
              S dxh = g[j] * gn->x[j];
              dx[j] += inv * (dxh - m1 - xhat * m2);
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// reductions / reshaping of rows and columns

template <class S>
Tensor<S> sum_all(const Tensor<S>& a) {
  S s = 0;
  for (S v : a.values()) s += v;
  auto an = a.node();
  return detail::make_op<S>({1}, std::vector<S>{s}, {a}, [an](Node<S>& n) {
    if (!an->needs_grad) return;
    an->ensure_grad();
    for (auto& gv : an->g) gv += n.g[0];
  });
}

template <class S>
Tensor<S> mean_all(const Tensor<S>& a) {
  S s = 0;
  for (S v : a.values()) s += v;
  S inv = S(1) / static_cast<S>(a.numel());
  auto an = a.node();
  return detail::make_op<S>({1}, std::vector<S>{s * inv}, {a}, [an, inv](Node<S>& n) {
    if (!an->needs_grad) return;
    an->ensure_grad();
    for (auto& gv : an->g) gv += n.g[0] * inv;
  });
}

/// [n x d] -> [1 x d] column means.
template <class S>
Tensor<S> mean_rows(const Tensor<S>& a) {
  detail::check_rank2(a.shape(), "mean_rows");
  int n = a.dim(0), d = a.dim(1);
  std::vector<S> out(d, S(0));
  for (int r = 0; r < n; ++r)
    for (int j = 0; j < d; ++j) out[j] += a.data()[static_cast<size_t>(r) * d + j];
  S inv = S(1) / static_cast<S>(n);
  for (auto& v : out) v *= inv;
  auto an = a.node();
  return detail::make_op<S>({1, d}, std::move(out), {a}, [an, n, d, inv](Node<S>& nd) {
    if (!an->needs_grad) return;
    an->ensure_grad();
    for (int r = 0; r < n; ++r)
      for (int j = 0; j < d; ++j) an->g[static_cast<size_t>(r) * d + j] += nd.g[j] * inv;
  });
}

/// [1 x d] -> [n x d] row replication.
template <class S>
Tensor<S> tile_rows(const Tensor<S>& a, int n) {
  detail::check_rank2(a.shape(), "tile_rows");
  if (a.dim(0) != 1) throw UsageError("tile_rows: expected [1 x d], got " + to_string(a.shape()));
  int d = a.dim(1);
  std::vector<S> out(static_cast<size_t>(n) * d);
  for (int r = 0; r < n; ++r)
    std::copy(a.data(), a.data() + d, out.begin() + static_cast<size_t>(r) * d);
  auto an = a.node();
  return detail::make_op<S>({n, d}, std::move(out), {a}, [an, n, d](Node<S>& nd) {
    if (!an->needs_grad) return;
    an->ensure_grad();
    for (int r = 0; r < n; ++r)
      for (int j = 0; j < d; ++j) an->g[j] += nd.g[static_cast<size_t>(r) * d + j];
  });
}

template <class S>
Tensor<S> slice_cols(const Tensor<S>& a, int c0, int len) {
  detail::check_rank2(a.shape(), "slice_cols");
  int n = a.dim(0), d = a.dim(1);
  if (c0 < 0 || len < 1 || c0 + len > d)
    throw UsageError("slice_cols: range [" + std::to_string(c0) + ", " + std::to_string(c0 + len) +
                     ") out of bounds for " + to_string(a.shape()));
  std::vector<S> out(static_cast<size_t>(n) * len);
  for (int r = 0; r < n; ++r)
    std::copy(a.data() + static_cast<size_t>(r) * d + c0, a.data() + static_cast<size_t>(r) * d + c0 + len,
              out.begin() + static_cast<size_t>(r) * len);
  auto an = a.node();
  return detail::make_op<S>({n, len}, std::move(out), {a}, [an, n, d, c0, len](Node<S>& nd) {
    if (!an->needs_grad) return;
    an->ensure_grad();
    for (int r = 0; r < n; ++r)
      for (int j = 0; j < len; ++j)
        an->g[static_cast<size_t>(r) * d + c0 + j] += nd.g[static_cast<size_t>(r) * len + j];
  });
}

template <class S>
Tensor<S> concat_cols(const std::vector<Tensor<S>>& parts) {
  if (parts.empty()) throw UsageError("concat_cols: no inputs");
  int n = parts[0].dim(0), total = 0;
  for (const auto& p : parts) {
    detail::check_rank2(p.shape(), "concat_cols");
    if (p.dim(0) != n)
      throw UsageError("concat_cols: row mismatch " + to_string(parts[0].shape()) + " vs " +
                       to_string(p.shape()));
    total += p.dim(1);
  }
  std::vector<S> out(static_cast<size_t>(n) * total);
  int off = 0;
  for (const auto& p : parts) {
    int d = p.dim(1);
    for (int r = 0; r < n; ++r)
      std::copy(p.data() + static_cast<size_t>(r) * d, p.data() + static_cast<size_t>(r) * d + d,
                out.begin() + static_cast<size_t>(r) * total + off);
    off += d;
  }
  std::vector<std::shared_ptr<Node<S>>> nodes;
  std::vector<int> widths;
  for (const auto& p : parts) {
    nodes.push_back(p.node());
    widths.push_back(p.dim(1));
  }
  return detail::make_op<S>({n, total}, std::move(out), parts,
                            [nodes, widths, n, total](Node<S>& nd) {
    int off = 0;
    for (size_t pi = 0; pi < nodes.size(); ++pi) {
      int d = widths[pi];
      auto& pn = nodes[pi];
      if (pn->needs_grad) {
        pn->ensure_grad();
        for (int r = 0; r < n; ++r)
          for (int j = 0; j < d; ++j)
            pn->g[static_cast<size_t>(r) * d + j] += nd.g[static_cast<size_t>(r) * total + off + j];
      }
      off += d;
    }
  });
}

// ---------------------------------------------------------------------------
// backward

/// Reverse-mode sweep from a scalar loss. Topological order is derived from
/// the recorded parent edges; grads accumulate into every reachable tensor
/// with needs_grad set. Unreachable parameters keep their (zeroed) grads.
template <class S>
void backward(const Tensor<S>& loss) {
  if (loss.numel() != 1)
    throw UsageError("backward: loss must be scalar, got " + to_string(loss.shape()));
  // iterative post-order DFS over parent edges
  std::vector<Node<S>*> order;
  std::unordered_set<Node<S>*> seen;
  std::vector<std::pair<Node<S>*, size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node<S>* p = node->parents[idx++].get();
      if (p->needs_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  loss.node()->ensure_grad();
  loss.node()->g[0] = S(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->pull) (*it)->pull();
}

}  // namespace dpf::nn
