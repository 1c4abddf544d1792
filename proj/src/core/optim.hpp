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

#include <cmath>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tensor.hpp"

namespace dpf::nn {

/// Named trainable tensors with stable (insertion) iteration order.
/// Checkpoint bit-exactness depends on that order, so it is never re-sorted.
template <class S>
class ParameterStore {
public:
  Tensor<S> add(const std::string& name, Tensor<S> t) {
    if (index_.count(name)) throw UsageError("parameter '" + name + "' already registered");
    if (!t.requires_grad()) throw UsageError("parameter '" + name + "' must require grad");
    index_[name] = items_.size();
    items_.emplace_back(name, t);
    return t;
  }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  Tensor<S>& get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw UsageError("unknown parameter '" + name + "'");
    return items_[it->second].second;
  }

  size_t size() const { return items_.size(); }
  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }
  std::pair<std::string, Tensor<S>>& operator[](size_t i) { return items_[i]; }
  const std::pair<std::string, Tensor<S>>& operator[](size_t i) const { return items_[i]; }

  void zero_grad() {
    for (auto& [name, t] : items_) t.zero_grad();
  }

  int64_t param_count() const {
    int64_t n = 0;
    for (const auto& [name, t] : items_) n += t.numel();
    return n;
  }

private:
  std::vector<std::pair<std::string, Tensor<S>>> items_;
  std::unordered_map<std::string, size_t> index_;
};

/// Global-norm gradient clipping. Returns the pre-clip norm.
template <class S>
double clip_grad_norm(ParameterStore<S>& params, double max_norm) {
  double sq = 0;
  for (auto& [name, t] : params)
    for (S g : t.grad()) sq += static_cast<double>(g) * static_cast<double>(g);
  double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    S s = static_cast<S>(max_norm / norm);
    for (auto& [name, t] : params)
      for (S& g : t.grad()) g *= s;
  }
  return norm;
}

/// Adam with bias correction. Moment buffers are laid out parallel to the
/// store's iteration order.
template <class S>
class Adam {
public:
  struct Hyper {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  Adam() = default;
  Adam(const ParameterStore<S>& params, Hyper hp) : hp_(hp) { attach(params); }

  void attach(const ParameterStore<S>& params) {
    m_.clear();
    v_.clear();
    for (const auto& [name, t] : params) {
      m_.emplace_back(t.numel(), S(0));
      v_.emplace_back(t.numel(), S(0));
    }
    step_ = 0;
  }

  void update(ParameterStore<S>& params) {
    if (m_.size() != params.size()) throw UsageError("adam: state does not match parameter store");
    ++step_;
    const S b1 = static_cast<S>(hp_.beta1), b2 = static_cast<S>(hp_.beta2);
    const S c1 = static_cast<S>(1.0 - std::pow(hp_.beta1, static_cast<double>(step_)));
    const S c2 = static_cast<S>(1.0 - std::pow(hp_.beta2, static_cast<double>(step_)));
    const S lr = static_cast<S>(hp_.lr), eps = static_cast<S>(hp_.eps);
    for (size_t i = 0; i < params.size(); ++i) {
      auto& t = params[i].second;
      if (!t.grad_populated())
        throw UsageError("adam: gradient for '" + params[i].first + "' not populated");
      S* x = t.data();
      const S* g = t.grad().data();
      S* m = m_[i].data();
      S* v = v_[i].data();
      for (int64_t j = 0; j < t.numel(); ++j) {
        m[j] = b1 * m[j] + (S(1) - b1) * g[j];
        v[j] = b2 * v[j] + (S(1) - b2) * g[j] * g[j];
        S mh = m[j] / c1;
        S vh = v[j] / c2;
        x[j] -= lr * mh / (std::sqrt(vh) + eps);
      }
    }
  }

  const Hyper& hyper() const { return hp_; }
  Hyper& hyper() { return hp_; }
  int64_t step_count() const { return step_; }

  // checkpoint access
  std::vector<std::vector<S>>& first_moments() { return m_; }
  std::vector<std::vector<S>>& second_moments() { return v_; }
  const std::vector<std::vector<S>>& first_moments() const { return m_; }
  const std::vector<std::vector<S>>& second_moments() const { return v_; }
  void set_step_count(int64_t s) { step_ = s; }

private:
  Hyper hp_;
  int64_t step_ = 0;
  std::vector<std::vector<S>> m_, v_;
};

}  // namespace dpf::nn
