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

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "optim.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace dpf::nn {

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  int64_t coords_checked = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> per_param;
  double max_rel_err = 0.0;
};

/// Central finite differences against reverse-mode gradients.
///
/// `forward` must be a deterministic scalar function of the parameters in
/// `params` (it is re-evaluated many times with perturbed values). The step
/// for coordinate x is h*(1+|x|). Relative error uses the floor
/// max(|ad|, |fd|, 1e-6), which maps the both-zero case to error 0.
/// `max_coords_per_param` = 0 checks every coordinate; otherwise a seeded
/// random subset of that size per parameter tensor.
template <class S>
GradCheckReport finite_difference_check(ParameterStore<S>& params,
                                        const std::function<Tensor<S>()>& forward, double h,
                                        int64_t max_coords_per_param = 0, uint64_t seed = 0) {
  if (h <= 0) throw UsageError("finite_difference_check: h must be positive");
  // autodiff pass
  params.zero_grad();
  Tensor<S> loss = forward();
  backward(loss);
  std::vector<std::vector<S>> ad;
  ad.reserve(params.size());
  for (auto& [name, t] : params) ad.push_back(t.grad());

  auto eval = [&]() -> double {
    NoGradGuard ng;
    return static_cast<double>(forward().item());
  };

  GradCheckReport report;
  Rng rng(seed ^ 0x9d2c5680ULL);
  for (size_t pi = 0; pi < params.size(); ++pi) {
    auto& [name, t] = params[pi];
    GradCheckEntry entry;
    entry.name = name;
    int64_t n = t.numel();
    std::vector<int64_t> coords;
    if (max_coords_per_param > 0 && n > max_coords_per_param) {
      auto idx = rng.sample_without_replacement(static_cast<int>(n),
                                                static_cast<int>(max_coords_per_param));
      coords.assign(idx.begin(), idx.end());
    } else {
      coords.resize(n);
      for (int64_t i = 0; i < n; ++i) coords[i] = i;
    }
    for (int64_t c : coords) {
      S saved = t.data()[c];
      double step = h * (1.0 + std::abs(static_cast<double>(saved)));
      t.data()[c] = saved + static_cast<S>(step);
      double fp = eval();
      t.data()[c] = saved - static_cast<S>(step);
      double fm = eval();
      t.data()[c] = saved;
      double fd = (fp - fm) / (2.0 * step);
      double adv = static_cast<double>(ad[pi][c]);
      double denom = std::max({std::abs(fd), std::abs(adv), 1e-6});
      double rel = std::abs(fd - adv) / denom;
      entry.max_rel_err = std::max(entry.max_rel_err, rel);
    }
    entry.coords_checked = static_cast<int64_t>(coords.size());
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.per_param.push_back(std::move(entry));
  }
  return report;
}

}  // namespace dpf::nn
