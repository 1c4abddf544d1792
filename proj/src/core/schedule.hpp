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

#include <cstdint>
#include <string>
#include <vector>

#include "common.hpp"

namespace dpf {

enum class SigmaRule { beta, posterior };

std::string to_string(SigmaRule rule);
SigmaRule sigma_rule_from_string(const std::string& s);

/// Closed-form diffusion coefficients for T steps. Time is 1-based,
/// t in {1..T}; the internal arrays are 0-based with index t-1.
/// Immutable after construction.
struct NoiseSchedule {
  int T = 0;
  SigmaRule rule = SigmaRule::beta;
  double beta_start = 0.0, beta_end = 0.0;  // kept for serialization (linear schedule)
  std::vector<double> beta;       // per-step variance, in (0,1)
  std::vector<double> alpha;      // 1 - beta
  std::vector<double> alpha_bar;  // running product of alpha
  std::vector<double> sigma;      // sampling noise scale

  static NoiseSchedule linear(int T, double beta_start, double beta_end,
                              SigmaRule rule = SigmaRule::beta);
  static NoiseSchedule from_betas(std::vector<double> betas, SigmaRule rule = SigmaRule::beta);

  double alpha_t(int t) const { return alpha[check(t)]; }
  double alpha_bar_t(int t) const { return alpha_bar[check(t)]; }
  double beta_t(int t) const { return beta[check(t)]; }
  double sigma_t(int t) const { return sigma[check(t)]; }

private:
  int check(int t) const {
    if (t < 1 || t > T)
      throw UsageError("schedule: t=" + std::to_string(t) + " outside {1.." + std::to_string(T) + "}");
    return t - 1;
  }
};

/// Y_t = sqrt(abar_t) Y0 + sqrt(1 - abar_t) eps. Coordinates are untouched;
/// this corrupts signal blocks only.
Mat forward_diffuse(const Mat& y0, int t, const Mat& eps, const NoiseSchedule& sched);

/// One reverse-chain update:
/// Y_{t-1} = (Y_t - (1-alpha_t)/sqrt(1-abar_t) * eps_hat) / sqrt(alpha_t) + sigma_t z.
/// At t = 1 the z term is dropped regardless of its contents.
Mat ancestral_step(const Mat& yt, const Mat& eps_hat, int t, const Mat& z,
                   const NoiseSchedule& sched);

}  // namespace dpf
