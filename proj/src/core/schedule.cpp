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
#include "schedule.hpp"

#include <cmath>

namespace dpf {

std::string to_string(SigmaRule rule) {
  return rule == SigmaRule::beta ? "beta" : "posterior";
}

SigmaRule sigma_rule_from_string(const std::string& s) {
  if (s == "beta") return SigmaRule::beta;
  if (s == "posterior") return SigmaRule::posterior;
  throw UsageError("unknown sigma rule '" + s + "' (expected beta|posterior)");
}

NoiseSchedule NoiseSchedule::linear(int T, double beta_start, double beta_end, SigmaRule rule) {
  if (T < 1) throw UsageError("schedule: T must be >= 1, got " + std::to_string(T));
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
    throw UsageError("schedule: need 0 < beta_start <= beta_end < 1, got beta_start=" +
                     std::to_string(beta_start) + " beta_end=" + std::to_string(beta_end));
  std::vector<double> betas(T);
  if (T == 1) {
    betas[0] = beta_start;
  } else {
    double step = (beta_end - beta_start) / static_cast<double>(T - 1);
    for (int i = 0; i < T; ++i) betas[i] = beta_start + step * i;
  }
  NoiseSchedule s = from_betas(std::move(betas), rule);
  s.beta_start = beta_start;
  s.beta_end = beta_end;
  return s;
}

NoiseSchedule NoiseSchedule::from_betas(std::vector<double> betas, SigmaRule rule) {
  if (betas.empty()) throw UsageError("schedule: empty beta array");
  NoiseSchedule s;
  s.T = static_cast<int>(betas.size());
  s.rule = rule;
  s.beta = std::move(betas);
  s.beta_start = s.beta.front();
  s.beta_end = s.beta.back();
  s.alpha.resize(s.T);
  s.alpha_bar.resize(s.T);
  s.sigma.resize(s.T);
  double running = 1.0;
  for (int i = 0; i < s.T; ++i) {
    double b = s.beta[i];
    if (!(b > 0.0 && b < 1.0))
      throw UsageError("schedule: beta[" + std::to_string(i) + "]=" + std::to_string(b) +
                       " outside (0,1)");
    s.alpha[i] = 1.0 - b;
    double prev = running;
    running *= s.alpha[i];
    s.alpha_bar[i] = running;
    if (rule == SigmaRule::beta) {
      s.sigma[i] = std::sqrt(b);
    } else {
      // posterior variance beta_tilde = (1 - abar_{t-1}) / (1 - abar_t) * beta_t, abar_0 = 1
      double prev_bar = (i == 0) ? 1.0 : prev;
      s.sigma[i] = std::sqrt((1.0 - prev_bar) / (1.0 - running) * b);
    }
  }
  return s;
}

Mat forward_diffuse(const Mat& y0, int t, const Mat& eps, const NoiseSchedule& sched) {
  require_same_shape(y0, eps, "forward_diffuse");
  double ab = sched.alpha_bar_t(t);
  double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
  Mat out(y0.rows, y0.cols);
  for (size_t i = 0; i < out.size(); ++i) out.v[i] = a * y0.v[i] + b * eps.v[i];
  return out;
}

Mat ancestral_step(const Mat& yt, const Mat& eps_hat, int t, const Mat& z,
                   const NoiseSchedule& sched) {
  require_same_shape(yt, eps_hat, "ancestral_step");
  double a = sched.alpha_t(t);
  double ab = sched.alpha_bar_t(t);
  double coef = (1.0 - a) / std::sqrt(1.0 - ab);
  double inv_sqrt_a = 1.0 / std::sqrt(a);
  double noise = (t > 1) ? sched.sigma_t(t) : 0.0;
  if (noise != 0.0) require_same_shape(yt, z, "ancestral_step(z)");
  Mat out(yt.rows, yt.cols);
  for (size_t i = 0; i < out.size(); ++i) {
    double v = inv_sqrt_a * (yt.v[i] - coef * eps_hat.v[i]);
    if (noise != 0.0) v += noise * z.v[i];
    out.v[i] = v;
  }
  return out;
}

}  // namespace dpf
