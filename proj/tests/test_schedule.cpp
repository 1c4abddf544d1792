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
#include <doctest.h>

#include <cmath>

#include "rng.hpp"
#include "schedule.hpp"

using namespace dpf;

TEST_CASE("single-step schedule") {
  auto s = NoiseSchedule::linear(1, 0.3, 0.3);
  CHECK(s.T == 1);
  CHECK(s.alpha_bar_t(1) == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(s.sigma_t(1) == doctest::Approx(std::sqrt(0.3)).epsilon(1e-15));
}

TEST_CASE("default schedule against an independent cumulative-product loop") {
  auto s = NoiseSchedule::linear(1000, 1e-4, 0.02);
  CHECK(s.alpha_bar_t(1) == doctest::Approx(0.9999).epsilon(1e-12));

  // scalar loop oracle, written without the schedule code paths
  double prod = 1.0;
  for (int i = 0; i < 1000; ++i) prod *= 1.0 - (1e-4 + (0.02 - 1e-4) * i / 999.0);
  CHECK(s.alpha_bar_t(1000) == doctest::Approx(prod).epsilon(1e-12));
  CHECK(prod > 1e-6);
  CHECK(prod < 1e-4);  // order 1e-5
}

TEST_CASE("schedule contract violations") {
  CHECK_THROWS_AS(NoiseSchedule::linear(1000, 0.02, 1e-4), UsageError);
  CHECK_THROWS_AS(NoiseSchedule::linear(0, 1e-4, 0.02), UsageError);
  CHECK_THROWS_AS(NoiseSchedule::linear(10, 0.0, 0.02), UsageError);
  CHECK_THROWS_AS(NoiseSchedule::from_betas({0.5, 1.0}), UsageError);
  auto s = NoiseSchedule::linear(10, 1e-4, 0.02);
  CHECK_THROWS_AS(s.alpha_t(0), UsageError);
  CHECK_THROWS_AS(s.alpha_t(11), UsageError);
}

TEST_CASE("alpha_bar recurrence holds exactly and decreases strictly") {
  auto s = NoiseSchedule::linear(500, 1e-4, 0.05);
  for (int t = 2; t <= s.T; ++t) {
    CHECK(s.alpha_bar_t(t) == s.alpha_bar_t(t - 1) * s.alpha_t(t));
    CHECK(s.alpha_bar_t(t) < s.alpha_bar_t(t - 1));
  }
  for (int t = 1; t <= s.T; ++t) {
    CHECK(s.beta_t(t) > 0.0);
    CHECK(s.beta_t(t) < 1.0);
    CHECK(s.sigma_t(t) * s.sigma_t(t) == doctest::Approx(s.beta_t(t)).epsilon(1e-12));
  }
}

TEST_CASE("posterior sigma rule") {
  auto s = NoiseSchedule::linear(100, 1e-3, 0.05, SigmaRule::posterior);
  CHECK(s.sigma_t(1) == 0.0);  // abar_0 = 1
  for (int t = 2; t <= s.T; ++t) {
    double expect = (1.0 - s.alpha_bar_t(t - 1)) / (1.0 - s.alpha_bar_t(t)) * s.beta_t(t);
    CHECK(s.sigma_t(t) * s.sigma_t(t) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(s.sigma_t(t) * s.sigma_t(t) < s.beta_t(t));  // beta_tilde < beta
  }
}

TEST_CASE("forward_diffuse direct arithmetic") {
  // abar_1 = 0.25
  auto s = NoiseSchedule::from_betas({0.75});
  Mat y0(1, 1), eps(1, 1);
  y0(0, 0) = 1.0;
  eps(0, 0) = 1.0;
  Mat yt = forward_diffuse(y0, 1, eps, s);
  CHECK(yt(0, 0) == doctest::Approx(0.5 + std::sqrt(0.75)).epsilon(1e-12));
}

TEST_CASE("forward_diffuse with abar near one is a no-op") {
  auto s = NoiseSchedule::from_betas({1e-12});
  Mat y0(2, 1), eps(2, 1);
  y0(0, 0) = 0.4;
  y0(1, 0) = -0.9;
  eps(0, 0) = 3.0;
  eps(1, 0) = -2.0;
  Mat yt = forward_diffuse(y0, 1, eps, s);
  CHECK(yt(0, 0) == doctest::Approx(0.4).epsilon(1e-5));
  CHECK(yt(1, 0) == doctest::Approx(-0.9).epsilon(1e-5));
}

TEST_CASE("forward_diffuse rejects bad arguments") {
  auto s = NoiseSchedule::linear(10, 1e-4, 0.02);
  Mat y0(2, 1), eps(3, 1);
  CHECK_THROWS_AS(forward_diffuse(y0, 1, eps, s), UsageError);
  Mat ok(2, 1);
  CHECK_THROWS_AS(forward_diffuse(y0, 0, ok, s), UsageError);
  CHECK_THROWS_AS(forward_diffuse(y0, 11, ok, s), UsageError);
}

TEST_CASE("forward marginal moments match the closed form (Monte Carlo)") {
  auto s = NoiseSchedule::linear(100, 1e-3, 0.05);
  const int t = 60;
  const int draws = 20000;
  Mat y0(1, 1);
  y0(0, 0) = 0.7;
  Rng rng(123);
  double s1 = 0, s2 = 0;
  for (int d = 0; d < draws; ++d) {
    Mat eps(1, 1);
    eps(0, 0) = rng.gaussian();
    double v = forward_diffuse(y0, t, eps, s)(0, 0);
    s1 += v;
    s2 += v * v;
  }
  double mean = s1 / draws;
  double var = s2 / draws - mean * mean;
  double ab = s.alpha_bar_t(t);
  double se_mean = std::sqrt((1.0 - ab) / draws);
  double se_var = (1.0 - ab) * std::sqrt(2.0 / (draws - 1));
  CHECK(std::abs(mean - std::sqrt(ab) * 0.7) < 4 * se_mean);
  CHECK(std::abs(var - (1.0 - ab)) < 4 * se_var);
}

TEST_CASE("stepwise composition of single-step corruptions reproduces 1 - alpha_bar") {
  // Chain T single-step corruptions with per-step beta_t and compare the
  // realized variance with the closed-form marginal at t = T.
  auto s = NoiseSchedule::linear(10, 0.01, 0.2);
  const int draws = 20000;
  Rng rng(321);
  double s1 = 0, s2 = 0;
  for (int d = 0; d < draws; ++d) {
    double y = 0.5;  // fixed y0
    for (int t = 1; t <= s.T; ++t) {
      auto single = NoiseSchedule::from_betas({s.beta_t(t)});
      Mat ym(1, 1), eps(1, 1);
      ym(0, 0) = y;
      eps(0, 0) = rng.gaussian();
      y = forward_diffuse(ym, 1, eps, single)(0, 0);
    }
    s1 += y;
    s2 += y * y;
  }
  double mean = s1 / draws;
  double var = s2 / draws - mean * mean;
  double ab = s.alpha_bar_t(s.T);
  CHECK(std::abs(mean - std::sqrt(ab) * 0.5) < 4 * std::sqrt((1 - ab) / draws));
  CHECK(std::abs(var - (1 - ab)) < 4 * (1 - ab) * std::sqrt(2.0 / (draws - 1)));
}

TEST_CASE("ancestral_step direct arithmetic") {
  // alpha_2 = 0.99 and abar_2 = 0.9 exactly (up to rounding)
  double b1 = 1.0 - 0.9 / 0.99;
  auto s = NoiseSchedule::from_betas({b1, 0.01});
  CHECK(s.alpha_bar_t(2) == doctest::Approx(0.9).epsilon(1e-12));
  Mat yt(1, 1), eps(1, 1), z(1, 1);
  yt(0, 0) = 1.0;
  eps(0, 0) = 0.5;
  z(0, 0) = 0.0;
  Mat prev = ancestral_step(yt, eps, 2, z, s);
  double expect = (1.0 - (0.01 / std::sqrt(0.1)) * 0.5) / std::sqrt(0.99);
  CHECK(prev(0, 0) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(prev(0, 0) == doctest::Approx(0.989147).epsilon(1e-5));
}

TEST_CASE("ancestral_step with alpha near one and zero inputs is a no-op") {
  auto s = NoiseSchedule::from_betas({1e-14, 1e-14});
  Mat yt(1, 1), eps(1, 1), z(1, 1);
  yt(0, 0) = -0.35;
  Mat prev = ancestral_step(yt, eps, 2, z, s);
  CHECK(prev(0, 0) == doctest::Approx(-0.35).epsilon(1e-9));
}

TEST_CASE("ancestral_step at t=1 ignores any z argument") {
  auto s = NoiseSchedule::linear(5, 1e-3, 0.05);
  Mat yt(3, 2), eps(3, 2), z(3, 2), zero(3, 2);
  Rng rng(9);
  for (auto& v : yt.v) v = rng.gaussian();
  for (auto& v : eps.v) v = rng.gaussian();
  for (auto& v : z.v) v = 100.0 + rng.gaussian();  // garbage that must not leak
  Mat with_noise = ancestral_step(yt, eps, 1, z, s);
  Mat without = ancestral_step(yt, eps, 1, zero, s);
  CHECK(with_noise.v == without.v);
}
