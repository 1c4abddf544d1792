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

#include <json.hpp>

#include "config.hpp"
#include "dataset.hpp"
#include "gradcheck.hpp"
#include "metrics.hpp"
#include "serialize.hpp"

namespace dpf {

struct ScoreGradCheck {
  int precision = 64;
  double tolerance = 1e-4;
  bool pass = false;
  nn::GradCheckReport report;
};

/// Finite-difference check of the configured score network on a small
/// synthetic batch. Every parameter is jittered away from its init first so
/// zero-initialized layers cannot mask missing gradient paths. precision is
/// 32 or 64; tolerance <= 0 selects 1e-4 (64-bit) / 5e-2 (32-bit).
ScoreGradCheck score_field_gradcheck(const RunConfig& cfg, int precision, double tolerance,
                                     uint64_t seed);

nlohmann::json gradcheck_to_json(const ScoreGradCheck& gc);

/// moment_diagnostics on a fixed deterministic signal table, as JSON.
nlohmann::json forward_diagnose_json(const RunConfig& cfg, int t, int64_t draws, uint64_t seed);

struct EvalRequest {
  bool psnr = false, chamfer = false, coverage = false, mmd = false;
  int sample_count = 32;
  uint64_t seed = 0;

  static EvalRequest from_csv(const std::string& metrics_csv);
};

/// Sample from the checkpointed model and score against the reference
/// dataset. Point-set metrics require scalar signals; empty point sets are
/// dropped and counted in the report.
nlohmann::json evaluate_model(const Checkpoint& ckpt, const Dataset& data,
                              const EvalRequest& req);

/// Sampler settings for a trained model: resolution 0 keeps the training
/// grid, context_fraction <= 0 takes the config value, and mixer models pin
/// the context subset to their fixed token count.
SamplerConfig make_sampler_config(const RunConfig& cfg, int resolution, double context_fraction,
                                  uint64_t seed);

}  // namespace dpf
