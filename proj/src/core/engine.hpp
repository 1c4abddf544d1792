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

#include <functional>
#include <memory>
#include <vector>

#include "field.hpp"
#include "schedule.hpp"
#include "score_field.hpp"

// End-to-end training and sampling over fields. One training step draws,
// per batch element, an independent (field, t, eps) triple, corrupts context
// and query signals with the closed-form forward process, and supervises
// the predicted query noise only. Sampling runs the reverse chain over a
// fixed query coordinate set, re-reading context signals from the current
// query state at a subset of rows chosen once per run.

namespace dpf {

/// Mean squared error over all query rows and channels (the "simple" loss).
template <class S>
nn::Tensor<S> ddpm_loss(const nn::Tensor<S>& eps_hat, const nn::Tensor<S>& eps_q) {
  if (eps_hat.shape() != eps_q.shape())
    throw UsageError("ddpm_loss: shape mismatch " + nn::to_string(eps_hat.shape()) + " vs " +
                     nn::to_string(eps_q.shape()));
  auto diff = nn::sub(eps_hat, eps_q);
  return nn::mean_all(nn::mul(diff, diff));
}

struct TrainConfig {
  int64_t steps = 2000;
  int batch_size = 8;
  int n_context = 64;
  int n_query = 64;
  bool context_disjoint = false;
  nn::Adam<float>::Hyper adam;
  double grad_clip = 1.0;  // global-norm clip; <= 0 disables
  uint64_t seed = 1;
  int64_t log_every = 50;

  bool operator==(const TrainConfig&) const = default;
};

inline bool operator==(const nn::Adam<float>::Hyper& a, const nn::Adam<float>::Hyper& b) {
  return a.lr == b.lr && a.beta1 == b.beta1 && a.beta2 == b.beta2 && a.eps == b.eps;
}

struct TrainBatchItem {
  ContextSet ctx;
  QuerySet qry;
  int t = 0;
  Mat eps_q;  // true query noise, the supervision target
};

/// Independent (C_t, Q_t, t, eps_q) draws for one optimizer step.
std::vector<TrainBatchItem> make_train_batch(const std::vector<FieldSample>& data,
                                             const NoiseSchedule& sched, const TrainConfig& cfg,
                                             Rng& rng);

class Trainer {
public:
  Trainer(const ScoreFieldConfig& model_cfg, const TrainConfig& train_cfg, NoiseSchedule sched,
          std::vector<FieldSample> data);

  /// One forward/backward/update cycle; returns the scalar loss.
  double step();

  int64_t step_count() const { return step_; }
  void set_step_count(int64_t s) { step_ = s; }
  ScoreField<float>& net() { return net_; }
  const ScoreField<float>& net() const { return net_; }
  nn::Adam<float>& optimizer() { return adam_; }
  const nn::Adam<float>& optimizer() const { return adam_; }
  const NoiseSchedule& schedule() const { return sched_; }
  const TrainConfig& train_config() const { return cfg_; }
  const std::vector<FieldSample>& data() const { return data_; }

private:
  TrainConfig cfg_;
  NoiseSchedule sched_;
  std::vector<FieldSample> data_;
  ScoreField<float> net_;
  nn::Adam<float> adam_;
  int64_t step_ = 0;
};

/// Score evaluations the sampler consumes; either a trained network or an
/// analytic predictor in tests.
using ScoreFn = std::function<Mat(const ContextSet&, int t, const QuerySet&)>;

ScoreFn score_fn_from(const ScoreField<float>& net, int T);

struct SamplerConfig {
  MetricSpaceSpec space;          // query coordinate source; may differ from training
  double context_fraction = 1.0;  // rho in (0, 1]
  int context_count = 0;  // exact subset size; overrides the fraction when > 0
                          // (the mixer pins this to its token count)
  uint64_t seed = 0;
  double clamp = 1.3;  // applied once to the final signals; <= 0 disables
};

/// ceil(rho * n) distinct row indices, drawn once; the sampler reuses the
/// same list at every denoising step.
std::vector<int> select_context_subset(int n, double rho, Rng& rng);

/// Ancestral sampling over the reverse chain t = T..1. Query coordinates
/// never change; context signals are re-read from the current query signals
/// at the fixed subset. The t = 1 step injects no noise.
FieldSample sample_field(const ScoreFn& score, const NoiseSchedule& sched,
                         const SamplerConfig& cfg);

/// Same chain with query coordinates from `train_space` re-gridded to
/// `eval_resolution`; valid because coordinates are continuous inputs.
FieldSample sample_resolution_free(const ScoreFn& score, const NoiseSchedule& sched,
                                   const MetricSpaceSpec& train_space, int eval_resolution,
                                   double context_fraction, uint64_t seed, double clamp = 1.3);

}  // namespace dpf
