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
#include "engine.hpp"

#include <cmath>

namespace dpf {

std::vector<TrainBatchItem> make_train_batch(const std::vector<FieldSample>& data,
                                             const NoiseSchedule& sched, const TrainConfig& cfg,
                                             Rng& rng) {
  if (data.empty()) throw UsageError("make_train_batch: empty dataset");
  std::vector<TrainBatchItem> batch;
  batch.reserve(cfg.batch_size);
  for (int b = 0; b < cfg.batch_size; ++b) {
    const FieldSample& field = data[rng.uniform_int(static_cast<int64_t>(data.size()))];
    auto [ctx, qry] = subsample_pairs(field, cfg.n_context, cfg.n_query, rng, cfg.context_disjoint);
    int t = 1 + static_cast<int>(rng.uniform_int(sched.T));
    Mat eps_c = rng.gaussian_mat(ctx.signals.y.rows, ctx.signals.y.cols);
    Mat eps_q = rng.gaussian_mat(qry.signals.y.rows, qry.signals.y.cols);
    ctx.signals.y = forward_diffuse(ctx.signals.y, t, eps_c, sched);
    qry.signals.y = forward_diffuse(qry.signals.y, t, eps_q, sched);
    ctx.t = t;
    qry.t = t;
    batch.push_back({std::move(ctx), std::move(qry), t, std::move(eps_q)});
  }
  return batch;
}

Trainer::Trainer(const ScoreFieldConfig& model_cfg, const TrainConfig& train_cfg,
                 NoiseSchedule sched, std::vector<FieldSample> data)
    : cfg_(train_cfg),
      sched_(std::move(sched)),
      data_(std::move(data)),
      net_(model_cfg, train_cfg.seed),
      adam_(net_.params(), train_cfg.adam) {
  if (data_.empty()) throw UsageError("trainer: empty dataset");
  for (const auto& f : data_)
    if (f.space.signal_dim != model_cfg.signal_dim)
      throw UsageError("trainer: dataset signal_dim " + std::to_string(f.space.signal_dim) +
                       " does not match model signal_dim " + std::to_string(model_cfg.signal_dim));
}

double Trainer::step() {
  Rng rng = Rng::for_step(cfg_.seed, static_cast<uint64_t>(step_));
  auto batch = make_train_batch(data_, sched_, cfg_, rng);

  nn::Tensor<float> total;
  for (const auto& item : batch) {
    auto eps_hat = net_.eval(item.ctx, item.t, item.qry, sched_.T);
    std::vector<float> target(item.eps_q.v.begin(), item.eps_q.v.end());
    auto eps_q = nn::Tensor<float>::leaf({item.eps_q.rows, item.eps_q.cols}, std::move(target));
    auto loss = ddpm_loss(eps_hat, eps_q);
    total = total.defined() ? nn::add(total, loss) : loss;
  }
  auto loss = nn::scale(total, 1.0f / static_cast<float>(batch.size()));

  double value = static_cast<double>(loss.item());
  if (!std::isfinite(value)) throw NumericError("train step " + std::to_string(step_) + ": loss is not finite");

  net_.params().zero_grad();
  nn::backward(loss);
  if (cfg_.grad_clip > 0) clip_grad_norm(net_.params(), cfg_.grad_clip);
  adam_.update(net_.params());
  ++step_;
  return value;
}

ScoreFn score_fn_from(const ScoreField<float>& net, int T) {
  return [&net, T](const ContextSet& ctx, int t, const QuerySet& qry) {
    return net.eval_signals(ctx, t, qry, T);
  };
}

std::vector<int> select_context_subset(int n, double rho, Rng& rng) {
  if (!(rho > 0.0 && rho <= 1.0))
    throw UsageError("select_context_subset: rho must be in (0, 1], got " + std::to_string(rho));
  int k = static_cast<int>(std::ceil(rho * n));
  if (k < 1) throw UsageError("select_context_subset: rho * n < 1");
  return rng.sample_without_replacement(n, k);
}

FieldSample sample_field(const ScoreFn& score, const NoiseSchedule& sched,
                         const SamplerConfig& cfg) {
  cfg.space.validate();
  CoordinateSet coords = coordinates_for(cfg.space);
  const int n = coords.m.rows;
  const int dy = cfg.space.signal_dim;

  Rng rng(splitmix64(cfg.seed ^ 0x5a3f9e1dULL));
  Mat y = rng.gaussian_mat(n, dy);
  std::vector<int> subset;
  if (cfg.context_count > 0) {
    if (cfg.context_count > n)
      throw UsageError("sample_field: context_count " + std::to_string(cfg.context_count) +
                       " exceeds the " + std::to_string(n) + " query points");
    subset = rng.sample_without_replacement(n, cfg.context_count);
  } else {
    subset = select_context_subset(n, cfg.context_fraction, rng);
  }

  for (int t = sched.T; t >= 1; --t) {
    ContextSet ctx{{coords.m.take_rows(subset)}, {y.take_rows(subset)}, t};
    QuerySet qry{{coords.m}, {y}, t};
    Mat eps_hat = score(ctx, t, qry);
    require_same_shape(eps_hat, y, "sample_field(score output)");
    Mat z = (t > 1) ? rng.gaussian_mat(n, dy) : Mat(n, dy);
    y = ancestral_step(y, eps_hat, t, z, sched);
  }
  for (double v : y.v)
    if (!std::isfinite(v)) throw NumericError("sample_field: non-finite signal in output");
  if (cfg.clamp > 0)
    for (double& v : y.v) v = std::clamp(v, -cfg.clamp, cfg.clamp);

  FieldSample out;
  out.space = cfg.space;
  out.coords = std::move(coords);
  out.signals.y = std::move(y);
  return out;
}

FieldSample sample_resolution_free(const ScoreFn& score, const NoiseSchedule& sched,
                                   const MetricSpaceSpec& train_space, int eval_resolution,
                                   double context_fraction, uint64_t seed, double clamp) {
  SamplerConfig cfg;
  cfg.space = train_space.with_resolution(eval_resolution);
  cfg.context_fraction = context_fraction;
  cfg.seed = seed;
  cfg.clamp = clamp;
  return sample_field(score, sched, cfg);
}

}  // namespace dpf
