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
#include "verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "engine.hpp"

namespace dpf {

namespace {

template <class S>
nn::GradCheckReport run_score_gradcheck(const RunConfig& cfg, double h, int64_t coords_per_param,
                                        uint64_t seed) {
  ScoreFieldConfig mc = cfg.model;
  const int n_ctx = std::min(cfg.train.n_context, 8);
  const int n_qry = std::min(cfg.train.n_query, 4);
  if (mc.architecture == ScoreArch::mlp_mixer) mc.mixer_tokens = n_ctx;
  ScoreField<S> net(mc, seed);

  Rng rng(splitmix64(seed ^ 0x6e7f1a2bULL));
  // jitter every parameter so zero-initialized layers carry signal
  for (auto& [name, t] : net.params())
    for (int64_t i = 0; i < t.numel(); ++i)
      t.data()[i] += static_cast<S>(0.05 * rng.gaussian());

  // small synthetic batch on the configured metric space
  FieldSample f;
  f.space = cfg.field;
  f.coords = coordinates_for(cfg.field);
  f.signals.y = rng.gaussian_mat(f.size(), cfg.field.signal_dim);
  for (double& v : f.signals.y.v) v *= 0.5;
  auto [ctx, qry] = subsample_pairs(f, n_ctx, n_qry, rng);
  const int T = cfg.schedule.T;
  const int t_mid = std::max(1, T / 2);
  Mat eps_target = rng.gaussian_mat(n_qry, cfg.field.signal_dim);
  std::vector<S> tgt(eps_target.v.begin(), eps_target.v.end());
  auto target = nn::Tensor<S>::leaf({n_qry, cfg.field.signal_dim}, std::move(tgt));

  auto forward = [&]() { return ddpm_loss(net.eval(ctx, t_mid, qry, T), target); };
  return nn::finite_difference_check<S>(net.params(), forward, h, coords_per_param, seed);
}

}  // namespace

ScoreGradCheck score_field_gradcheck(const RunConfig& cfg, int precision, double tolerance,
                                     uint64_t seed) {
  if (precision != 32 && precision != 64)
    throw UsageError("gradcheck: precision must be 32 or 64, got " + std::to_string(precision));
  ScoreGradCheck gc;
  gc.precision = precision;
  gc.tolerance = tolerance > 0 ? tolerance : (precision == 64 ? 1e-4 : 5e-2);

  // Exhaustive coordinates for small networks; seeded subsets otherwise.
  ScoreFieldConfig probe = cfg.model;
  if (probe.architecture == ScoreArch::mlp_mixer)
    probe.mixer_tokens = std::min(cfg.train.n_context, 8);
  ScoreField<float> sizing(probe, seed);
  int64_t total = sizing.params().param_count();
  int64_t coords_per_param = total <= 50000 ? 0 : 8;

  gc.report = precision == 64 ? run_score_gradcheck<double>(cfg, 1e-5, coords_per_param, seed)
                              : run_score_gradcheck<float>(cfg, 1e-2, coords_per_param, seed);
  gc.pass = gc.report.max_rel_err < gc.tolerance;
  return gc;
}

nlohmann::json gradcheck_to_json(const ScoreGradCheck& gc) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& e : gc.report.per_param)
    per.push_back({{"name", e.name},
                   {"max_rel_err", e.max_rel_err},
                   {"coords_checked", e.coords_checked}});
  return {{"precision", gc.precision},
          {"tolerance", gc.tolerance},
          {"max_rel_err", gc.report.max_rel_err},
          {"pass", gc.pass},
          {"parameters", std::move(per)}};
}

nlohmann::json forward_diagnose_json(const RunConfig& cfg, int t, int64_t draws, uint64_t seed) {
  // fixed deterministic signal table: 32 scalar points spanning [-0.9, 0.9]
  Mat y0(32, 1);
  for (int i = 0; i < 32; ++i) y0(i, 0) = -0.9 + 1.8 * i / 31.0;
  NoiseSchedule sched = cfg.schedule.build();
  MomentReport rep = moment_diagnostics(y0, t, sched, draws, seed);
  return {{"t", rep.t},
          {"draws", rep.draws},
          {"alpha_bar", sched.alpha_bar_t(t)},
          {"empirical_mean", rep.empirical_mean},
          {"expected_mean", rep.expected_mean},
          {"empirical_var", rep.empirical_var},
          {"expected_var", rep.expected_var},
          {"z_mean", rep.z_mean},
          {"z_var", rep.z_var}};
}

EvalRequest EvalRequest::from_csv(const std::string& metrics_csv) {
  EvalRequest req;
  std::stringstream ss(metrics_csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
    if (item.empty()) continue;
    if (item == "psnr")
      req.psnr = true;
    else if (item == "chamfer")
      req.chamfer = true;
    else if (item == "coverage")
      req.coverage = true;
    else if (item == "mmd")
      req.mmd = true;
    else
      throw UsageError("unknown metric '" + item + "' (expected psnr|chamfer|coverage|mmd)");
  }
  if (!req.psnr && !req.chamfer && !req.coverage && !req.mmd)
    throw UsageError("no metrics requested");
  return req;
}

SamplerConfig make_sampler_config(const RunConfig& cfg, int resolution, double context_fraction,
                                  uint64_t seed) {
  SamplerConfig sc;
  sc.space = resolution > 0 ? cfg.field.with_resolution(resolution) : cfg.field;
  sc.context_fraction = context_fraction > 0 ? context_fraction : cfg.sample.context_fraction;
  if (cfg.model.architecture == ScoreArch::mlp_mixer) sc.context_count = cfg.model.mixer_tokens;
  sc.clamp = cfg.sample.clamp;
  sc.seed = seed;
  return sc;
}

nlohmann::json evaluate_model(const Checkpoint& ckpt, const Dataset& data,
                              const EvalRequest& req) {
  if (data.fields.empty()) throw DataError("evaluation dataset is empty");
  if (!(data.space == ckpt.config.field))
    throw DataError("dataset geometry does not match the checkpoint's field configuration");
  if (req.sample_count < 1) throw UsageError("eval: sample_count must be >= 1");

  ScoreField<float> net = score_field_from_checkpoint(ckpt);
  NoiseSchedule sched = ckpt.config.schedule.build();
  ScoreFn score = score_fn_from(net, sched.T);

  std::vector<FieldSample> generated;
  generated.reserve(req.sample_count);
  for (int i = 0; i < req.sample_count; ++i) {
    SamplerConfig sc = make_sampler_config(ckpt.config, 0, 0.0,
                                           splitmix64(req.seed ^ (0x9e3779b9ULL + i)));
    generated.push_back(sample_field(score, sched, sc));
  }

  nlohmann::json metrics;
  if (req.psnr) {
    double acc = 0;
    for (const auto& g : generated) {
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& r : data.fields) best = std::max(best, psnr(g, r));
      acc += best;
    }
    metrics["psnr"] = acc / generated.size();
  }

  int dropped_gen = 0, dropped_ref = 0;
  if (req.chamfer || req.coverage || req.mmd) {
    auto to_points = [](const std::vector<FieldSample>& fields, int& dropped) {
      std::vector<PointSet> out;
      for (const auto& f : fields) {
        PointSet p = occupancy_points(f);
        if (p.rows > 0)
          out.push_back(std::move(p));
        else
          ++dropped;
      }
      return out;
    };
    std::vector<PointSet> gen_pts = to_points(generated, dropped_gen);
    std::vector<PointSet> ref_pts = to_points(data.fields, dropped_ref);
    if (gen_pts.empty() || ref_pts.empty())
      throw DataError("point-set metrics: all generated or reference fields thresholded to empty");
    if (req.chamfer) {
      double acc = 0;
      for (const auto& g : gen_pts) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& r : ref_pts) best = std::min(best, chamfer(g, r));
        acc += best;
      }
      metrics["chamfer"] = acc / gen_pts.size();
    }
    if (req.coverage) metrics["coverage"] = coverage(gen_pts, ref_pts);
    if (req.mmd) metrics["mmd"] = mmd_chamfer(gen_pts, ref_pts);
  }

  nlohmann::json report;
  report["metrics"] = std::move(metrics);
  report["sample_count"] = req.sample_count;
  report["reference_count"] = data.fields.size();
  report["seed"] = req.seed;
  report["model_step"] = ckpt.step;
  if (dropped_gen || dropped_ref)
    report["dropped_empty_point_sets"] = {{"generated", dropped_gen}, {"reference", dropped_ref}};
  return report;
}

}  // namespace dpf
