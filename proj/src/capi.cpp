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
#include "dpf/dpf.h"

#include <chrono>
#include <cstring>
#include <fstream>
#include <memory>
#include <optional>
#include <string>

#include "core/dataset.hpp"
#include "core/engine.hpp"
#include "core/serialize.hpp"
#include "core/verify.hpp"

using namespace dpf;

extern "C" {

struct dpf_model {
  Checkpoint ckpt;
  std::unique_ptr<ScoreField<float>> net;
  NoiseSchedule sched;
};

struct dpf_field {
  FieldSample field;
};

}  // extern "C"

namespace {

thread_local std::string t_last_error;

template <class F>
dpf_status wrap(F&& fn) {
  try {
    fn();
    t_last_error.clear();
    return DPF_OK;
  } catch (const Error& e) {
    t_last_error = e.what();
    return static_cast<dpf_status>(static_cast<int>(e.kind()));
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return DPF_ERR_DATA;
  }
}

void require_arg(const void* p, const char* name) {
  if (!p) throw UsageError(std::string(name) + " must not be NULL");
}

void write_buffer(const std::string& text, char* buf, size_t cap) {
  if (!buf) return;
  if (cap == 0) throw UsageError("report buffer capacity is zero");
  size_t n = std::min(text.size(), cap - 1);
  std::memcpy(buf, text.data(), n);
  buf[n] = '\0';
  if (n < text.size())
    throw UsageError("report buffer too small (" + std::to_string(cap) + " bytes for " +
                     std::to_string(text.size() + 1) + ")");
}

}  // namespace

extern "C" {

const char* dpf_version(void) { return "0.1.0"; }

const char* dpf_last_error(void) { return t_last_error.c_str(); }

dpf_status dpf_make_dataset(const char* kind, int32_t count, uint64_t seed, const char* out_dir,
                            int32_t resolution) {
  return wrap([&] {
    require_arg(kind, "kind");
    require_arg(out_dir, "out_dir");
    synthesize_dataset(kind, count, seed, out_dir, resolution);
  });
}

dpf_status dpf_train(const char* config_path, const char* data_dir, const char* out_ckpt,
                     const char* resume_ckpt, const char* metrics_log_path,
                     dpf_train_log_fn log_fn, void* user) {
  return wrap([&] {
    require_arg(config_path, "config_path");
    require_arg(data_dir, "data_dir");
    require_arg(out_ckpt, "out_ckpt");
    RunConfig cfg = load_run_config(config_path);
    Dataset ds = load_dataset(data_dir);
    if (!(ds.space == cfg.field))
      throw DataError("dataset geometry does not match config [field]: dataset is " +
                      to_string(ds.space.kind) + " with signal_dim " +
                      std::to_string(ds.space.signal_dim));

    std::optional<Trainer> trainer;
    if (resume_ckpt) {
      Checkpoint ckpt = load_checkpoint(resume_ckpt);
      // the step target may grow across invocations; everything else is
      // part of the model's identity and must match exactly
      RunConfig comparable = ckpt.config;
      comparable.train.steps = cfg.train.steps;
      if (!(comparable == cfg))
        throw DataError("checkpoint config does not match --config.\ncheckpoint:\n" +
                        run_config_to_text(ckpt.config) + "\nconfig file:\n" +
                        run_config_to_text(cfg));
      ckpt.config = cfg;
      trainer.emplace(trainer_from_checkpoint(ckpt, std::move(ds.fields)));
    } else {
      trainer.emplace(cfg.model, cfg.train, cfg.schedule.build(), std::move(ds.fields));
    }

    std::string log_path = metrics_log_path ? metrics_log_path : std::string(out_ckpt) + ".log";
    std::ofstream log(log_path, resume_ckpt ? std::ios::app : std::ios::trunc);
    if (!log) throw DataError("cannot open metrics log '" + log_path + "'");

    auto t0 = std::chrono::steady_clock::now();
    auto emit = [&](int64_t step, double loss) {
      double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      log << step << " " << loss << " " << secs << "\n";
      if (log_fn) log_fn(user, step, loss, secs);
    };
    while (trainer->step_count() < cfg.train.steps) {
      double loss = trainer->step();
      int64_t step = trainer->step_count();
      if (step % cfg.train.log_every == 0 || step == cfg.train.steps) emit(step, loss);
    }
    log.flush();
    save_checkpoint(out_ckpt, checkpoint_from_trainer(*trainer, cfg));
  });
}

dpf_status dpf_gradcheck(const char* config_path, int32_t precision, double tolerance,
                         char* report_json, size_t report_cap) {
  bool pass = false;
  dpf_status st = wrap([&] {
    require_arg(config_path, "config_path");
    RunConfig cfg = load_run_config(config_path);
    ScoreGradCheck gc = score_field_gradcheck(cfg, precision, tolerance, /*seed=*/7);
    write_buffer(gradcheck_to_json(gc).dump(2), report_json, report_cap);
    pass = gc.pass;
    if (!pass)
      throw NumericError("gradcheck failed: max relative error " +
                         std::to_string(gc.report.max_rel_err) + " exceeds tolerance " +
                         std::to_string(gc.tolerance));
  });
  return st;
}

dpf_status dpf_diagnose_forward(const char* config_path, int32_t t, int64_t draws, uint64_t seed,
                                char* report_json, size_t report_cap) {
  return wrap([&] {
    require_arg(config_path, "config_path");
    RunConfig cfg = load_run_config(config_path);
    nlohmann::json j = forward_diagnose_json(cfg, t, draws, seed);
    write_buffer(j.dump(2), report_json, report_cap);
  });
}

dpf_status dpf_model_open(const char* ckpt_path, dpf_model** out) {
  return wrap([&] {
    require_arg(ckpt_path, "ckpt_path");
    require_arg(out, "out");
    auto model = std::make_unique<dpf_model>();
    model->ckpt = load_checkpoint(ckpt_path);
    model->net = std::make_unique<ScoreField<float>>(score_field_from_checkpoint(model->ckpt));
    model->sched = model->ckpt.config.schedule.build();
    *out = model.release();
  });
}

void dpf_model_close(dpf_model* model) { delete model; }

dpf_status dpf_model_info(const dpf_model* model, char* json, size_t cap) {
  return wrap([&] {
    require_arg(model, "model");
    nlohmann::json j;
    j["config"] = run_config_to_json(model->ckpt.config);
    j["step"] = model->ckpt.step;
    j["parameter_count"] = model->net->params().param_count();
    write_buffer(j.dump(2), json, cap);
  });
}

dpf_status dpf_model_sample(const dpf_model* model, int32_t resolution, double context_fraction,
                            uint64_t seed, dpf_field** out) {
  return wrap([&] {
    require_arg(model, "model");
    require_arg(out, "out");
    SamplerConfig sc = make_sampler_config(model->ckpt.config, resolution, context_fraction, seed);
    ScoreFn score = score_fn_from(*model->net, model->sched.T);
    auto field = std::make_unique<dpf_field>();
    field->field = sample_field(score, model->sched, sc);
    *out = field.release();
  });
}

int32_t dpf_field_point_count(const dpf_field* field) {
  return field ? field->field.size() : 0;
}

int32_t dpf_field_coord_dim(const dpf_field* field) {
  return field ? field->field.coords.m.cols : 0;
}

int32_t dpf_field_signal_dim(const dpf_field* field) {
  return field ? field->field.signals.y.cols : 0;
}

dpf_status dpf_field_read(const dpf_field* field, double* coords, double* signals) {
  return wrap([&] {
    require_arg(field, "field");
    if (coords)
      std::memcpy(coords, field->field.coords.m.v.data(),
                  field->field.coords.m.size() * sizeof(double));
    if (signals)
      std::memcpy(signals, field->field.signals.y.v.data(),
                  field->field.signals.y.size() * sizeof(double));
  });
}

dpf_status dpf_field_save_tensor(const dpf_field* field, const char* path) {
  return wrap([&] {
    require_arg(field, "field");
    require_arg(path, "path");
    const FieldSample& f = field->field;
    std::vector<int> shape = f.space.extent;
    if (f.space.kind == SpaceKind::sphere_dh)
      shape = {2 * f.space.extent[0], 2 * f.space.extent[0]};
    shape.push_back(f.space.signal_dim);
    std::vector<float> data(f.signals.y.v.begin(), f.signals.y.v.end());
    write_tensor_file(path, shape, data);
  });
}

dpf_status dpf_field_save_pixmap(const dpf_field* field, const char* path) {
  return wrap([&] {
    require_arg(field, "field");
    require_arg(path, "path");
    write_pixmap(field->field, path);
  });
}

void dpf_field_free(dpf_field* field) { delete field; }

dpf_status dpf_eval(const char* ckpt_path, const char* data_dir, const char* metrics_csv,
                    int32_t sample_count, uint64_t seed, const char* report_path,
                    char* report_json, size_t report_cap) {
  return wrap([&] {
    require_arg(ckpt_path, "ckpt_path");
    require_arg(data_dir, "data_dir");
    require_arg(metrics_csv, "metrics_csv");
    EvalRequest req = EvalRequest::from_csv(metrics_csv);
    req.sample_count = sample_count;
    req.seed = seed;
    Checkpoint ckpt = load_checkpoint(ckpt_path);
    Dataset ds = load_dataset(data_dir);
    nlohmann::json report = evaluate_model(ckpt, ds, req);
    std::string text = report.dump(2);
    if (report_path) {
      std::ofstream out(report_path, std::ios::binary);
      if (!out) throw DataError("cannot write report to '" + std::string(report_path) + "'");
      out << text << "\n";
      if (!out.flush()) throw DataError("report write failed");
    }
    write_buffer(text, report_json, report_cap);
  });
}

}  // extern "C"
