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

// Command-line front end. Everything goes through the C API in dpf/dpf.h;
// this translation unit never touches library internals.

#include <dpf/dpf.h>

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

namespace {

int fail(dpf_status st) {
  std::fprintf(stderr, "error: %s\n", dpf_last_error());
  return static_cast<int>(st);
}

void print_train_log(void*, int64_t step, double loss, double seconds) {
  std::printf("step %" PRId64 "  loss %.6f  %.1fs\n", step, loss, seconds);
  std::fflush(stdout);
}

constexpr size_t kReportCap = 1 << 20;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dpf: diffusion generative modeling over fields"};
  app.require_subcommand(1);

  // make-dataset
  std::string md_kind, md_out;
  int32_t md_count = 128, md_resolution = 0;
  uint64_t md_seed = 0;
  auto* md = app.add_subcommand("make-dataset", "synthesize a field dataset");
  md->add_option("--kind", md_kind,
                 "two_mode_colors|gaussian_blobs_2d|checkerboards|spheres_vs_cubes_3d|spherical_blobs")
      ->required();
  md->add_option("--count", md_count, "number of fields")->required();
  md->add_option("--seed", md_seed, "rng seed")->required();
  md->add_option("--out", md_out, "output directory")->required();
  md->add_option("--resolution", md_resolution, "grid side / bandwidth (0 = kind default)");

  // train
  std::string tr_config, tr_data, tr_out, tr_resume, tr_log;
  bool tr_quiet = false;
  auto* tr = app.add_subcommand("train", "train a score field model");
  tr->add_option("--config", tr_config, "config file")->required();
  tr->add_option("--data", tr_data, "dataset directory")->required();
  tr->add_option("--out", tr_out, "output checkpoint path")->required();
  tr->add_option("--resume", tr_resume, "checkpoint to resume from");
  tr->add_option("--log", tr_log, "metrics log path (default <out>.log)");
  tr->add_flag("--quiet", tr_quiet, "suppress per-interval console output");

  // sample
  std::string sa_ckpt, sa_out;
  int32_t sa_count = 16, sa_resolution = 0;
  double sa_rho = 0.0;
  uint64_t sa_seed = 0;
  auto* sa = app.add_subcommand("sample", "draw fields from a trained model");
  sa->add_option("--ckpt", sa_ckpt, "checkpoint path")->required();
  sa->add_option("--count", sa_count, "number of samples")->required();
  sa->add_option("--resolution", sa_resolution, "query resolution (0 = training resolution)");
  sa->add_option("--context-fraction", sa_rho, "context subset fraction in (0,1] (0 = config)");
  sa->add_option("--seed", sa_seed, "rng seed")->required();
  sa->add_option("--out", sa_out, "output directory")->required();

  // eval
  std::string ev_ckpt, ev_data, ev_metrics = "psnr", ev_out;
  int32_t ev_count = 32;
  uint64_t ev_seed = 0;
  auto* ev = app.add_subcommand("eval", "score samples against a reference dataset");
  ev->add_option("--ckpt", ev_ckpt, "checkpoint path")->required();
  ev->add_option("--data", ev_data, "reference dataset directory")->required();
  ev->add_option("--metrics", ev_metrics, "comma list of psnr,chamfer,coverage,mmd");
  ev->add_option("--out", ev_out, "report path")->required();
  ev->add_option("--count", ev_count, "number of samples to draw");
  ev->add_option("--seed", ev_seed, "rng seed");

  // gradcheck
  std::string gc_config;
  int32_t gc_precision = 64;
  double gc_tolerance = 0.0;
  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of the score network");
  gc->add_option("--config", gc_config, "config file")->required();
  gc->add_option("--precision", gc_precision, "32 or 64 (default 64)");
  gc->add_option("--tolerance", gc_tolerance, "max relative error (0 = precision default)");

  // diagnose-forward
  std::string df_config;
  int32_t df_t = 0;
  int64_t df_draws = 100000;
  uint64_t df_seed = 0;
  auto* df = app.add_subcommand("diagnose-forward", "Monte-Carlo forward-process moment check");
  df->add_option("--config", df_config, "config file")->required();
  df->add_option("--t", df_t, "timestep in {1..T}")->required();
  df->add_option("--draws", df_draws, "Monte-Carlo draws");
  df->add_option("--seed", df_seed, "rng seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage errors exit 1
  }

  if (md->parsed()) {
    dpf_status st =
        dpf_make_dataset(md_kind.c_str(), md_count, md_seed, md_out.c_str(), md_resolution);
    if (st != DPF_OK) return fail(st);
    std::printf("wrote %d %s fields to %s\n", md_count, md_kind.c_str(), md_out.c_str());
    return 0;
  }

  if (tr->parsed()) {
    dpf_status st = dpf_train(tr_config.c_str(), tr_data.c_str(), tr_out.c_str(),
                              tr_resume.empty() ? nullptr : tr_resume.c_str(),
                              tr_log.empty() ? nullptr : tr_log.c_str(),
                              tr_quiet ? nullptr : print_train_log, nullptr);
    if (st != DPF_OK) return fail(st);
    std::printf("checkpoint written to %s\n", tr_out.c_str());
    return 0;
  }

  if (sa->parsed()) {
    dpf_model* model = nullptr;
    dpf_status st = dpf_model_open(sa_ckpt.c_str(), &model);
    if (st != DPF_OK) return fail(st);
    std::filesystem::create_directories(sa_out);
    for (int32_t i = 0; i < sa_count; ++i) {
      dpf_field* field = nullptr;
      st = dpf_model_sample(model, sa_resolution, sa_rho, sa_seed + static_cast<uint64_t>(i),
                            &field);
      if (st != DPF_OK) {
        dpf_model_close(model);
        return fail(st);
      }
      char name[64];
      std::snprintf(name, sizeof(name), "sample_%04d", i);
      std::string base = (std::filesystem::path(sa_out) / name).string();
      st = dpf_field_save_tensor(field, (base + ".ften").c_str());
      if (st == DPF_OK && dpf_field_coord_dim(field) == 2 &&
          (dpf_field_signal_dim(field) == 1 || dpf_field_signal_dim(field) == 3))
        st = dpf_field_save_pixmap(field,
                                   (base + (dpf_field_signal_dim(field) == 1 ? ".pgm" : ".ppm")).c_str());
      dpf_field_free(field);
      if (st != DPF_OK) {
        dpf_model_close(model);
        return fail(st);
      }
    }
    dpf_model_close(model);
    std::printf("wrote %d samples to %s\n", sa_count, sa_out.c_str());
    return 0;
  }

  if (ev->parsed()) {
    std::vector<char> report(kReportCap);
    dpf_status st = dpf_eval(ev_ckpt.c_str(), ev_data.c_str(), ev_metrics.c_str(), ev_count,
                             ev_seed, ev_out.c_str(), report.data(), report.size());
    if (st != DPF_OK) return fail(st);
    std::printf("%s\n", report.data());
    return 0;
  }

  if (gc->parsed()) {
    std::vector<char> report(kReportCap);
    dpf_status st =
        dpf_gradcheck(gc_config.c_str(), gc_precision, gc_tolerance, report.data(), report.size());
    std::printf("%s\n", report.data());
    if (st != DPF_OK) return fail(st);
    return 0;
  }

  if (df->parsed()) {
    std::vector<char> report(kReportCap);
    dpf_status st = dpf_diagnose_forward(df_config.c_str(), df_t, df_draws, df_seed, report.data(),
                                         report.size());
    if (st != DPF_OK) return fail(st);
    std::printf("%s\n", report.data());
    return 0;
  }

  return 1;
}
