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

/*
 * C interface to the dpf library: diffusion generative modeling over
 * fields (explicit coordinate-signal sets) with one score-network contract
 * across 2-d grids, 3-d occupancy grids and spherical signals.
 *
 * All functions return dpf_status; on failure dpf_last_error() holds a
 * thread-local message describing what went wrong. Handles are opaque and
 * must be released with their matching close/free call.
 */
#ifndef DPF_H
#define DPF_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DPF_API __declspec(dllexport)
#else
#define DPF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dpf_status {
  DPF_OK = 0,
  DPF_ERR_USAGE = 1,   /* contract violation: bad arguments or config values */
  DPF_ERR_DATA = 2,    /* malformed/foreign files, IO failure */
  DPF_ERR_NUMERIC = 3, /* non-finite values, failed numeric tolerance */
} dpf_status;

DPF_API const char* dpf_version(void);

/* Message for the most recent failure on this thread; empty string if none. */
DPF_API const char* dpf_last_error(void);

/* ------------------------------------------------------------------ */
/* datasets */

/*
 * Synthesize `count` fields of the given kind (two_mode_colors,
 * gaussian_blobs_2d, checkerboards, spheres_vs_cubes_3d, spherical_blobs)
 * into out_dir as tensor files plus a hashed manifest. resolution 0 picks
 * the kind's default.
 */
DPF_API dpf_status dpf_make_dataset(const char* kind, int32_t count, uint64_t seed,
                                    const char* out_dir, int32_t resolution);

/* ------------------------------------------------------------------ */
/* training */

typedef void (*dpf_train_log_fn)(void* user, int64_t step, double loss, double seconds);

/*
 * Run the training loop described by the config file over the dataset in
 * data_dir and write the final checkpoint to out_ckpt. resume_ckpt, when
 * non-NULL, must carry a config identical to config_path. metrics_log_path
 * NULL writes "<out_ckpt>.log". log_fn, when non-NULL, receives one record
 * per logging interval.
 */
DPF_API dpf_status dpf_train(const char* config_path, const char* data_dir, const char* out_ckpt,
                             const char* resume_ckpt, const char* metrics_log_path,
                             dpf_train_log_fn log_fn, void* user);

/* ------------------------------------------------------------------ */
/* verification */

/*
 * Compare reverse-mode gradients of the configured score network against
 * central finite differences on a small synthetic batch. precision is 32 or
 * 64; tolerance <= 0 picks the default for the precision (1e-4 at 64-bit).
 * Writes a JSON report (per-parameter max relative error) into report_json
 * when non-NULL. Returns DPF_ERR_NUMERIC when the check fails tolerance.
 */
DPF_API dpf_status dpf_gradcheck(const char* config_path, int32_t precision, double tolerance,
                                 char* report_json, size_t report_cap);

/*
 * Monte-Carlo check of the forward-process moments at timestep t against
 * the closed form. Writes a JSON report into report_json when non-NULL.
 */
DPF_API dpf_status dpf_diagnose_forward(const char* config_path, int32_t t, int64_t draws,
                                        uint64_t seed, char* report_json, size_t report_cap);

/* ------------------------------------------------------------------ */
/* models and sampling */

typedef struct dpf_model dpf_model;
typedef struct dpf_field dpf_field;

DPF_API dpf_status dpf_model_open(const char* ckpt_path, dpf_model** out);
DPF_API void dpf_model_close(dpf_model* model);

/* JSON summary: config, step counter, parameter count. */
DPF_API dpf_status dpf_model_info(const dpf_model* model, char* json, size_t cap);

/*
 * Ancestral sampling at the model's field geometry. resolution 0 keeps the
 * training resolution; any other value re-grids the query coordinates
 * (resolution-free sampling). context_fraction <= 0 uses the config value.
 */
DPF_API dpf_status dpf_model_sample(const dpf_model* model, int32_t resolution,
                                    double context_fraction, uint64_t seed, dpf_field** out);

DPF_API int32_t dpf_field_point_count(const dpf_field* field);
DPF_API int32_t dpf_field_coord_dim(const dpf_field* field);
DPF_API int32_t dpf_field_signal_dim(const dpf_field* field);

/*
 * Copy coordinates ([point_count x coord_dim]) and/or signals
 * ([point_count x signal_dim]) into caller buffers; either pointer may be
 * NULL to skip that block.
 */
DPF_API dpf_status dpf_field_read(const dpf_field* field, double* coords, double* signals);

DPF_API dpf_status dpf_field_save_tensor(const dpf_field* field, const char* path);

/* 2-d grid fields with 1 or 3 channels only. */
DPF_API dpf_status dpf_field_save_pixmap(const dpf_field* field, const char* path);

DPF_API void dpf_field_free(dpf_field* field);

/* ------------------------------------------------------------------ */
/* evaluation */

/*
 * Sample `sample_count` fields from the checkpoint and score them against
 * the dataset in data_dir. metrics_csv names any of psnr, chamfer,
 * coverage, mmd (comma separated). The JSON report is written to
 * report_path, or to report_json when report_path is NULL.
 */
DPF_API dpf_status dpf_eval(const char* ckpt_path, const char* data_dir, const char* metrics_csv,
                            int32_t sample_count, uint64_t seed, const char* report_path,
                            char* report_json, size_t report_cap);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* DPF_H */
