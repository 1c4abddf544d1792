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
#include <utility>
#include <vector>

#include "config.hpp"
#include "engine.hpp"

// Binary file formats. Every format is self-describing via magic bytes and
// rejects foreign or truncated files with a structured error. All payloads
// are little-endian 32-bit floats.

namespace dpf {

/// Field tensor file: "FTEN" | u32 version | u32 elem tag (1 = f32)
/// | u32 rank | i64 dims... | payload.
void write_tensor_file(const std::string& path, const std::vector<int>& shape,
                       const std::vector<float>& data);
std::pair<std::vector<int>, std::vector<float>> read_tensor_file(const std::string& path);

/// Binary portable pixmap (P5 gray / P6 rgb), signals mapped from [-1, 1]
/// to [0, 255] bytes with clamping. 2-d grid fields with 1 or 3 channels.
void write_pixmap(const FieldSample& field, const std::string& path);

/// Read a P5/P6 pixmap back into a [-1, 1] field (external ingest path).
FieldSample read_pixmap_field(const std::string& path);

/// Everything needed to resume training: config, parameters, optimizer
/// moments and counters. Round-trips byte-identically.
struct Checkpoint {
  RunConfig config;
  int64_t step = 0;
  uint64_t seed = 0;
  std::vector<std::string> names;
  std::vector<std::vector<int>> shapes;
  std::vector<std::vector<float>> tensors;
  bool has_optimizer = false;
  int64_t adam_step = 0;
  std::vector<std::vector<float>> adam_m, adam_v;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint checkpoint_from_trainer(const Trainer& trainer, const RunConfig& cfg);

/// Rebuild a trainer (model + optimizer + step counter) from a checkpoint.
/// Throws if the checkpoint's parameter inventory does not match the
/// network built from its embedded config.
Trainer trainer_from_checkpoint(const Checkpoint& ckpt, std::vector<FieldSample> data);

/// Load only the network for sampling/eval.
ScoreField<float> score_field_from_checkpoint(const Checkpoint& ckpt);

uint64_t fnv1a64(const void* data, size_t len);
uint64_t fnv1a64_file(const std::string& path);

}  // namespace dpf
