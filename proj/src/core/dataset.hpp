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

#include <string>
#include <vector>

#include "field.hpp"

// Synthetic desk-scale datasets with known generative recipes, written as
// field tensor files plus a hashed manifest. A directory of P5/P6 pixmaps
// (no manifest) is also accepted, so small external rasters can be dropped
// in directly.
//
// Recipes (all signals in [-1, 1]):
//   two_mode_colors      solid 2-d RGB fields; a fair coin picks a cluster,
//                        then each channel ~ N(+/-0.6, 0.1^2), clamped.
//   gaussian_blobs_2d    one radial bump per field: a uniformly chosen
//                        center cell, width ~ U(0.15, 0.4) in coordinate
//                        units, signal 2 exp(-d^2/2w^2) - 1 (peak +1 at the
//                        center cell).
//   checkerboards        tile size in {2, 4} cells, random parity,
//                        amplitude ~ U(0.5, 1.0), values +/- amplitude.
//   spheres_vs_cubes_3d  occupancy grids: a fair coin picks a centered
//                        sphere of radius r or a cube of half-side r,
//                        r ~ U(0.3, 0.7); occupied cells +1, empty -1.
//   spherical_blobs      von Mises-Fisher-style bump on the sphere around
//                        a uniform direction u with sharpness
//                        kappa ~ U(4, 16): signal 2 exp(kappa (p.u - 1)) - 1.

namespace dpf {

struct Dataset {
  std::string kind;
  uint64_t seed = 0;
  MetricSpaceSpec space;
  std::vector<FieldSample> fields;
};

extern const std::vector<std::string> kDatasetKinds;

/// Default grid side / bandwidth per kind (two_mode_colors 8, sphere b=8,
/// everything else 16).
int default_dataset_resolution(const std::string& kind);

FieldSample synthesize_field(const std::string& kind, const MetricSpaceSpec& space, Rng& rng);

/// Write `count` fields plus manifest.json into out_dir (created if
/// needed). resolution = 0 uses the kind's default.
void synthesize_dataset(const std::string& kind, int count, uint64_t seed,
                        const std::string& out_dir, int resolution = 0);

/// Load a dataset directory: manifest.json + tensor files (hashes
/// verified), or a manifest-less directory of pixmaps.
Dataset load_dataset(const std::string& dir);

}  // namespace dpf
