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
#include <vector>

#include "field.hpp"
#include "schedule.hpp"

// Desk-scale quantitative diagnostics: reconstruction quality, point-set
// geometry metrics with the squared-Euclidean/mean Chamfer convention, and
// Monte-Carlo checks of the forward-process moments.

namespace dpf {

/// 3-d point set, [k x 3]. Occupancy fields convert to voxel centers whose
/// occupancy probability (signal mapped to [0,1]) exceeds the threshold.
using PointSet = Mat;

/// 10 log10(peak^2 / MSE) with peak = 2 for [-1,1] signals; 99 dB cap when
/// the fields are identical. Requires identical coordinate blocks.
double psnr(const FieldSample& a, const FieldSample& b);

/// Symmetric Chamfer: mean over a of the squared distance to the nearest
/// point of b, plus the mirrored term. Exhaustive search.
double chamfer(const PointSet& a, const PointSet& b);

/// Fraction of reference sets that are the Chamfer-nearest reference of at
/// least one generated set (ties break to the lowest index).
double coverage(const std::vector<PointSet>& generated, const std::vector<PointSet>& reference);

/// Mean over reference sets of the minimum Chamfer distance to any
/// generated set.
double mmd_chamfer(const std::vector<PointSet>& generated, const std::vector<PointSet>& reference);

/// Voxel/grid centers with occupancy probability (s+1)/2 above `threshold`,
/// padded to 3-d with zeros for 2-d fields. Scalar-signal fields only.
PointSet occupancy_points(const FieldSample& field, double threshold = 0.5);

struct MomentReport {
  int t = 0;
  int64_t draws = 0;
  double empirical_mean = 0, empirical_var = 0;
  double expected_mean = 0, expected_var = 0;
  double z_mean = 0, z_var = 0;
};

/// Monte-Carlo statistics of forward_diffuse over fresh noise, centred per
/// point: (Y_t - sqrt(abar_t) Y0) has mean 0 and variance 1 - abar_t.
MomentReport moment_diagnostics(const Mat& y0, int t, const NoiseSchedule& sched, int64_t n_draws,
                                uint64_t seed);

}  // namespace dpf
