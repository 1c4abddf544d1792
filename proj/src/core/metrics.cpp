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
#include "metrics.hpp"

#include <cmath>
#include <limits>

namespace dpf {

double psnr(const FieldSample& a, const FieldSample& b) {
  if (a.space != b.space || a.coords.m.v != b.coords.m.v)
    throw UsageError("psnr: fields are not defined on the same coordinates");
  require_same_shape(a.signals.y, b.signals.y, "psnr");
  double mse = 0;
  for (size_t i = 0; i < a.signals.y.size(); ++i) {
    double d = a.signals.y.v[i] - b.signals.y.v[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.signals.y.size());
  if (mse == 0.0) return 99.0;
  constexpr double peak = 2.0;  // signal range [-1, 1]
  return std::min(99.0, 10.0 * std::log10(peak * peak / mse));
}

double chamfer(const PointSet& a, const PointSet& b) {
  if (a.rows < 1 || b.rows < 1) throw UsageError("chamfer: point sets must be non-empty");
  if (a.cols != b.cols)
    throw UsageError("chamfer: dimension mismatch " + shape_str(a.rows, a.cols) + " vs " +
                     shape_str(b.rows, b.cols));
  auto one_way = [](const PointSet& from, const PointSet& to) {
    double acc = 0;
    for (int i = 0; i < from.rows; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < to.rows; ++j) {
        double d = 0;
        for (int c = 0; c < from.cols; ++c) {
          double diff = from(i, c) - to(j, c);
          d += diff * diff;
        }
        best = std::min(best, d);
      }
      acc += best;
    }
    return acc / static_cast<double>(from.rows);
  };
  return one_way(a, b) + one_way(b, a);
}

double coverage(const std::vector<PointSet>& generated, const std::vector<PointSet>& reference) {
  if (generated.empty() || reference.empty())
    throw UsageError("coverage: generated and reference lists must be non-empty");
  std::vector<char> matched(reference.size(), 0);
  for (const auto& g : generated) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t r = 0; r < reference.size(); ++r) {
      double d = chamfer(g, reference[r]);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(r);
      }
    }
    matched[best] = 1;
  }
  int count = 0;
  for (char m : matched) count += m;
  return static_cast<double>(count) / static_cast<double>(reference.size());
}

double mmd_chamfer(const std::vector<PointSet>& generated,
                   const std::vector<PointSet>& reference) {
  if (generated.empty() || reference.empty())
    throw UsageError("mmd_chamfer: generated and reference lists must be non-empty");
  double acc = 0;
  for (const auto& r : reference) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& g : generated) best = std::min(best, chamfer(g, r));
    acc += best;
  }
  return acc / static_cast<double>(reference.size());
}

PointSet occupancy_points(const FieldSample& field, double threshold) {
  if (field.space.signal_dim != 1)
    throw UsageError("occupancy_points: requires scalar-signal fields, got signal_dim=" +
                     std::to_string(field.space.signal_dim));
  std::vector<int> keep;
  for (int r = 0; r < field.size(); ++r)
    if ((field.signals.y(r, 0) + 1.0) * 0.5 > threshold) keep.push_back(r);
  PointSet pts(static_cast<int>(keep.size()), 3);
  for (size_t i = 0; i < keep.size(); ++i)
    for (int c = 0; c < 3; ++c)
      pts(static_cast<int>(i), c) = c < field.coords.m.cols ? field.coords.m(keep[i], c) : 0.0;
  return pts;
}

MomentReport moment_diagnostics(const Mat& y0, int t, const NoiseSchedule& sched, int64_t n_draws,
                                uint64_t seed) {
  if (n_draws < 100) throw UsageError("moment_diagnostics: need at least 100 draws");
  double ab = sched.alpha_bar_t(t);
  MomentReport rep;
  rep.t = t;
  rep.draws = n_draws;
  rep.expected_var = 1.0 - ab;
  double sab = std::sqrt(ab);
  double y0_mean = 0;
  for (double v : y0.v) y0_mean += v;
  y0_mean /= static_cast<double>(y0.size());
  rep.expected_mean = sab * y0_mean;

  Rng rng(splitmix64(seed ^ 0x3c6ef372ULL));
  // accumulate residuals r = y_t - sqrt(abar) y0, which are iid N(0, 1-abar)
  double s1 = 0, s2 = 0;
  int64_t m = 0;
  for (int64_t d = 0; d < n_draws; ++d) {
    Mat eps = rng.gaussian_mat(y0.rows, y0.cols);
    Mat yt = forward_diffuse(y0, t, eps, sched);
    for (size_t i = 0; i < yt.size(); ++i) {
      double r = yt.v[i] - sab * y0.v[i];
      s1 += r;
      s2 += r * r;
      ++m;
    }
  }
  double rmean = s1 / static_cast<double>(m);
  double rvar = s2 / static_cast<double>(m) - rmean * rmean;
  rep.empirical_mean = rep.expected_mean + rmean;
  rep.empirical_var = rvar;
  rep.z_mean = rmean / std::sqrt(rep.expected_var / static_cast<double>(m));
  rep.z_var = (rvar - rep.expected_var) /
              (rep.expected_var * std::sqrt(2.0 / static_cast<double>(m - 1)));
  return rep;
}

}  // namespace dpf
