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
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "metrics.hpp"

using namespace dpf;

namespace {

FieldSample grid_field(int side, double fill) {
  FieldSample f;
  f.space = {SpaceKind::euclidean_grid_2d, {side, side}, 1};
  f.coords = grid_coordinates(f.space);
  f.signals.y = Mat(side * side, 1, fill);
  return f;
}

PointSet points(std::initializer_list<std::array<double, 3>> pts) {
  PointSet m(static_cast<int>(pts.size()), 3);
  int r = 0;
  for (const auto& p : pts) {
    for (int c = 0; c < 3; ++c) m(r, c) = p[c];
    ++r;
  }
  return m;
}

// Test-side exhaustive re-implementation, written straight off the metric
// definitions; kept independent of metrics.cpp.
double oracle_chamfer(const PointSet& a, const PointSet& b) {
  auto dir = [](const PointSet& s, const PointSet& t) {
    double total = 0;
    for (int i = 0; i < s.rows; ++i) {
      double nearest = std::numeric_limits<double>::infinity();
      for (int j = 0; j < t.rows; ++j) {
        double d2 = 0;
        for (int c = 0; c < s.cols; ++c) d2 += (s(i, c) - t(j, c)) * (s(i, c) - t(j, c));
        nearest = std::min(nearest, d2);
      }
      total += nearest;
    }
    return total / s.rows;
  };
  return dir(a, b) + dir(b, a);
}

double oracle_coverage(const std::vector<PointSet>& gen, const std::vector<PointSet>& ref) {
  std::vector<bool> hit(ref.size(), false);
  for (const auto& g : gen) {
    size_t arg = 0;
    double best = std::numeric_limits<double>::infinity();
    for (size_t r = 0; r < ref.size(); ++r) {
      double d = oracle_chamfer(g, ref[r]);
      if (d < best) {
        best = d;
        arg = r;
      }
    }
    hit[arg] = true;
  }
  double n = 0;
  for (bool h : hit) n += h ? 1 : 0;
  return n / ref.size();
}

double oracle_mmd(const std::vector<PointSet>& gen, const std::vector<PointSet>& ref) {
  double total = 0;
  for (const auto& r : ref) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& g : gen) best = std::min(best, oracle_chamfer(g, r));
    total += best;
  }
  return total / ref.size();
}

}  // namespace

TEST_CASE("psnr: cap, hand arithmetic, coordinate discipline, monotonicity") {
  FieldSample a = grid_field(4, 0.25);
  CHECK(psnr(a, a) == 99.0);

  FieldSample b = grid_field(4, 0.45);  // mse = 0.04, peak^2/mse = 100
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-12));

  FieldSample c = grid_field(5, 0.25);
  CHECK_THROWS_AS(psnr(a, c), UsageError);

  FieldSample d = grid_field(4, 0.65);
  CHECK(psnr(a, b) > psnr(a, d));
}

TEST_CASE("chamfer: zero at equality, hand value, symmetry") {
  PointSet a = points({{0, 0, 0}});
  PointSet b = points({{3, 4, 0}});
  CHECK(chamfer(a, a) == 0.0);
  CHECK(chamfer(a, b) == doctest::Approx(50.0));  // squared convention, both directions
  PointSet c = points({{1, 0, 0}, {0, 2, 0}, {0, 0, 3}});
  CHECK(chamfer(a, c) == chamfer(c, a));
  CHECK_THROWS_AS(chamfer(PointSet(0, 3), a), UsageError);
}

TEST_CASE("coverage: identity, collapse onto one reference, order invariance") {
  std::vector<PointSet> ref = {points({{0, 0, 0}}), points({{5, 0, 0}}), points({{0, 7, 0}})};
  CHECK(coverage(ref, ref) == 1.0);

  std::vector<PointSet> collapsed = {points({{0.1, 0, 0}}), points({{-0.1, 0, 0}})};
  CHECK(coverage(collapsed, ref) == doctest::Approx(1.0 / 3));

  std::vector<PointSet> swapped = {collapsed[1], collapsed[0]};
  CHECK(coverage(swapped, ref) == coverage(collapsed, ref));
  CHECK_THROWS_AS(coverage({}, ref), UsageError);
}

TEST_CASE("mmd: subset zero, singleton collapse, two-reference hand case") {
  std::vector<PointSet> ref = {points({{0, 0, 0}}), points({{5, 0, 0}})};
  CHECK(mmd_chamfer(ref, ref) == 0.0);

  std::vector<PointSet> one = {points({{1, 1, 0}})};
  CHECK(mmd_chamfer(one, {ref[0]}) == doctest::Approx(chamfer(one[0], ref[0])));

  double expect = 0.5 * (chamfer(one[0], ref[0]) + chamfer(one[0], ref[1]));
  CHECK(mmd_chamfer(one, ref) == doctest::Approx(expect));
}

TEST_CASE("metrics agree exactly with the exhaustive oracle on random instances") {
  Rng rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    auto random_sets = [&](int max_sets) {
      std::vector<PointSet> sets;
      int n = 1 + static_cast<int>(rng.uniform_int(max_sets));
      for (int s = 0; s < n; ++s) {
        int k = 1 + static_cast<int>(rng.uniform_int(5));
        PointSet p(k, 3);
        for (auto& v : p.v) v = 2.0 * rng.uniform() - 1.0;
        sets.push_back(std::move(p));
      }
      return sets;
    };
    auto gen = random_sets(3);
    auto ref = random_sets(3);
    CHECK(chamfer(gen[0], ref[0]) == oracle_chamfer(gen[0], ref[0]));
    CHECK(coverage(gen, ref) == oracle_coverage(gen, ref));
    CHECK(mmd_chamfer(gen, ref) == oracle_mmd(gen, ref));
  }
}

TEST_CASE("occupancy_points picks voxel centers above the threshold") {
  FieldSample f;
  f.space = {SpaceKind::euclidean_grid_3d, {2, 2, 2}, 1};
  f.coords = grid_coordinates(f.space);
  f.signals.y = Mat(8, 1, -1.0);
  f.signals.y(3, 0) = 1.0;
  f.signals.y(6, 0) = 0.2;  // probability 0.6 > 0.5
  PointSet pts = occupancy_points(f);
  REQUIRE(pts.rows == 2);
  CHECK(pts(0, 0) == f.coords.m(3, 0));
  CHECK(pts(1, 2) == f.coords.m(6, 2));

  FieldSample rgb;
  rgb.space = {SpaceKind::euclidean_grid_2d, {2, 2}, 3};
  rgb.coords = grid_coordinates(rgb.space);
  rgb.signals.y = Mat(4, 3);
  CHECK_THROWS_AS(occupancy_points(rgb), UsageError);
}

TEST_CASE("occupancy_points pads 2-d coordinates with a zero third component") {
  FieldSample f = grid_field(2, 1.0);
  PointSet pts = occupancy_points(f);
  REQUIRE(pts.rows == 4);
  for (int r = 0; r < 4; ++r) CHECK(pts(r, 2) == 0.0);
}

TEST_CASE("moment_diagnostics: near-clean and terminal timesteps") {
  auto sched = NoiseSchedule::linear(1000, 1e-4, 0.02);
  Mat y0(4, 1);
  for (int i = 0; i < 4; ++i) y0(i, 0) = 0.2 * i - 0.3;

  auto early = moment_diagnostics(y0, 1, sched, 5000, 42);
  CHECK(early.expected_var == doctest::Approx(1e-4).epsilon(1e-9));
  CHECK(early.empirical_var < 2e-4);

  auto late = moment_diagnostics(y0, 1000, sched, 5000, 42);
  CHECK(late.expected_var == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(std::abs(late.empirical_mean) < 0.05);
  CHECK(std::abs(late.z_mean) < 4.0);
  CHECK(std::abs(late.z_var) < 4.0);

  CHECK_THROWS_AS(moment_diagnostics(y0, 1, sched, 50, 42), UsageError);
}
