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

#include "common.hpp"
#include "rng.hpp"

// Fields are explicit coordinate-signal tables over a metric space.
// Coordinates are normalized to [-1, 1] per axis (grids) or unit vectors
// (sphere); signals are normalized to [-1, 1] per channel. The coordinate
// block of any set is never modified by diffusion.

namespace dpf {

enum class SpaceKind { euclidean_grid_2d, euclidean_grid_3d, sphere_dh };

std::string to_string(SpaceKind k);
SpaceKind space_kind_from_string(const std::string& s);

struct MetricSpaceSpec {
  SpaceKind kind = SpaceKind::euclidean_grid_2d;
  // euclidean_grid_2d: {h, w}; euclidean_grid_3d: {d, h, w}; sphere_dh: {b}
  std::vector<int> extent;
  int signal_dim = 1;

  void validate() const;
  int coord_dim() const { return kind == SpaceKind::euclidean_grid_2d ? 2 : 3; }
  int point_count() const;
  /// Same space with every grid axis (or the bandwidth) set to `res`.
  MetricSpaceSpec with_resolution(int res) const;
  bool operator==(const MetricSpaceSpec&) const = default;
};

struct CoordinateSet {
  Mat m;  // [n_points x coord_dim]
};

struct SignalSet {
  Mat y;  // [n_points x signal_dim]
};

/// Row-stacked coordinate-signal pairs at one timestep. Context and query
/// sets share the representation; rows carry no order semantics.
struct PairSet {
  CoordinateSet coords;
  SignalSet signals;
  int t = 0;

  int size() const { return coords.m.rows; }
};

using ContextSet = PairSet;
using QuerySet = PairSet;

/// One training example: the full coordinate-signal table of a field.
struct FieldSample {
  MetricSpaceSpec space;
  CoordinateSet coords;
  SignalSet signals;

  int size() const { return coords.m.rows; }
};

/// Cell-center coordinates of a 2-d or 3-d grid, row-major (x fastest),
/// each axis normalized so cell i of n sits at (2i+1)/n - 1.
CoordinateSet grid_coordinates(const MetricSpaceSpec& spec);

/// Equiangular Driscoll-Healy sampling of the unit sphere at bandwidth b:
/// 2b x 2b points, colatitude theta_j = pi(2j+1)/(4b), longitude
/// phi_k = pi k / b, embedded in R^3.
CoordinateSet sphere_coordinates(int bandwidth);

CoordinateSet coordinates_for(const MetricSpaceSpec& spec);

/// Fourier frequency ladder: for each input scalar m and frequency
/// 2^l pi (l = 0..L-1), emits [sin, cos], concatenated across input
/// dimensions. Output is [n x 2*L*d]; raw coordinates are not included
/// here (the embedding layer appends them).
Mat fourier_encode(const Mat& coords, int num_freqs);

std::vector<double> fourier_encode_scalar(double m, int num_freqs);

/// Image raster -> field on a 2-d grid. Accepts 8-bit [0,255] or float
/// [0,1] pixel values (pixels laid out [h x w x c] row-major) and rescales
/// signals to [-1, 1] per channel.
FieldSample field_from_image(const std::vector<double>& pixels, int h, int w, int channels,
                             bool bytes_0_255);

/// Lift a 2-d grid field onto a Driscoll-Healy sphere grid. Each sphere
/// point (x,y,z) maps to the plane at (u,v) = (x,y)/(1+z); plane points in
/// [-1,1]^2 sample the image (bilinear by default), everything else takes
/// `fill`. The plane point (u,v) corresponds to the sphere point
/// (2u, 2v, 1-u^2-v^2)/(1+u^2+v^2).
FieldSample stereographic_lift(const FieldSample& image_field, int bandwidth, double fill = -1.0,
                               bool nearest = false);

/// Uniform subsets (without replacement) of a field's pair table, sampled
/// independently for context and query at t=0. With `disjoint` the query
/// subset is drawn from the rows not already used as context.
std::pair<ContextSet, QuerySet> subsample_pairs(const FieldSample& field, int n_context,
                                                int n_query, Rng& rng, bool disjoint = false);

}  // namespace dpf
