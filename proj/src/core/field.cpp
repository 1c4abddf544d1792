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
#include "field.hpp"

#include <algorithm>
#include <cmath>

namespace dpf {

std::string to_string(SpaceKind k) {
  switch (k) {
    case SpaceKind::euclidean_grid_2d: return "euclidean_grid_2d";
    case SpaceKind::euclidean_grid_3d: return "euclidean_grid_3d";
    case SpaceKind::sphere_dh: return "sphere_dh";
  }
  return "?";
}

SpaceKind space_kind_from_string(const std::string& s) {
  if (s == "euclidean_grid_2d") return SpaceKind::euclidean_grid_2d;
  if (s == "euclidean_grid_3d") return SpaceKind::euclidean_grid_3d;
  if (s == "sphere_dh") return SpaceKind::sphere_dh;
  throw UsageError("unknown metric space kind '" + s + "'");
}

void MetricSpaceSpec::validate() const {
  size_t want = kind == SpaceKind::euclidean_grid_2d ? 2 : kind == SpaceKind::euclidean_grid_3d ? 3 : 1;
  if (extent.size() != want)
    throw UsageError("metric space " + to_string(kind) + ": expected " + std::to_string(want) +
                     " extent values, got " + std::to_string(extent.size()));
  for (int e : extent)
    if (e < 1) throw UsageError("metric space: extents must be positive");
  if (signal_dim < 1) throw UsageError("metric space: signal_dim must be positive");
}

int MetricSpaceSpec::point_count() const {
  validate();
  if (kind == SpaceKind::sphere_dh) return 4 * extent[0] * extent[0];
  int n = 1;
  for (int e : extent) n *= e;
  return n;
}

MetricSpaceSpec MetricSpaceSpec::with_resolution(int res) const {
  if (res < 1) throw UsageError("with_resolution: resolution must be positive");
  MetricSpaceSpec out = *this;
  for (int& e : out.extent) e = res;
  return out;
}

namespace {
double cell_center(int i, int n) { return (2.0 * i + 1.0) / static_cast<double>(n) - 1.0; }
}  // namespace

CoordinateSet grid_coordinates(const MetricSpaceSpec& spec) {
  spec.validate();
  if (spec.kind == SpaceKind::euclidean_grid_2d) {
    int h = spec.extent[0], w = spec.extent[1];
    Mat m(h * w, 2);
    int r = 0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x, ++r) {
        m(r, 0) = cell_center(x, w);
        m(r, 1) = cell_center(y, h);
      }
    return {std::move(m)};
  }
  if (spec.kind == SpaceKind::euclidean_grid_3d) {
    int d = spec.extent[0], h = spec.extent[1], w = spec.extent[2];
    Mat m(d * h * w, 3);
    int r = 0;
    for (int z = 0; z < d; ++z)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x, ++r) {
          m(r, 0) = cell_center(x, w);
          m(r, 1) = cell_center(y, h);
          m(r, 2) = cell_center(z, d);
        }
    return {std::move(m)};
  }
  throw UsageError("grid_coordinates: metric space is " + to_string(spec.kind));
}

CoordinateSet sphere_coordinates(int bandwidth) {
  if (bandwidth < 1) throw UsageError("sphere_coordinates: bandwidth must be >= 1");
  int n = 2 * bandwidth;
  Mat m(n * n, 3);
  int r = 0;
  for (int j = 0; j < n; ++j) {
    double theta = M_PI * (2.0 * j + 1.0) / (4.0 * bandwidth);
    double st = std::sin(theta), ct = std::cos(theta);
    for (int k = 0; k < n; ++k, ++r) {
      double phi = M_PI * k / bandwidth;
      m(r, 0) = st * std::cos(phi);
      m(r, 1) = st * std::sin(phi);
      m(r, 2) = ct;
    }
  }
  return {std::move(m)};
}

CoordinateSet coordinates_for(const MetricSpaceSpec& spec) {
  if (spec.kind == SpaceKind::sphere_dh) return sphere_coordinates(spec.extent[0]);
  return grid_coordinates(spec);
}

Mat fourier_encode(const Mat& coords, int num_freqs) {
  if (num_freqs < 1) throw UsageError("fourier_encode: num_freqs must be >= 1");
  int d = coords.cols;
  Mat out(coords.rows, 2 * num_freqs * d);
  for (int r = 0; r < coords.rows; ++r) {
    int c = 0;
    for (int j = 0; j < d; ++j) {
      double m = coords(r, j);
      double f = M_PI;
      for (int l = 0; l < num_freqs; ++l, f *= 2.0) {
        out(r, c++) = std::sin(f * m);
        out(r, c++) = std::cos(f * m);
      }
    }
  }
  return out;
}

std::vector<double> fourier_encode_scalar(double m, int num_freqs) {
  Mat in(1, 1);
  in(0, 0) = m;
  Mat enc = fourier_encode(in, num_freqs);
  return enc.v;
}

FieldSample field_from_image(const std::vector<double>& pixels, int h, int w, int channels,
                             bool bytes_0_255) {
  if (h < 1 || w < 1 || channels < 1) throw DataError("field_from_image: empty raster");
  if (pixels.size() != static_cast<size_t>(h) * w * channels)
    throw DataError("field_from_image: pixel buffer length " + std::to_string(pixels.size()) +
                    " does not match " + std::to_string(h) + "x" + std::to_string(w) + "x" +
                    std::to_string(channels));
  FieldSample f;
  f.space = {SpaceKind::euclidean_grid_2d, {h, w}, channels};
  f.coords = grid_coordinates(f.space);
  f.signals.y = Mat(h * w, channels);
  for (int p = 0; p < h * w; ++p)
    for (int c = 0; c < channels; ++c) {
      double v = pixels[static_cast<size_t>(p) * channels + c];
      f.signals.y(p, c) = bytes_0_255 ? v / 127.5 - 1.0 : 2.0 * v - 1.0;
    }
  return f;
}

namespace {

double sample_image(const FieldSample& img, double u, double v, int channel, bool nearest) {
  int h = img.space.extent[0], w = img.space.extent[1];
  // cell-center aligned continuous pixel coordinates
  double fx = (u + 1.0) * 0.5 * w - 0.5;
  double fy = (v + 1.0) * 0.5 * h - 0.5;
  auto at = [&](int x, int y) {
    x = std::clamp(x, 0, w - 1);
    y = std::clamp(y, 0, h - 1);
    return img.signals.y(y * w + x, channel);
  };
  if (nearest) return at(static_cast<int>(std::lround(fx)), static_cast<int>(std::lround(fy)));
  int x0 = static_cast<int>(std::floor(fx)), y0 = static_cast<int>(std::floor(fy));
  double ax = fx - x0, ay = fy - y0;
  double top = (1.0 - ax) * at(x0, y0) + ax * at(x0 + 1, y0);
  double bot = (1.0 - ax) * at(x0, y0 + 1) + ax * at(x0 + 1, y0 + 1);
  return (1.0 - ay) * top + ay * bot;
}

}  // namespace

FieldSample stereographic_lift(const FieldSample& image_field, int bandwidth, double fill,
                               bool nearest) {
  if (image_field.space.kind != SpaceKind::euclidean_grid_2d)
    throw UsageError("stereographic_lift: source must be a 2-d grid field, got " +
                     to_string(image_field.space.kind));
  FieldSample out;
  out.space = {SpaceKind::sphere_dh, {bandwidth}, image_field.space.signal_dim};
  out.coords = sphere_coordinates(bandwidth);
  int n = out.coords.m.rows;
  int ch = out.space.signal_dim;
  out.signals.y = Mat(n, ch);
  for (int r = 0; r < n; ++r) {
    double x = out.coords.m(r, 0), y = out.coords.m(r, 1), z = out.coords.m(r, 2);
    double denom = 1.0 + z;  // DH grid never hits the pole exactly
    double u = x / denom, v = y / denom;
    bool inside = denom > 1e-12 && std::abs(u) <= 1.0 && std::abs(v) <= 1.0;
    for (int c = 0; c < ch; ++c)
      out.signals.y(r, c) = inside ? sample_image(image_field, u, v, c, nearest) : fill;
  }
  return out;
}

std::pair<ContextSet, QuerySet> subsample_pairs(const FieldSample& field, int n_context,
                                                int n_query, Rng& rng, bool disjoint) {
  int n = field.size();
  if (n_context < 1 || n_context > n || n_query < 1 || n_query > n)
    throw UsageError("subsample_pairs: counts (" + std::to_string(n_context) + ", " +
                     std::to_string(n_query) + ") outside [1, " + std::to_string(n) + "]");
  if (disjoint && n_context + n_query > n)
    throw UsageError("subsample_pairs: disjoint sampling needs n_context + n_query <= field size");

  std::vector<int> ctx_idx, qry_idx;
  if (disjoint) {
    auto both = rng.sample_without_replacement(n, n_context + n_query);
    ctx_idx.assign(both.begin(), both.begin() + n_context);
    qry_idx.assign(both.begin() + n_context, both.end());
  } else {
    ctx_idx = rng.sample_without_replacement(n, n_context);
    qry_idx = rng.sample_without_replacement(n, n_query);
  }
  ContextSet ctx{{field.coords.m.take_rows(ctx_idx)}, {field.signals.y.take_rows(ctx_idx)}, 0};
  QuerySet qry{{field.coords.m.take_rows(qry_idx)}, {field.signals.y.take_rows(qry_idx)}, 0};
  return {std::move(ctx), std::move(qry)};
}

}  // namespace dpf
