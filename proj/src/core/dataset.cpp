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
#include "dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "serialize.hpp"

namespace dpf {

namespace fs = std::filesystem;

const std::vector<std::string> kDatasetKinds = {
    "two_mode_colors", "gaussian_blobs_2d", "checkerboards", "spheres_vs_cubes_3d",
    "spherical_blobs"};

int default_dataset_resolution(const std::string& kind) {
  if (kind == "two_mode_colors") return 8;
  if (kind == "spherical_blobs") return 8;  // bandwidth
  return 16;
}

namespace {

MetricSpaceSpec space_for(const std::string& kind, int res) {
  if (kind == "two_mode_colors") return {SpaceKind::euclidean_grid_2d, {res, res}, 3};
  if (kind == "gaussian_blobs_2d") return {SpaceKind::euclidean_grid_2d, {res, res}, 1};
  if (kind == "checkerboards") return {SpaceKind::euclidean_grid_2d, {res, res}, 1};
  if (kind == "spheres_vs_cubes_3d") return {SpaceKind::euclidean_grid_3d, {res, res, res}, 1};
  if (kind == "spherical_blobs") return {SpaceKind::sphere_dh, {res}, 1};
  throw UsageError("unknown dataset kind '" + kind + "'");
}

}  // namespace

FieldSample synthesize_field(const std::string& kind, const MetricSpaceSpec& space, Rng& rng) {
  FieldSample f;
  f.space = space;
  f.coords = coordinates_for(space);
  const int n = f.coords.m.rows;
  f.signals.y = Mat(n, space.signal_dim);

  if (kind == "two_mode_colors") {
    double mode = rng.uniform() < 0.5 ? 0.6 : -0.6;
    double color[3];
    for (double& c : color) c = std::clamp(mode + 0.1 * rng.gaussian(), -1.0, 1.0);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < 3; ++c) f.signals.y(r, c) = color[c];
  } else if (kind == "gaussian_blobs_2d") {
    int center = static_cast<int>(rng.uniform_int(n));
    double cx = f.coords.m(center, 0), cy = f.coords.m(center, 1);
    double w = 0.15 + 0.25 * rng.uniform();
    for (int r = 0; r < n; ++r) {
      double dx = f.coords.m(r, 0) - cx, dy = f.coords.m(r, 1) - cy;
      f.signals.y(r, 0) = 2.0 * std::exp(-(dx * dx + dy * dy) / (2.0 * w * w)) - 1.0;
    }
  } else if (kind == "checkerboards") {
    int h = space.extent[0], wdt = space.extent[1];
    int tile = rng.uniform() < 0.5 ? 2 : 4;
    int parity = static_cast<int>(rng.uniform_int(2));
    double amp = 0.5 + 0.5 * rng.uniform();
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < wdt; ++x)
        f.signals.y(y * wdt + x, 0) = ((x / tile + y / tile + parity) % 2 == 0) ? amp : -amp;
  } else if (kind == "spheres_vs_cubes_3d") {
    bool sphere = rng.uniform() < 0.5;
    double radius = 0.3 + 0.4 * rng.uniform();
    for (int r = 0; r < n; ++r) {
      double x = f.coords.m(r, 0), y = f.coords.m(r, 1), z = f.coords.m(r, 2);
      bool inside = sphere ? (x * x + y * y + z * z <= radius * radius)
                           : (std::max({std::abs(x), std::abs(y), std::abs(z)}) <= radius);
      f.signals.y(r, 0) = inside ? 1.0 : -1.0;
    }
  } else if (kind == "spherical_blobs") {
    double ux = rng.gaussian(), uy = rng.gaussian(), uz = rng.gaussian();
    double norm = std::sqrt(ux * ux + uy * uy + uz * uz);
    if (norm < 1e-12) norm = 1.0;
    ux /= norm; uy /= norm; uz /= norm;
    double kappa = 4.0 + 12.0 * rng.uniform();
    for (int r = 0; r < n; ++r) {
      double dot = f.coords.m(r, 0) * ux + f.coords.m(r, 1) * uy + f.coords.m(r, 2) * uz;
      f.signals.y(r, 0) = 2.0 * std::exp(kappa * (dot - 1.0)) - 1.0;
    }
  } else {
    throw UsageError("unknown dataset kind '" + kind + "'");
  }
  return f;
}

namespace {

std::string file_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06d.ften", index);
  return buf;
}

std::vector<int> signal_shape(const FieldSample& f) {
  std::vector<int> shape = f.space.extent;
  if (f.space.kind == SpaceKind::sphere_dh) shape = {2 * f.space.extent[0], 2 * f.space.extent[0]};
  shape.push_back(f.space.signal_dim);
  return shape;
}

}  // namespace

void synthesize_dataset(const std::string& kind, int count, uint64_t seed,
                        const std::string& out_dir, int resolution) {
  if (count < 1) throw UsageError("synthesize_dataset: count must be >= 1");
  MetricSpaceSpec space = space_for(kind, resolution > 0 ? resolution : default_dataset_resolution(kind));
  fs::create_directories(out_dir);

  nlohmann::json files = nlohmann::json::array();
  for (int i = 0; i < count; ++i) {
    Rng rng = Rng::for_step(seed, static_cast<uint64_t>(i));
    FieldSample f = synthesize_field(kind, space, rng);
    std::vector<float> data(f.signals.y.v.begin(), f.signals.y.v.end());
    std::string name = file_name(i);
    std::string path = (fs::path(out_dir) / name).string();
    write_tensor_file(path, signal_shape(f), data);
    char hash[32];
    std::snprintf(hash, sizeof(hash), "fnv1a64:%016llx",
                  static_cast<unsigned long long>(fnv1a64_file(path)));
    files.push_back({{"name", name}, {"hash", hash}});
  }

  nlohmann::json manifest;
  manifest["format"] = "dpf-dataset";
  manifest["version"] = 1;
  manifest["kind"] = kind;
  manifest["seed"] = seed;
  manifest["count"] = count;
  manifest["space"] = {{"kind", to_string(space.kind)},
                       {"extent", space.extent},
                       {"signal_dim", space.signal_dim}};
  manifest["files"] = std::move(files);
  std::ofstream out(fs::path(out_dir) / "manifest.json", std::ios::binary);
  if (!out) throw DataError("cannot write manifest in '" + out_dir + "'");
  out << manifest.dump(2) << "\n";
  if (!out.flush()) throw DataError("manifest write failed in '" + out_dir + "'");
}

namespace {

Dataset load_pixmap_dir(const std::string& dir) {
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    if (ext == ".ppm" || ext == ".pgm") names.push_back(entry.path().filename().string());
  }
  if (names.empty())
    throw DataError("'" + dir + "' has neither manifest.json nor any .ppm/.pgm files");
  std::sort(names.begin(), names.end());
  Dataset ds;
  ds.kind = "pixmaps";
  for (const auto& name : names) {
    FieldSample f = read_pixmap_field((fs::path(dir) / name).string());
    if (ds.fields.empty())
      ds.space = f.space;
    else if (!(f.space == ds.space))
      throw DataError("pixmap '" + name + "' geometry differs from the rest of the directory");
    ds.fields.push_back(std::move(f));
  }
  return ds;
}

}  // namespace

Dataset load_dataset(const std::string& dir) {
  fs::path manifest_path = fs::path(dir) / "manifest.json";
  if (!fs::exists(manifest_path)) return load_pixmap_dir(dir);

  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + manifest_path.string() + "'");
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed manifest in '" + dir + "': " + e.what());
  }
  Dataset ds;
  try {
    if (manifest.at("format").get<std::string>() != "dpf-dataset")
      throw DataError("'" + dir + "' manifest is not a dpf dataset");
    if (manifest.at("version").get<int>() != 1)
      throw DataError("'" + dir + "' manifest has unsupported version");
    ds.kind = manifest.at("kind").get<std::string>();
    ds.seed = manifest.at("seed").get<uint64_t>();
    const auto& sp = manifest.at("space");
    ds.space.kind = space_kind_from_string(sp.at("kind").get<std::string>());
    ds.space.extent = sp.at("extent").get<std::vector<int>>();
    ds.space.signal_dim = sp.at("signal_dim").get<int>();
    ds.space.validate();

    CoordinateSet coords = coordinates_for(ds.space);
    for (const auto& entry : manifest.at("files")) {
      std::string name = entry.at("name").get<std::string>();
      std::string path = (fs::path(dir) / name).string();
      char hash[32];
      std::snprintf(hash, sizeof(hash), "fnv1a64:%016llx",
                    static_cast<unsigned long long>(fnv1a64_file(path)));
      if (entry.at("hash").get<std::string>() != hash)
        throw DataError("dataset file '" + name + "' failed its manifest hash check");
      auto [shape, data] = read_tensor_file(path);
      int64_t numel = 1;
      for (int d : shape) numel *= d;
      if (numel != static_cast<int64_t>(coords.m.rows) * ds.space.signal_dim)
        throw DataError("dataset file '" + name + "' does not match the manifest geometry");
      FieldSample f;
      f.space = ds.space;
      f.coords = coords;
      f.signals.y = Mat(coords.m.rows, ds.space.signal_dim);
      for (size_t i = 0; i < data.size(); ++i) f.signals.y.v[i] = data[i];
      ds.fields.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed manifest in '" + dir + "': " + e.what());
  }
  return ds;
}

}  // namespace dpf
