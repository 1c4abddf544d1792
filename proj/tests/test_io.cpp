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

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>

#include "config.hpp"
#include "dataset.hpp"
#include "serialize.hpp"

using namespace dpf;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("dpf_io_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::vector<char> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RunConfig tiny_run_config() {
  RunConfig cfg;
  cfg.field = {SpaceKind::euclidean_grid_2d, {4, 4}, 1};
  cfg.schedule = {12, 1e-3, 0.05, SigmaRule::beta};
  cfg.model.architecture = ScoreArch::cross_attention;
  cfg.model.n_latents = 4;
  cfg.model.d_latent = 8;
  cfg.model.n_blocks = 1;
  cfg.model.self_attends_per_block = 1;
  cfg.model.n_heads = 2;
  cfg.model.decoder_blocks = 1;
  cfg.model.coord_freqs = 2;
  cfg.model.time_freqs = 2;
  cfg.model.signal_dim = 1;
  cfg.model.coord_dim = 2;
  cfg.train.steps = 6;
  cfg.train.batch_size = 2;
  cfg.train.n_context = 6;
  cfg.train.n_query = 6;
  cfg.train.adam.lr = 1e-3;
  cfg.train.seed = 3;
  return cfg;
}

std::vector<FieldSample> tiny_dataset(int n) {
  MetricSpaceSpec space{SpaceKind::euclidean_grid_2d, {4, 4}, 1};
  std::vector<FieldSample> out;
  for (int i = 0; i < n; ++i) {
    Rng rng = Rng::for_step(99, i);
    out.push_back(synthesize_field("gaussian_blobs_2d", space, rng));
  }
  return out;
}

}  // namespace

TEST_CASE("tensor file round trip and failure modes") {
  TempDir tmp;
  std::vector<float> data = {1.5f, -2.25f, 0.0f, 3.75f, 10.0f, -0.5f};
  write_tensor_file(tmp.file("a.ften"), {2, 3}, data);
  auto [shape, back] = read_tensor_file(tmp.file("a.ften"));
  CHECK(shape == std::vector<int>{2, 3});
  CHECK(back == data);

  // foreign magic
  {
    std::ofstream out(tmp.file("foreign.ften"), std::ios::binary);
    out << "NOPEnot a tensor at all";
  }
  CHECK_THROWS_AS(read_tensor_file(tmp.file("foreign.ften")), DataError);

  // truncation
  auto bytes = slurp(tmp.file("a.ften"));
  {
    std::ofstream out(tmp.file("short.ften"), std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 5));
  }
  CHECK_THROWS_AS(read_tensor_file(tmp.file("short.ften")), DataError);

  // trailing garbage
  {
    std::ofstream out(tmp.file("long.ften"), std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out << "extra";
  }
  CHECK_THROWS_AS(read_tensor_file(tmp.file("long.ften")), DataError);

  // unknown version
  {
    std::ofstream out(tmp.file("future.ften"), std::ios::binary);
    out << "FTEN";
    uint32_t version = 9;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  }
  CHECK_THROWS_WITH_AS(read_tensor_file(tmp.file("future.ften")), doctest::Contains("version"),
                       DataError);

  CHECK_THROWS_AS(write_tensor_file(tmp.file("bad.ften"), {2, 2}, data), UsageError);
}

TEST_CASE("pixmap endpoints and hand-computed payload") {
  TempDir tmp;
  FieldSample f;
  f.space = {SpaceKind::euclidean_grid_2d, {2, 2}, 3};
  f.coords = grid_coordinates(f.space);
  f.signals.y = Mat(4, 3, -1.0);
  write_pixmap(f, tmp.file("black.ppm"));
  auto black = slurp(tmp.file("black.ppm"));
  // header "P6\n2 2\n255\n" is 11 bytes, then 12 payload bytes
  REQUIRE(black.size() == 11 + 12);
  for (size_t i = 11; i < black.size(); ++i) CHECK(static_cast<uint8_t>(black[i]) == 0);

  for (auto& v : f.signals.y.v) v = 1.0;
  write_pixmap(f, tmp.file("white.ppm"));
  auto white = slurp(tmp.file("white.ppm"));
  for (size_t i = 11; i < white.size(); ++i) CHECK(static_cast<uint8_t>(white[i]) == 255);

  // known mixed values; bytes = round((s+1)*127.5), clamped
  double vals[4] = {-1.0, 0.0, 0.5, 2.0};
  for (int p = 0; p < 4; ++p)
    for (int c = 0; c < 3; ++c) f.signals.y(p, c) = vals[p];
  write_pixmap(f, tmp.file("mix.ppm"));
  auto mix = slurp(tmp.file("mix.ppm"));
  uint8_t expect[4] = {0, 128, 191, 255};
  for (int p = 0; p < 4; ++p)
    for (int c = 0; c < 3; ++c)
      CHECK(static_cast<uint8_t>(mix[11 + p * 3 + c]) == expect[p]);

  // 1-channel writes P5
  FieldSample g;
  g.space = {SpaceKind::euclidean_grid_2d, {1, 2}, 1};
  g.coords = grid_coordinates(g.space);
  g.signals.y = Mat(2, 1, 0.0);
  write_pixmap(g, tmp.file("gray.pgm"));
  auto gray = slurp(tmp.file("gray.pgm"));
  CHECK(gray[0] == 'P');
  CHECK(gray[1] == '5');

  FieldSample sphere;
  sphere.space = {SpaceKind::sphere_dh, {2}, 1};
  sphere.coords = sphere_coordinates(2);
  sphere.signals.y = Mat(16, 1);
  CHECK_THROWS_AS(write_pixmap(sphere, tmp.file("bad.pgm")), UsageError);
}

TEST_CASE("pixmap read-back matches field_from_image") {
  TempDir tmp;
  FieldSample f;
  f.space = {SpaceKind::euclidean_grid_2d, {3, 2}, 3};
  f.coords = grid_coordinates(f.space);
  f.signals.y = Mat(6, 3);
  Rng rng(8);
  for (auto& v : f.signals.y.v) v = 2.0 * rng.uniform() - 1.0;
  write_pixmap(f, tmp.file("rt.ppm"));
  FieldSample back = read_pixmap_field(tmp.file("rt.ppm"));
  CHECK(back.space == f.space);
  // round trip is exact at 8-bit resolution
  for (size_t i = 0; i < f.signals.y.v.size(); ++i) {
    long b0 = std::lround((std::clamp(f.signals.y.v[i], -1.0, 1.0) + 1.0) * 127.5);
    long b1 = std::lround((back.signals.y.v[i] + 1.0) * 127.5);
    CHECK(b0 == b1);
  }
}

TEST_CASE("config file parsing, defaults, and typo rejection") {
  TempDir tmp;
  {
    std::ofstream out(tmp.file("run.ini"));
    out << "# toy run\n"
        << "[field]\n"
        << "kind = euclidean_grid_2d\n"
        << "resolution = 4\n"
        << "signal_dim = 1\n"
        << "[schedule]\n"
        << "steps = 12\n"
        << "beta_start = 1e-3\n"
        << "beta_end = 0.05\n"
        << "[model]\n"
        << "architecture = mlp_mixer\n"
        << "n_latents = 4\n"
        << "d_latent = 8\n"
        << "n_blocks = 1\n"
        << "[train]\n"
        << "steps = 6\n"
        << "n_context = 6\n"
        << "n_query = 5\n"
        << "seed = 3\n";
  }
  RunConfig cfg = load_run_config(tmp.file("run.ini"));
  CHECK(cfg.field.extent == std::vector<int>{4, 4});
  CHECK(cfg.schedule.T == 12);
  CHECK(cfg.model.architecture == ScoreArch::mlp_mixer);
  CHECK(cfg.model.mixer_tokens == 6);  // pinned to n_context
  CHECK(cfg.model.coord_dim == 2);
  CHECK(cfg.model.signal_dim == 1);
  CHECK(cfg.train.adam.lr == 1e-4);       // default
  CHECK(cfg.sample.context_fraction == 1.0);  // default
  CHECK(cfg.train.n_query == 5);

  {
    std::ofstream out(tmp.file("typo.ini"));
    out << "[train]\nlearning_rate = 1e-3\n";
  }
  CHECK_THROWS_WITH_AS(load_run_config(tmp.file("typo.ini")),
                       doctest::Contains("learning_rate"), DataError);

  {
    std::ofstream out(tmp.file("badnum.ini"));
    out << "[schedule]\nbeta_start = fast\n";
  }
  CHECK_THROWS_AS(load_run_config(tmp.file("badnum.ini")), DataError);

  CHECK_THROWS_AS(load_run_config(tmp.file("missing.ini")), DataError);
}

TEST_CASE("run config json round trip preserves equality") {
  RunConfig cfg = tiny_run_config();
  nlohmann::json j = run_config_to_json(cfg);
  RunConfig back = run_config_from_json(j);
  CHECK(back == cfg);
  CHECK(run_config_to_json(back) == j);
}

TEST_CASE("checkpoint: save-load-save is byte identical, with failure modes") {
  TempDir tmp;
  RunConfig cfg = tiny_run_config();
  Trainer trainer(cfg.model, cfg.train, cfg.schedule.build(), tiny_dataset(4));
  for (int i = 0; i < 3; ++i) trainer.step();

  std::string p1 = tmp.file("a.dpf"), p2 = tmp.file("b.dpf");
  save_checkpoint(p1, checkpoint_from_trainer(trainer, cfg));
  Checkpoint loaded = load_checkpoint(p1);
  save_checkpoint(p2, loaded);
  CHECK(slurp(p1) == slurp(p2));
  CHECK(loaded.step == 3);
  CHECK(loaded.has_optimizer);

  // rebuilt trainer carries identical parameters
  Trainer resumed = trainer_from_checkpoint(loaded, tiny_dataset(4));
  CHECK(resumed.step_count() == 3);
  for (size_t i = 0; i < resumed.net().params().size(); ++i)
    CHECK(resumed.net().params()[i].second.values() ==
          trainer.net().params()[i].second.values());

  // truncation
  auto bytes = slurp(p1);
  {
    std::ofstream out(tmp.file("short.dpf"), std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  CHECK_THROWS_AS(load_checkpoint(tmp.file("short.dpf")), DataError);

  // foreign magic
  {
    std::ofstream out(tmp.file("foreign.dpf"), std::ios::binary);
    out << "FTENdefinitely not a checkpoint";
  }
  CHECK_THROWS_AS(load_checkpoint(tmp.file("foreign.dpf")), DataError);

  // unknown version
  {
    std::ofstream out(tmp.file("future.dpf"), std::ios::binary);
    out << "DPF1";
    uint32_t version = 2;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  }
  CHECK_THROWS_WITH_AS(load_checkpoint(tmp.file("future.dpf")), doctest::Contains("version"),
                       DataError);

  // config mismatch: the embedded config no longer matches the tensor table
  Checkpoint mismatched = loaded;
  mismatched.config.model.n_latents = 16;
  CHECK_THROWS_WITH_AS(trainer_from_checkpoint(mismatched, tiny_dataset(4)),
                       doctest::Contains("n_latents"), DataError);
}

TEST_CASE("dataset synthesis is deterministic and loadable") {
  TempDir tmp;
  synthesize_dataset("two_mode_colors", 3, 42, tmp.file("d1"));
  synthesize_dataset("two_mode_colors", 3, 42, tmp.file("d2"));
  for (const char* name : {"manifest.json", "000000.ften", "000001.ften", "000002.ften"})
    CHECK(slurp((fs::path(tmp.file("d1")) / name).string()) ==
          slurp((fs::path(tmp.file("d2")) / name).string()));

  Dataset ds = load_dataset(tmp.file("d1"));
  CHECK(ds.kind == "two_mode_colors");
  CHECK(ds.fields.size() == 3);
  CHECK(ds.space.signal_dim == 3);
  // solid fields: every pixel carries the field's color
  for (const auto& f : ds.fields)
    for (int r = 1; r < f.size(); ++r)
      for (int c = 0; c < 3; ++c) CHECK(f.signals.y(r, c) == f.signals.y(0, c));

  CHECK_THROWS_AS(synthesize_dataset("no_such_kind", 2, 1, tmp.file("bad")), UsageError);
}

TEST_CASE("dataset load verifies manifest hashes") {
  TempDir tmp;
  synthesize_dataset("checkerboards", 2, 7, tmp.file("d"));
  // corrupt one payload byte
  std::string victim = (fs::path(tmp.file("d")) / "000001.ften").string();
  auto bytes = slurp(victim);
  bytes.back() = static_cast<char>(bytes.back() ^ 0x40);
  {
    std::ofstream out(victim, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_THROWS_WITH_AS(load_dataset(tmp.file("d")), doctest::Contains("hash"), DataError);
}

TEST_CASE("gaussian blob fields peak at the center cell") {
  MetricSpaceSpec space{SpaceKind::euclidean_grid_2d, {16, 16}, 1};
  for (uint64_t i = 0; i < 8; ++i) {
    Rng rng = Rng::for_step(5, i);
    FieldSample f = synthesize_field("gaussian_blobs_2d", space, rng);
    int peaks = 0;
    double best = -2.0;
    for (int r = 0; r < f.size(); ++r)
      if (f.signals.y(r, 0) > best) best = f.signals.y(r, 0);
    for (int r = 0; r < f.size(); ++r)
      if (f.signals.y(r, 0) == best) ++peaks;
    CHECK(best == doctest::Approx(1.0));  // exp(0) at the center cell
    CHECK(peaks == 1);
  }
}

TEST_CASE("occupancy recipe matches a voxel-counting oracle") {
  MetricSpaceSpec space{SpaceKind::euclidean_grid_3d, {16, 16, 16}, 1};
  CoordinateSet coords = grid_coordinates(space);
  int sphere_checked = 0;
  for (uint64_t i = 0; i < 12; ++i) {
    Rng rng = Rng::for_step(21, i);
    FieldSample f = synthesize_field("spheres_vs_cubes_3d", space, rng);
    int occupied = 0;
    double r2_sphere = 0, r_cube = 0;  // squared norm avoids sqrt rounding
    for (int r = 0; r < f.size(); ++r) {
      if (f.signals.y(r, 0) != 1.0) continue;
      ++occupied;
      double x = coords.m(r, 0), y = coords.m(r, 1), z = coords.m(r, 2);
      r2_sphere = std::max(r2_sphere, x * x + y * y + z * z);
      r_cube = std::max({r_cube, std::abs(x), std::abs(y), std::abs(z)});
    }
    REQUIRE(occupied > 0);
    // voxel-counting oracle under each hypothesis
    int count_sphere = 0, count_cube = 0;
    for (int r = 0; r < coords.m.rows; ++r) {
      double x = coords.m(r, 0), y = coords.m(r, 1), z = coords.m(r, 2);
      if (x * x + y * y + z * z <= r2_sphere) ++count_sphere;
      if (std::max({std::abs(x), std::abs(y), std::abs(z)}) <= r_cube) ++count_cube;
    }
    bool is_sphere = count_sphere == occupied;
    bool is_cube = count_cube == occupied;
    CHECK((is_sphere || is_cube));
    if (is_sphere && !is_cube && r2_sphere > 0.2) {
      // analytic volume fraction (pi/6) r^3, order check at 16^3
      double frac = static_cast<double>(occupied) / coords.m.rows;
      double analytic = M_PI / 6.0 * std::pow(r2_sphere, 1.5);
      CHECK(frac == doctest::Approx(analytic).epsilon(0.4));
      ++sphere_checked;
    }
  }
  CHECK(sphere_checked > 0);
}

TEST_CASE("spherical blob fields live on the Driscoll-Healy grid with bounded signals") {
  MetricSpaceSpec space{SpaceKind::sphere_dh, {4}, 1};
  Rng rng = Rng::for_step(3, 0);
  FieldSample f = synthesize_field("spherical_blobs", space, rng);
  CHECK(f.size() == 64);
  double mx = -2;
  for (double v : f.signals.y.v) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
    mx = std::max(mx, v);
  }
  CHECK(mx > -0.5);  // the bump is visible somewhere
}

TEST_CASE("pixmap directories load as datasets (ingest path)") {
  TempDir tmp;
  fs::create_directories(tmp.file("pix"));
  for (int i = 0; i < 2; ++i) {
    FieldSample f;
    f.space = {SpaceKind::euclidean_grid_2d, {4, 4}, 1};
    f.coords = grid_coordinates(f.space);
    f.signals.y = Mat(16, 1, i == 0 ? -0.5 : 0.5);
    write_pixmap(f, (fs::path(tmp.file("pix")) / ("img" + std::to_string(i) + ".pgm")).string());
  }
  Dataset ds = load_dataset(tmp.file("pix"));
  CHECK(ds.kind == "pixmaps");
  CHECK(ds.fields.size() == 2);
  CHECK(ds.space.extent == std::vector<int>{4, 4});

  CHECK_THROWS_AS(load_dataset(tmp.file("empty_dir_that_does_not_exist")), std::exception);
}
