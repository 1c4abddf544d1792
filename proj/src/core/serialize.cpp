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
#include "serialize.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian; big-endian hosts are unsupported");

namespace dpf {

namespace {

constexpr uint32_t kTensorVersion = 1;
constexpr uint32_t kCheckpointVersion = 1;
constexpr uint32_t kElemF32 = 1;

class Writer {
public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw DataError("cannot open '" + path + "' for writing");
    path_ = path;
  }
  void bytes(const void* p, size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  template <class T>
  void pod(T v) {
    bytes(&v, sizeof(T));
  }
  void finish() {
    out_.flush();
    if (!out_) throw DataError("write failed for '" + path_ + "'");
  }

private:
  std::ofstream out_;
  std::string path_;
};

class Reader {
public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw DataError("cannot open '" + path + "'");
  }
  void bytes(void* p, size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n))
      throw DataError("'" + path_ + "' is truncated or corrupt");
  }
  template <class T>
  T pod() {
    T v;
    bytes(&v, sizeof(T));
    return v;
  }
  void expect_magic(const char magic[4], const char* what) {
    char buf[4];
    bytes(buf, 4);
    if (std::memcmp(buf, magic, 4) != 0)
      throw DataError("'" + path_ + "' is not a " + what + " file (bad magic)");
  }
  bool at_eof() {
    return in_.peek() == std::ifstream::traits_type::eof();
  }
  const std::string& path() const { return path_; }

private:
  std::ifstream in_;
  std::string path_;
};

}  // namespace

void write_tensor_file(const std::string& path, const std::vector<int>& shape,
                       const std::vector<float>& data) {
  int64_t numel = 1;
  for (int d : shape) numel *= d;
  if (shape.empty() || numel != static_cast<int64_t>(data.size()))
    throw UsageError("write_tensor_file: shape does not match payload length");
  Writer w(path);
  w.bytes("FTEN", 4);
  w.pod<uint32_t>(kTensorVersion);
  w.pod<uint32_t>(kElemF32);
  w.pod<uint32_t>(static_cast<uint32_t>(shape.size()));
  for (int d : shape) w.pod<int64_t>(d);
  w.bytes(data.data(), data.size() * sizeof(float));
  w.finish();
}

std::pair<std::vector<int>, std::vector<float>> read_tensor_file(const std::string& path) {
  Reader r(path);
  r.expect_magic("FTEN", "field tensor");
  uint32_t version = r.pod<uint32_t>();
  if (version != kTensorVersion)
    throw DataError("'" + path + "': unsupported tensor file version " + std::to_string(version));
  uint32_t elem = r.pod<uint32_t>();
  if (elem != kElemF32)
    throw DataError("'" + path + "': unsupported element type tag " + std::to_string(elem));
  uint32_t rank = r.pod<uint32_t>();
  if (rank == 0 || rank > 8) throw DataError("'" + path + "': implausible rank " + std::to_string(rank));
  std::vector<int> shape(rank);
  int64_t numel = 1;
  for (auto& d : shape) {
    int64_t v = r.pod<int64_t>();
    if (v < 1 || v > (1 << 24)) throw DataError("'" + path + "': implausible dimension");
    d = static_cast<int>(v);
    numel *= v;
  }
  std::vector<float> data(static_cast<size_t>(numel));
  r.bytes(data.data(), data.size() * sizeof(float));
  if (!r.at_eof()) throw DataError("'" + path + "': trailing bytes after payload");
  return {std::move(shape), std::move(data)};
}

void write_pixmap(const FieldSample& field, const std::string& path) {
  if (field.space.kind != SpaceKind::euclidean_grid_2d)
    throw UsageError("write_pixmap: field must live on a 2-d grid, got " +
                     to_string(field.space.kind));
  int ch = field.space.signal_dim;
  if (ch != 1 && ch != 3)
    throw UsageError("write_pixmap: 1 or 3 channels required, got " + std::to_string(ch));
  int h = field.space.extent[0], w = field.space.extent[1];
  Writer out(path);
  std::string header = std::string(ch == 1 ? "P5" : "P6") + "\n" + std::to_string(w) + " " +
                       std::to_string(h) + "\n255\n";
  out.bytes(header.data(), header.size());
  std::vector<uint8_t> row(static_cast<size_t>(w) * ch);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) {
        double s = std::clamp(field.signals.y(y * w + x, c), -1.0, 1.0);
        long b = std::lround((s + 1.0) * 127.5);
        row[static_cast<size_t>(x) * ch + c] = static_cast<uint8_t>(std::clamp(b, 0L, 255L));
      }
    out.bytes(row.data(), row.size());
  }
  out.finish();
}

FieldSample read_pixmap_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string magic;
  in >> magic;
  if (magic != "P5" && magic != "P6")
    throw DataError("'" + path + "' is not a binary P5/P6 pixmap");
  int ch = magic == "P5" ? 1 : 3;
  auto next_int = [&](const char* what) {
    // skip whitespace and '#' comment lines
    int c;
    while ((c = in.peek()) != EOF) {
      if (std::isspace(c)) {
        in.get();
      } else if (c == '#') {
        std::string line;
        std::getline(in, line);
      } else {
        break;
      }
    }
    int64_t v;
    if (!(in >> v)) throw DataError("'" + path + "': malformed pixmap header (" + what + ")");
    return v;
  };
  int64_t w = next_int("width"), h = next_int("height"), maxval = next_int("maxval");
  if (w < 1 || h < 1 || maxval != 255)
    throw DataError("'" + path + "': unsupported pixmap geometry or maxval");
  in.get();  // single whitespace after maxval
  std::vector<unsigned char> bytes(static_cast<size_t>(w) * h * ch);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
    throw DataError("'" + path + "': pixmap payload truncated");
  std::vector<double> pixels(bytes.begin(), bytes.end());
  return field_from_image(pixels, static_cast<int>(h), static_cast<int>(w), ch,
                          /*bytes_0_255=*/true);
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  if (ckpt.names.size() != ckpt.shapes.size() || ckpt.names.size() != ckpt.tensors.size())
    throw UsageError("save_checkpoint: inconsistent tensor inventory");
  nlohmann::json j;
  j["config"] = run_config_to_json(ckpt.config);
  j["step"] = ckpt.step;
  j["seed"] = ckpt.seed;
  nlohmann::json params = nlohmann::json::array();
  for (size_t i = 0; i < ckpt.names.size(); ++i)
    params.push_back({{"name", ckpt.names[i]}, {"shape", ckpt.shapes[i]}});
  j["params"] = std::move(params);
  j["optimizer"] = {{"present", ckpt.has_optimizer}, {"step", ckpt.adam_step}};
  std::string header = j.dump();

  Writer w(path);
  w.bytes("DPF1", 4);
  w.pod<uint32_t>(kCheckpointVersion);
  w.pod<uint64_t>(header.size());
  w.bytes(header.data(), header.size());
  for (const auto& t : ckpt.tensors) w.bytes(t.data(), t.size() * sizeof(float));
  if (ckpt.has_optimizer) {
    if (ckpt.adam_m.size() != ckpt.tensors.size() || ckpt.adam_v.size() != ckpt.tensors.size())
      throw UsageError("save_checkpoint: optimizer state does not match tensors");
    for (const auto& m : ckpt.adam_m) w.bytes(m.data(), m.size() * sizeof(float));
    for (const auto& v : ckpt.adam_v) w.bytes(v.data(), v.size() * sizeof(float));
  }
  w.finish();
}

Checkpoint load_checkpoint(const std::string& path) {
  Reader r(path);
  r.expect_magic("DPF1", "dpf checkpoint");
  uint32_t version = r.pod<uint32_t>();
  if (version != kCheckpointVersion)
    throw DataError("'" + path + "': unsupported checkpoint version " + std::to_string(version));
  uint64_t hlen = r.pod<uint64_t>();
  if (hlen == 0 || hlen > (64ull << 20)) throw DataError("'" + path + "': implausible header length");
  std::string header(hlen, '\0');
  r.bytes(header.data(), hlen);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("'" + path + "': corrupt checkpoint header: " + e.what());
  }
  Checkpoint ckpt;
  try {
    ckpt.config = run_config_from_json(j.at("config"));
    ckpt.step = j.at("step").get<int64_t>();
    ckpt.seed = j.at("seed").get<uint64_t>();
    for (const auto& p : j.at("params")) {
      ckpt.names.push_back(p.at("name").get<std::string>());
      ckpt.shapes.push_back(p.at("shape").get<std::vector<int>>());
    }
    ckpt.has_optimizer = j.at("optimizer").at("present").get<bool>();
    ckpt.adam_step = j.at("optimizer").at("step").get<int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("'" + path + "': corrupt checkpoint header: " + e.what());
  }
  for (size_t i = 0; i < ckpt.names.size(); ++i) {
    int64_t numel = 1;
    for (int d : ckpt.shapes[i]) numel *= d;
    if (numel < 0 || numel > (1ll << 31)) throw DataError("'" + path + "': implausible tensor size");
    std::vector<float> data(static_cast<size_t>(numel));
    r.bytes(data.data(), data.size() * sizeof(float));
    ckpt.tensors.push_back(std::move(data));
  }
  if (ckpt.has_optimizer) {
    auto read_bank = [&](std::vector<std::vector<float>>& bank) {
      for (const auto& t : ckpt.tensors) {
        std::vector<float> data(t.size());
        r.bytes(data.data(), data.size() * sizeof(float));
        bank.push_back(std::move(data));
      }
    };
    read_bank(ckpt.adam_m);
    read_bank(ckpt.adam_v);
  }
  if (!r.at_eof()) throw DataError("'" + path + "': trailing bytes after payload");
  return ckpt;
}

Checkpoint checkpoint_from_trainer(const Trainer& trainer, const RunConfig& cfg) {
  Checkpoint ckpt;
  ckpt.config = cfg;
  ckpt.step = trainer.step_count();
  ckpt.seed = trainer.train_config().seed;
  const auto& params = trainer.net().params();
  for (const auto& [name, t] : params) {
    ckpt.names.push_back(name);
    ckpt.shapes.push_back(t.shape());
    ckpt.tensors.emplace_back(t.data(), t.data() + t.numel());
  }
  ckpt.has_optimizer = true;
  const auto& adam = trainer.optimizer();
  ckpt.adam_step = adam.step_count();
  ckpt.adam_m = adam.first_moments();
  ckpt.adam_v = adam.second_moments();
  return ckpt;
}

namespace {

void load_params_into(const Checkpoint& ckpt, nn::ParameterStore<float>& params) {
  if (params.size() != ckpt.names.size())
    throw DataError("checkpoint holds " + std::to_string(ckpt.names.size()) +
                    " tensors but the config builds " + std::to_string(params.size()) +
                    "; embedded config:\n" + run_config_to_text(ckpt.config));
  for (size_t i = 0; i < params.size(); ++i) {
    auto& [name, t] = params[i];
    if (name != ckpt.names[i] || t.shape() != ckpt.shapes[i])
      throw DataError("checkpoint tensor '" + ckpt.names[i] + "' " +
                      nn::to_string(ckpt.shapes[i]) + " does not match parameter '" + name +
                      "' " + nn::to_string(t.shape()) + " built from the embedded config:\n" +
                      run_config_to_text(ckpt.config));
    std::copy(ckpt.tensors[i].begin(), ckpt.tensors[i].end(), t.data());
  }
}

}  // namespace

Trainer trainer_from_checkpoint(const Checkpoint& ckpt, std::vector<FieldSample> data) {
  NoiseSchedule sched = ckpt.config.schedule.build();
  Trainer trainer(ckpt.config.model, ckpt.config.train, std::move(sched), std::move(data));
  load_params_into(ckpt, trainer.net().params());
  trainer.set_step_count(ckpt.step);
  if (ckpt.has_optimizer) {
    auto& adam = trainer.optimizer();
    if (ckpt.adam_m.size() != trainer.net().params().size())
      throw DataError("checkpoint optimizer state does not match parameter inventory");
    adam.first_moments() = ckpt.adam_m;
    adam.second_moments() = ckpt.adam_v;
    adam.set_step_count(ckpt.adam_step);
  }
  return trainer;
}

ScoreField<float> score_field_from_checkpoint(const Checkpoint& ckpt) {
  ScoreField<float> net(ckpt.config.model, ckpt.seed);
  load_params_into(ckpt, net.params());
  return net;
}

uint64_t fnv1a64(const void* data, size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = 0xcbf29ce484222325ULL;
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (in) {
    in.read(buf, sizeof(buf));
    std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace dpf
