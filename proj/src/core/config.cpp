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
#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace dpf {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

IniDoc IniDoc::parse(const std::string& text) {
  IniDoc doc;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // strip comments (# or ;), then whitespace
    size_t hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw DataError("config line " + std::to_string(lineno) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      doc.sections[section];
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw DataError("config line " + std::to_string(lineno) + ": empty key");
    if (doc.sections[section].count(key))
      throw DataError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    doc.sections[section][key] = value;
  }
  return doc;
}

IniDoc IniDoc::parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

bool IniDoc::has(const std::string& sec, const std::string& key) const {
  auto it = sections.find(sec);
  return it != sections.end() && it->second.count(key);
}

std::string IniDoc::get_str(const std::string& sec, const std::string& key,
                            const std::string& dflt) {
  if (!has(sec, key)) return dflt;
  used_[sec][key] = true;
  return sections.at(sec).at(key);
}

double IniDoc::get_num(const std::string& sec, const std::string& key, double dflt) {
  if (!has(sec, key)) return dflt;
  used_[sec][key] = true;
  const std::string& v = sections.at(sec).at(key);
  try {
    size_t pos = 0;
    double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw DataError("config [" + sec + "] " + key + ": '" + v + "' is not a number");
  }
}

int64_t IniDoc::get_int(const std::string& sec, const std::string& key, int64_t dflt) {
  double v = get_num(sec, key, static_cast<double>(dflt));
  int64_t out = static_cast<int64_t>(v);
  if (static_cast<double>(out) != v)
    throw DataError("config [" + sec + "] " + key + ": expected an integer");
  return out;
}

bool IniDoc::get_bool(const std::string& sec, const std::string& key, bool dflt) {
  if (!has(sec, key)) return dflt;
  used_[sec][key] = true;
  std::string v = sections.at(sec).at(key);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw DataError("config [" + sec + "] " + key + ": '" + v + "' is not a boolean");
}

void IniDoc::reject_unused() const {
  for (const auto& [sec, keys] : sections)
    for (const auto& [key, value] : keys) {
      auto sit = used_.find(sec);
      if (sit == used_.end() || !sit->second.count(key))
        throw DataError("config: unknown key '" + key + "' in section [" + sec + "]");
    }
}

RunConfig run_config_from_ini(IniDoc& ini) {
  RunConfig cfg;

  cfg.field.kind = space_kind_from_string(ini.get_str("field", "kind", "euclidean_grid_2d"));
  int res = static_cast<int>(ini.get_int("field", "resolution", 8));
  switch (cfg.field.kind) {
    case SpaceKind::euclidean_grid_2d: cfg.field.extent = {res, res}; break;
    case SpaceKind::euclidean_grid_3d: cfg.field.extent = {res, res, res}; break;
    case SpaceKind::sphere_dh: cfg.field.extent = {res}; break;
  }
  cfg.field.signal_dim = static_cast<int>(ini.get_int("field", "signal_dim", 3));
  cfg.field.validate();

  cfg.schedule.T = static_cast<int>(ini.get_int("schedule", "steps", 1000));
  cfg.schedule.beta_start = ini.get_num("schedule", "beta_start", 1e-4);
  cfg.schedule.beta_end = ini.get_num("schedule", "beta_end", 0.02);
  cfg.schedule.rule = sigma_rule_from_string(ini.get_str("schedule", "sigma_rule", "beta"));

  auto& m = cfg.model;
  m.architecture = score_arch_from_string(ini.get_str("model", "architecture", "cross_attention"));
  m.n_latents = static_cast<int>(ini.get_int("model", "n_latents", 64));
  m.d_latent = static_cast<int>(ini.get_int("model", "d_latent", 128));
  m.n_blocks = static_cast<int>(ini.get_int("model", "n_blocks", 4));
  m.self_attends_per_block = static_cast<int>(ini.get_int("model", "self_attends_per_block", 2));
  m.n_heads = static_cast<int>(ini.get_int("model", "n_heads", 4));
  m.d_head = static_cast<int>(ini.get_int("model", "d_head", 0));
  m.decoder_blocks = static_cast<int>(ini.get_int("model", "decoder_blocks", 1));
  m.coord_freqs = static_cast<int>(ini.get_int("model", "coord_freqs", 10));
  m.time_freqs = static_cast<int>(ini.get_int("model", "time_freqs", 64));
  m.mlp_ratio = static_cast<int>(ini.get_int("model", "mlp_ratio", 2));
  m.coord_dim = cfg.field.coord_dim();
  m.signal_dim = cfg.field.signal_dim;

  auto& t = cfg.train;
  t.steps = ini.get_int("train", "steps", 2000);
  t.batch_size = static_cast<int>(ini.get_int("train", "batch_size", 8));
  t.n_context = static_cast<int>(ini.get_int("train", "n_context", 64));
  t.n_query = static_cast<int>(ini.get_int("train", "n_query", 64));
  t.context_disjoint = ini.get_bool("train", "context_disjoint", false);
  t.adam.lr = ini.get_num("train", "lr", 1e-4);
  t.adam.beta1 = ini.get_num("train", "adam_beta1", 0.9);
  t.adam.beta2 = ini.get_num("train", "adam_beta2", 0.999);
  t.adam.eps = ini.get_num("train", "adam_eps", 1e-8);
  t.grad_clip = ini.get_num("train", "grad_clip", 1.0);
  t.seed = static_cast<uint64_t>(ini.get_int("train", "seed", 1));
  t.log_every = ini.get_int("train", "log_every", 50);

  cfg.sample.context_fraction = ini.get_num("sample", "context_fraction", 1.0);
  cfg.sample.clamp = ini.get_num("sample", "clamp", 1.3);

  // the mixer's token axis is pinned to the training context count
  m.mixer_tokens = m.architecture == ScoreArch::mlp_mixer ? t.n_context : 0;
  m.validate();
  ini.reject_unused();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  IniDoc ini = IniDoc::parse_file(path);
  return run_config_from_ini(ini);
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["field"] = {{"kind", to_string(cfg.field.kind)},
                {"extent", cfg.field.extent},
                {"signal_dim", cfg.field.signal_dim}};
  j["schedule"] = {{"steps", cfg.schedule.T},
                   {"beta_start", cfg.schedule.beta_start},
                   {"beta_end", cfg.schedule.beta_end},
                   {"sigma_rule", to_string(cfg.schedule.rule)}};
  j["model"] = {{"architecture", to_string(cfg.model.architecture)},
                {"n_latents", cfg.model.n_latents},
                {"d_latent", cfg.model.d_latent},
                {"n_blocks", cfg.model.n_blocks},
                {"self_attends_per_block", cfg.model.self_attends_per_block},
                {"n_heads", cfg.model.n_heads},
                {"d_head", cfg.model.d_head},
                {"decoder_blocks", cfg.model.decoder_blocks},
                {"coord_freqs", cfg.model.coord_freqs},
                {"time_freqs", cfg.model.time_freqs},
                {"signal_dim", cfg.model.signal_dim},
                {"coord_dim", cfg.model.coord_dim},
                {"mlp_ratio", cfg.model.mlp_ratio},
                {"mixer_tokens", cfg.model.mixer_tokens}};
  j["train"] = {{"steps", cfg.train.steps},
                {"batch_size", cfg.train.batch_size},
                {"n_context", cfg.train.n_context},
                {"n_query", cfg.train.n_query},
                {"context_disjoint", cfg.train.context_disjoint},
                {"lr", cfg.train.adam.lr},
                {"adam_beta1", cfg.train.adam.beta1},
                {"adam_beta2", cfg.train.adam.beta2},
                {"adam_eps", cfg.train.adam.eps},
                {"grad_clip", cfg.train.grad_clip},
                {"seed", cfg.train.seed},
                {"log_every", cfg.train.log_every}};
  j["sample"] = {{"context_fraction", cfg.sample.context_fraction}, {"clamp", cfg.sample.clamp}};
  return j;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig cfg;
  try {
    const auto& f = j.at("field");
    cfg.field.kind = space_kind_from_string(f.at("kind").get<std::string>());
    cfg.field.extent = f.at("extent").get<std::vector<int>>();
    cfg.field.signal_dim = f.at("signal_dim").get<int>();

    const auto& s = j.at("schedule");
    cfg.schedule.T = s.at("steps").get<int>();
    cfg.schedule.beta_start = s.at("beta_start").get<double>();
    cfg.schedule.beta_end = s.at("beta_end").get<double>();
    cfg.schedule.rule = sigma_rule_from_string(s.at("sigma_rule").get<std::string>());

    const auto& m = j.at("model");
    cfg.model.architecture = score_arch_from_string(m.at("architecture").get<std::string>());
    cfg.model.n_latents = m.at("n_latents").get<int>();
    cfg.model.d_latent = m.at("d_latent").get<int>();
    cfg.model.n_blocks = m.at("n_blocks").get<int>();
    cfg.model.self_attends_per_block = m.at("self_attends_per_block").get<int>();
    cfg.model.n_heads = m.at("n_heads").get<int>();
    cfg.model.d_head = m.at("d_head").get<int>();
    cfg.model.decoder_blocks = m.at("decoder_blocks").get<int>();
    cfg.model.coord_freqs = m.at("coord_freqs").get<int>();
    cfg.model.time_freqs = m.at("time_freqs").get<int>();
    cfg.model.signal_dim = m.at("signal_dim").get<int>();
    cfg.model.coord_dim = m.at("coord_dim").get<int>();
    cfg.model.mlp_ratio = m.at("mlp_ratio").get<int>();
    cfg.model.mixer_tokens = m.at("mixer_tokens").get<int>();

    const auto& t = j.at("train");
    cfg.train.steps = t.at("steps").get<int64_t>();
    cfg.train.batch_size = t.at("batch_size").get<int>();
    cfg.train.n_context = t.at("n_context").get<int>();
    cfg.train.n_query = t.at("n_query").get<int>();
    cfg.train.context_disjoint = t.at("context_disjoint").get<bool>();
    cfg.train.adam.lr = t.at("lr").get<double>();
    cfg.train.adam.beta1 = t.at("adam_beta1").get<double>();
    cfg.train.adam.beta2 = t.at("adam_beta2").get<double>();
    cfg.train.adam.eps = t.at("adam_eps").get<double>();
    cfg.train.grad_clip = t.at("grad_clip").get<double>();
    cfg.train.seed = t.at("seed").get<uint64_t>();
    cfg.train.log_every = t.at("log_every").get<int64_t>();

    const auto& sa = j.at("sample");
    cfg.sample.context_fraction = sa.at("context_fraction").get<double>();
    cfg.sample.clamp = sa.at("clamp").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed embedded config: ") + e.what());
  }
  cfg.field.validate();
  cfg.model.validate();
  return cfg;
}

std::string run_config_to_text(const RunConfig& cfg) {
  return run_config_to_json(cfg).dump(2);
}

}  // namespace dpf
