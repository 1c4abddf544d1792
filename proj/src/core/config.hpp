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

#include <map>
#include <string>

#include <json.hpp>

#include "engine.hpp"
#include "field.hpp"
#include "schedule.hpp"
#include "score_field.hpp"

// Plain-text sectioned key=value configuration covering every knob: field
// geometry, noise schedule, score architecture, pair counts, optimizer and
// seeds. Unknown keys are rejected to catch typos.

namespace dpf {

struct IniDoc {
  std::map<std::string, std::map<std::string, std::string>> sections;

  static IniDoc parse(const std::string& text);
  static IniDoc parse_file(const std::string& path);

  bool has(const std::string& sec, const std::string& key) const;
  std::string get_str(const std::string& sec, const std::string& key, const std::string& dflt);
  double get_num(const std::string& sec, const std::string& key, double dflt);
  int64_t get_int(const std::string& sec, const std::string& key, int64_t dflt);
  bool get_bool(const std::string& sec, const std::string& key, bool dflt);

  /// Throws if any key was never read by one of the getters above.
  void reject_unused() const;

private:
  std::map<std::string, std::map<std::string, bool>> used_;
};

struct ScheduleParams {
  int T = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  SigmaRule rule = SigmaRule::beta;

  NoiseSchedule build() const { return NoiseSchedule::linear(T, beta_start, beta_end, rule); }
  bool operator==(const ScheduleParams&) const = default;
};

struct SampleParams {
  double context_fraction = 1.0;
  double clamp = 1.3;
  bool operator==(const SampleParams&) const = default;
};

/// Everything one run needs; embedded verbatim in checkpoints.
struct RunConfig {
  MetricSpaceSpec field;
  ScheduleParams schedule;
  ScoreFieldConfig model;
  TrainConfig train;
  SampleParams sample;

  bool operator==(const RunConfig&) const = default;
};

RunConfig run_config_from_ini(IniDoc& ini);
RunConfig load_run_config(const std::string& path);

nlohmann::json run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);

/// Canonical multi-line rendering used in mismatch error messages.
std::string run_config_to_text(const RunConfig& cfg);

}  // namespace dpf
