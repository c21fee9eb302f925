// Copyright 2026 The pgap Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// TOML run configuration: [task], [optimizer] (with optional per-optimizer
// [optimizer.<name>] tables), [schedules], [lab], and [output]. Unknown keys
// are rejected.

#ifndef PGAP_CONFIG_H_
#define PGAP_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pgap/lab.h"
#include "pgap/optimizer.h"
#include "pgap/tasks.h"

namespace pgap {

struct LabConfig {
  Seed seed{2024};
  VarianceOptions variance;
  std::vector<std::size_t> moment_dims = {2, 8, 32};
  std::uint64_t moment_samples = 1000000;
  std::vector<std::size_t> angle_q = {2, 10, 50};
  std::uint64_t angle_samples = 1000000;
  BiasOptions bias;
  ProbeMseOptions probe_mse;
  DavisKahanOptions davis_kahan;
  DispersionOptions dispersion;
};

struct OutputConfig {
  std::string dir = "out";
  bool record_timing = false;
};

struct RunConfig {
  TaskSpec task;
  OptimizerConfig optimizer;
  // Optimizers for `compare`, by name; entries may repeat.
  std::vector<std::string> compare;
  // Fully resolved settings for names with an [optimizer.<name>] table.
  std::map<std::string, OptimizerConfig> per_optimizer;
  LabConfig lab;
  OutputConfig output;

  // Settings for one named optimizer: its own table if present, otherwise the
  // base [optimizer] settings with the kind replaced.
  OptimizerConfig Resolve(const std::string& name) const;
};

// Throws ParseError for malformed TOML and ConfigError for unknown keys or
// invalid values.
RunConfig ParseConfig(const std::string& text, const std::string& origin = "config");
// Throws IoError when the file cannot be read.
RunConfig LoadConfigFile(const std::filesystem::path& path);

// Fully resolved configuration as TOML; ParseConfig(ToToml(c)) reproduces c.
std::string ToToml(const RunConfig& config);

// Names accepted by ParseOptimizerKind.
std::vector<std::string> OptimizerNames();

}  // namespace pgap

#endif  // PGAP_CONFIG_H_
