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

// Named training tasks assembled from the objectives, shared by the command
// line tool, the Python module, and the benchmarks.

#ifndef PGAP_TASKS_H_
#define PGAP_TASKS_H_

#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "pgap/objectives.h"
#include "pgap/params.h"
#include "pgap/random.h"

namespace pgap {

struct TaskSpec {
  // quadratic | quad_lowrank | least_squares | logistic | tiny_mlp
  std::string name = "quad_lowrank";
  Seed seed{1};
  std::size_t examples = 1024;
  // Feature count for linear tasks without explicit shapes, dimension of the
  // plain quadratic, and input width of the MLP.
  std::size_t features = 32;
  // Matrix shapes (quad_lowrank) or weight blocks (linear tasks).
  std::vector<std::pair<std::size_t, std::size_t>> shapes;
  std::size_t planted_rank = 4;
  double lambda = 1.0;
  double mu = 0.0;
  double offset_norm = 1.0;
  double label_noise = 0.0;
  double weight_scale = 3.0;
  std::size_t hidden = 64;
  std::size_t classes = 32;
  // Optional CSV data for linear tasks.
  std::string csv;
  std::string label_column = "label";
  std::vector<std::string> feature_columns;
  // Wrap every matrix parameter with adapters of this rank (0 disables).
  std::size_t lora_rank = 0;
};

struct Task {
  std::shared_ptr<const LossOracle> oracle;
  Batch data;
  ParamSet init;
};

const std::vector<std::string>& TaskNames();

// Throws ConfigError for an unknown name or inconsistent sizes.
Task BuildTask(const TaskSpec& spec);

}  // namespace pgap

#endif  // PGAP_TASKS_H_
