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

#include "pgap/tasks.h"

#include <algorithm>

#include "pgap/errors.h"

namespace pgap {
namespace {

LinearLayout LayoutFor(const TaskSpec& spec, std::size_t features) {
  if (spec.shapes.empty()) return LinearLayout::Vector(features);
  LinearLayout layout;
  layout.blocks = spec.shapes;
  return layout;
}

}  // namespace

const std::vector<std::string>& TaskNames() {
  static const std::vector<std::string> names = {
      "quadratic", "quad_lowrank", "least_squares", "logistic", "tiny_mlp"};
  return names;
}

Task BuildTask(const TaskSpec& spec) {
  Task task;
  if (spec.name == "quadratic") {
    // Diagonal spectrum spread over [0.1, 1].
    const std::size_t d = spec.features;
    if (d == 0) throw ConfigError("task.features must be >= 1");
    std::vector<double> diag(d);
    for (std::size_t i = 0; i < d; ++i) {
      diag[i] = d == 1 ? 1.0 : 0.1 + 0.9 * static_cast<double>(i) / (d - 1);
    }
    task.oracle = std::make_shared<QuadraticObjective>(Matrix::Diagonal(diag));
  } else if (spec.name == "quad_lowrank") {
    RankQuadraticSpec rq;
    if (!spec.shapes.empty()) rq.shapes = spec.shapes;
    rq.planted_rank = spec.planted_rank;
    rq.lambda = spec.lambda;
    rq.mu = spec.mu;
    rq.offset_norm = spec.offset_norm;
    task.oracle = std::make_shared<RankQuadraticObjective>(rq, spec.seed);
  } else if (spec.name == "least_squares" || spec.name == "logistic") {
    const bool logistic = spec.name == "logistic";
    if (!spec.csv.empty()) {
      task.data = LoadCsv(spec.csv, CsvSchema{spec.label_column, spec.feature_columns});
    } else {
      SyntheticSpec syn;
      syn.kind = logistic ? TaskKind::kLogistic : TaskKind::kLeastSquares;
      syn.label_noise = spec.label_noise;
      syn.layout = LayoutFor(spec, spec.features);
      syn.planted_rank = spec.planted_rank;
      syn.weight_scale = spec.weight_scale;
      task.data = MakeSynthetic(syn, spec.seed, spec.examples,
                                syn.layout.FeatureCount())
                      .batch;
    }
    const LinearLayout layout = LayoutFor(spec, task.data.inputs.cols());
    if (layout.FeatureCount() != task.data.inputs.cols()) {
      throw ConfigError("task.shapes hold " + std::to_string(layout.FeatureCount()) +
                        " weights but the data has " +
                        std::to_string(task.data.inputs.cols()) + " features");
    }
    task.oracle = std::make_shared<LinearModelObjective>(
        logistic ? LinearLoss::kLogistic : LinearLoss::kLeastSquares, layout);
  } else if (spec.name == "tiny_mlp") {
    SyntheticSpec syn;
    syn.kind = TaskKind::kTinyMlp;
    syn.label_noise = spec.label_noise;
    syn.hidden = spec.hidden;
    syn.classes = spec.classes;
    task.data = MakeSynthetic(syn, spec.seed, spec.examples, spec.features).batch;
    task.oracle = std::make_shared<TinyMlpObjective>(spec.features, spec.hidden,
                                                     spec.classes);
  } else {
    std::string valid;
    for (const auto& n : TaskNames()) valid += (valid.empty() ? "" : ", ") + n;
    throw ConfigError("unknown task '" + spec.name + "' (valid: " + valid + ")");
  }
  task.init = task.oracle->Initialize(DeriveSubstream(spec.seed, "init", 0));
  if (spec.lora_rank > 0) {
    auto lora = LoraWrap(task.oracle, task.init, spec.lora_rank,
                         DeriveSubstream(spec.seed, "lora", 0));
    task.init = lora->Initialize(spec.seed);
    task.oracle = std::move(lora);
  }
  return task;
}

}  // namespace pgap
