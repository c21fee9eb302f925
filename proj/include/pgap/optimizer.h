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

// Training loops for the subspace-aligned optimizer and the plain Gaussian
// zeroth-order baseline.

#ifndef PGAP_OPTIMIZER_H_
#define PGAP_OPTIMIZER_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pgap/basis.h"
#include "pgap/errors.h"
#include "pgap/estimator.h"
#include "pgap/objectives.h"
#include "pgap/params.h"
#include "pgap/random.h"

namespace pgap {

enum class ScheduleKind { kConstant, kLinear };
enum class OptimizerKind { kPgap, kMezo };

std::string_view ScheduleKindName(ScheduleKind kind);
std::string_view OptimizerKindName(OptimizerKind kind);
// Throws ConfigError for unknown names ("constant"/"linear", "pgap"/"mezo").
ScheduleKind ParseScheduleKind(std::string_view name);
OptimizerKind ParseOptimizerKind(std::string_view name);

// Constant: base. Linear: base * (1 - t / T). T == 0 yields base.
double ScheduleValue(ScheduleKind kind, double base, std::int64_t t,
                     std::int64_t total);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kPgap;
  double eta = 1e-4;
  double eps = 1e-2;
  std::int64_t steps = 1000;
  ScheduleKind schedule_lr = ScheduleKind::kConstant;
  std::int64_t k = 100;
  std::int64_t h = 10;
  std::size_t r = 8;
  double delta0 = 2.0;
  ScheduleKind schedule_delta = ScheduleKind::kLinear;
  std::int64_t n_avg = 1;
  Seed seed{0};
  // Examples per step; 0 means the full data set.
  std::size_t batch_size = 0;
  // Full-data loss is evaluated every `eval_every` steps (0 disables it).
  std::int64_t eval_every = 0;
  std::optional<double> target_loss;
  bool stop_at_target = false;
  // Fill the per-step wall-clock column; off keeps logs byte-stable.
  bool record_timing = false;

  // Throws ConfigError naming the first invalid field.
  void Validate() const;
};

struct StepRecord {
  std::int64_t step = 0;
  // Mean of L+ and L- over the step's draws, i.e. the loss at the
  // pre-update point up to O(eps^2).
  double loss = 0.0;
  double rho = 0.0;  // mean over draws
  double delta = 0.0;
  double eta = 0.0;
  bool refresh = false;
  double ms = 0.0;
  std::vector<double> rhos;  // one per draw
};

struct RunLog {
  std::vector<StepRecord> records;
};

// step,loss,rho,delta,eta,refresh,ms with round-trip precision and LF endings.
void WriteRunLogCsv(const RunLog& log, std::ostream& out);

struct RunState {
  ParamSet params;
  BasisSet bases;
  std::int64_t step = 0;
};

// Seeds for step t, draw j: everything about a step's perturbations is
// derived from these.
Seed StepDrawSeed(Seed run_seed, std::int64_t step, std::int64_t draw);
Seed RefreshSeed(Seed run_seed, std::int64_t step);

// Refreshes state.bases with LowerDimGenerate at state.step.
void RefreshBases(const OptimizerConfig& config, RunState& state,
                  const LossOracle& oracle, const Batch& batch);

// One aligned step at state.step. Throws StateError if a matrix parameter has
// no basis or its basis is older than k steps.
StepRecord PgapStep(const OptimizerConfig& config, RunState& state,
                    const LossOracle& oracle, const Batch& batch);
// One full-space Gaussian step at state.step.
StepRecord MezoStep(const OptimizerConfig& config, RunState& state,
                    const LossOracle& oracle, const Batch& batch);

// Re-applies a recorded step's update from (seed, step, rhos, schedules)
// without evaluating the oracle. state.bases must be those the step used.
void ReplayStep(const OptimizerConfig& config, RunState& state,
                const StepRecord& record);

struct RunResult {
  RunLog log;
  ParamSet final_params;
  // Updates performed when the monitored loss first reached the target.
  std::optional<std::int64_t> steps_to_target;
  std::optional<double> final_eval_loss;
  double wall_ms = 0.0;
};

// Thrown by Run when a step fails; carries the records completed so far.
class RunAborted : public Error {
 public:
  RunAborted(const std::string& what, RunResult partial)
      : Error(what), partial_(std::move(partial)) {}
  const RunResult& partial() const { return partial_; }

 private:
  RunResult partial_;
};

using StepCallback = std::function<void(const StepRecord&)>;

// Refresh-then-step loop over t = 0 .. steps-1 with mini-batches from a
// BatchSampler seeded by config.seed, so equal seeds see equal batches.
RunResult Run(const OptimizerConfig& config, const LossOracle& oracle,
              const Batch& data, ParamSet initial,
              const StepCallback& on_step = nullptr);

}  // namespace pgap

#endif  // PGAP_OPTIMIZER_H_
