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

#include "pgap/optimizer.h"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ostream>
#include <string>
#include <utility>

#include "pgap/subspace.h"

namespace pgap {
namespace {

using Clock = std::chrono::steady_clock;

double MsSince(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string FormatDouble(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::vector<PerturbPlan> StepPlans(const OptimizerConfig& config,
                                   const RunState& state, bool aligned,
                                   double delta) {
  std::vector<PerturbPlan> plans;
  plans.reserve(static_cast<std::size_t>(config.n_avg));
  for (std::int64_t j = 0; j < config.n_avg; ++j) {
    plans.push_back(BuildPlan(state.params,
                              StepDrawSeed(config.seed, state.step, j),
                              config.eps, aligned ? &state.bases : nullptr,
                              delta));
  }
  return plans;
}

void RequireFreshBases(const OptimizerConfig& config, const RunState& state) {
  for (std::size_t i = 0; i < state.params.size(); ++i) {
    if (state.params.kind(i) != ParamKind::kMatrixSubspace) continue;
    if (i >= state.bases.size() || !state.bases[i]) {
      throw StateError("PgapStep: no basis for '" + state.params.name(i) +
                       "' at step " + std::to_string(state.step));
    }
    if (!state.bases[i]->FreshAt(state.step, config.k)) {
      throw StateError("PgapStep: basis for '" + state.params.name(i) +
                       "' born at step " +
                       std::to_string(state.bases[i]->born_at_step) +
                       " is stale at step " + std::to_string(state.step));
    }
  }
}

void ApplyDraws(const OptimizerConfig& config, RunState& state,
                const std::vector<PerturbPlan>& plans,
                const std::vector<double>& rhos, double eta) {
  const double inv_n = 1.0 / static_cast<double>(plans.size());
  for (std::size_t j = 0; j < plans.size(); ++j) {
    ApplyUpdate(state.params, plans[j], eta * rhos[j] * inv_n);
  }
  (void)config;
}

StepRecord ZoStep(const OptimizerConfig& config, RunState& state,
                  const LossOracle& oracle, const Batch& batch, bool aligned) {
  const auto start = Clock::now();
  StepRecord rec;
  rec.step = state.step;
  rec.eta = ScheduleValue(config.schedule_lr, config.eta, state.step, config.steps);
  rec.delta = aligned ? ScheduleValue(config.schedule_delta, config.delta0,
                                      state.step, config.steps)
                      : 0.0;
  if (aligned) RequireFreshBases(config, state);
  const std::vector<PerturbPlan> plans = StepPlans(config, state, aligned, rec.delta);
  double loss_sum = 0.0;
  double rho_sum = 0.0;
  for (const PerturbPlan& plan : plans) {
    const ZoStepRecord zo = TwoPointCoeff(oracle, state.params, plan, batch,
                                          state.step);
    rec.rhos.push_back(zo.rho);
    rho_sum += zo.rho;
    loss_sum += 0.5 * (zo.loss_plus + zo.loss_minus);
  }
  const double inv_n = 1.0 / static_cast<double>(plans.size());
  rec.loss = loss_sum * inv_n;
  rec.rho = rho_sum * inv_n;
  ApplyDraws(config, state, plans, rec.rhos, rec.eta);
  ++state.step;
  if (config.record_timing) rec.ms = MsSince(start);
  return rec;
}

}  // namespace

std::string_view ScheduleKindName(ScheduleKind kind) {
  return kind == ScheduleKind::kLinear ? "linear" : "constant";
}

std::string_view OptimizerKindName(OptimizerKind kind) {
  return kind == OptimizerKind::kMezo ? "mezo" : "pgap";
}

ScheduleKind ParseScheduleKind(std::string_view name) {
  if (name == "constant") return ScheduleKind::kConstant;
  if (name == "linear") return ScheduleKind::kLinear;
  throw ConfigError("unknown schedule '" + std::string(name) +
                    "' (expected constant or linear)");
}

OptimizerKind ParseOptimizerKind(std::string_view name) {
  if (name == "pgap") return OptimizerKind::kPgap;
  if (name == "mezo") return OptimizerKind::kMezo;
  throw ConfigError("unknown optimizer '" + std::string(name) +
                    "' (expected pgap or mezo)");
}

double ScheduleValue(ScheduleKind kind, double base, std::int64_t t,
                     std::int64_t total) {
  if (kind == ScheduleKind::kConstant || total <= 0) return base;
  if (t < 0 || t > total) {
    throw ConfigError("ScheduleValue: step " + std::to_string(t) +
                      " outside [0, " + std::to_string(total) + "]");
  }
  return base * (1.0 - static_cast<double>(t) / static_cast<double>(total));
}

void OptimizerConfig::Validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(eta)) throw ConfigError("optimizer.eta must be > 0");
  if (!positive(eps)) throw ConfigError("optimizer.eps must be > 0");
  if (steps < 0) throw ConfigError("optimizer.steps must be >= 0");
  if (k < 1) throw ConfigError("optimizer.k must be >= 1");
  if (h < 1) throw ConfigError("optimizer.h must be >= 1");
  if (r < 1) throw ConfigError("optimizer.r must be >= 1");
  if (!(std::isfinite(delta0) && delta0 >= 0.0)) {
    throw ConfigError("optimizer.delta0 must be >= 0");
  }
  if (n_avg < 1) throw ConfigError("optimizer.n_avg must be >= 1");
  if (eval_every < 0) throw ConfigError("optimizer.eval_every must be >= 0");
  if (target_loss && !std::isfinite(*target_loss)) {
    throw ConfigError("optimizer.target_loss must be finite");
  }
}

void WriteRunLogCsv(const RunLog& log, std::ostream& out) {
  out << "step,loss,rho,delta,eta,refresh,ms\n";
  for (const StepRecord& r : log.records) {
    out << r.step << ',' << FormatDouble(r.loss) << ',' << FormatDouble(r.rho)
        << ',' << FormatDouble(r.delta) << ',' << FormatDouble(r.eta) << ','
        << (r.refresh ? 1 : 0) << ',' << FormatDouble(r.ms) << '\n';
  }
}

Seed StepDrawSeed(Seed run_seed, std::int64_t step, std::int64_t draw) {
  return DeriveSubstream(
      DeriveSubstream(run_seed, "step", static_cast<std::uint64_t>(step)), "draw",
      static_cast<std::uint64_t>(draw));
}

Seed RefreshSeed(Seed run_seed, std::int64_t step) {
  return DeriveSubstream(run_seed, "refresh", static_cast<std::uint64_t>(step));
}

void RefreshBases(const OptimizerConfig& config, RunState& state,
                  const LossOracle& oracle, const Batch& batch) {
  ProbeResult probe =
      LowerDimGenerate(oracle, state.params, batch, config.h, config.r,
                       config.eps, RefreshSeed(config.seed, state.step), state.step);
  state.bases = std::move(probe.bases);
}

StepRecord PgapStep(const OptimizerConfig& config, RunState& state,
                    const LossOracle& oracle, const Batch& batch) {
  return ZoStep(config, state, oracle, batch, /*aligned=*/true);
}

StepRecord MezoStep(const OptimizerConfig& config, RunState& state,
                    const LossOracle& oracle, const Batch& batch) {
  return ZoStep(config, state, oracle, batch, /*aligned=*/false);
}

void ReplayStep(const OptimizerConfig& config, RunState& state,
                const StepRecord& record) {
  if (record.step != state.step) {
    throw StateError("ReplayStep: record is for step " +
                     std::to_string(record.step) + ", state is at " +
                     std::to_string(state.step));
  }
  if (static_cast<std::int64_t>(record.rhos.size()) != config.n_avg) {
    throw StateError("ReplayStep: record holds " +
                     std::to_string(record.rhos.size()) + " draws, config has " +
                     std::to_string(config.n_avg));
  }
  const bool aligned = config.kind == OptimizerKind::kPgap;
  const double eta =
      ScheduleValue(config.schedule_lr, config.eta, state.step, config.steps);
  const double delta = aligned ? ScheduleValue(config.schedule_delta,
                                               config.delta0, state.step,
                                               config.steps)
                               : 0.0;
  if (aligned) RequireFreshBases(config, state);
  ApplyDraws(config, state, StepPlans(config, state, aligned, delta), record.rhos,
             eta);
  ++state.step;
}

RunResult Run(const OptimizerConfig& config, const LossOracle& oracle,
              const Batch& data, ParamSet initial, const StepCallback& on_step) {
  config.Validate();
  const auto start = Clock::now();
  RunResult result;
  RunState state{std::move(initial), {}, 0};
  const bool aligned = config.kind == OptimizerKind::kPgap;
  const RefreshSchedule schedule{config.k, config.h};
  std::int64_t eval_every = config.eval_every;
  if (eval_every == 0 && config.target_loss) eval_every = 1;

  std::optional<BatchSampler> sampler;
  if (data.size() > 0) {
    sampler.emplace(data.size(), config.batch_size,
                    DeriveSubstream(config.seed, "batches", 0));
  }
  auto monitor = [&](std::int64_t updates) {
    const double loss = oracle.Loss(state.params, data);
    result.final_eval_loss = loss;
    if (config.target_loss && !result.steps_to_target &&
        loss <= *config.target_loss) {
      result.steps_to_target = updates;
    }
  };

  try {
    if (eval_every > 0) monitor(0);
    for (std::int64_t t = 0; t < config.steps; ++t) {
      if (config.stop_at_target && result.steps_to_target) break;
      Batch batch;
      const Batch* current = &data;
      if (sampler && sampler->batch_size() < data.size()) {
        const std::vector<std::size_t> rows = sampler->Next();
        batch = SelectRows(data, rows);
        current = &batch;
      }
      const auto step_start = Clock::now();
      bool refreshed = false;
      if (aligned && ShouldRefresh(schedule, t)) {
        RefreshBases(config, state, oracle, *current);
        refreshed = true;
      }
      StepRecord rec = aligned ? PgapStep(config, state, oracle, *current)
                               : MezoStep(config, state, oracle, *current);
      rec.refresh = refreshed;
      if (config.record_timing) rec.ms = MsSince(step_start);
      if (on_step) on_step(rec);
      result.log.records.push_back(std::move(rec));
      if (eval_every > 0 && (t + 1) % eval_every == 0) monitor(t + 1);
    }
  } catch (const Error& e) {
    result.final_params = std::move(state.params);
    result.wall_ms = MsSince(start);
    throw RunAborted(std::string("run aborted at step ") +
                         std::to_string(state.step) + ": " + e.what(),
                     std::move(result));
  }
  result.final_params = std::move(state.params);
  result.wall_ms = MsSince(start);
  return result;
}

}  // namespace pgap
