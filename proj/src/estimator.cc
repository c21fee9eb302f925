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

#include "pgap/estimator.h"

#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pgap/align.h"
#include "pgap/errors.h"

namespace pgap {

PerturbPlan::PerturbPlan(double eps, std::vector<PerturbRecipe> recipes)
    : eps_(eps), recipes_(std::move(recipes)) {
  if (!(eps_ > 0.0) || !std::isfinite(eps_)) {
    throw ConfigError("PerturbPlan: eps must be finite and > 0, got " +
                      std::to_string(eps_));
  }
  for (const auto& r : recipes_) {
    if (const auto* a = std::get_if<SubspaceAligned>(&r); a && !a->basis) {
      throw ConfigError("PerturbPlan: aligned recipe without a basis");
    }
  }
}

Matrix PerturbPlan::Materialize(std::size_t i, std::size_t rows,
                                std::size_t cols) const {
  if (i >= recipes_.size()) {
    throw DimensionError("PerturbPlan: no recipe for parameter " +
                         std::to_string(i));
  }
  if (const auto* g = std::get_if<FullGaussian>(&recipes_[i])) {
    GaussStream rng(g->seed);
    return rng.GaussMatrix(rows, cols);
  }
  const auto& a = std::get<SubspaceAligned>(recipes_[i]);
  if (a.basis->u.rows() != rows || a.basis->v.rows() != cols) {
    throw DimensionError("PerturbPlan: frames u " + a.basis->u.ShapeString() +
                         ", v " + a.basis->v.ShapeString() +
                         " do not fit parameter " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  }
  GaussStream rng(a.seed);
  const std::size_t r = a.basis->rank();
  const Matrix z_init = rng.GaussMatrix(r, r);
  return Lift(ProjectLowDim(z_init, a.basis->SigmaMatrix(), a.delta, a.xi),
              *a.basis);
}

PerturbPlan BuildPlan(const ParamSet& params, Seed draw_seed, double eps,
                      const BasisSet* bases, double delta) {
  std::vector<PerturbRecipe> recipes;
  recipes.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Seed seed = DeriveSubstream(draw_seed, "perturb", i);
    if (bases != nullptr && i < bases->size() && (*bases)[i]) {
      GaussStream sign_rng(DeriveSubstream(draw_seed, "xi", i));
      recipes.push_back(
          SubspaceAligned{seed, (*bases)[i], delta, sign_rng.RademacherSign()});
    } else {
      recipes.push_back(FullGaussian{seed});
    }
  }
  return PerturbPlan(eps, std::move(recipes));
}

namespace {

std::vector<Matrix> MaterializeAll(const ParamSet& params, const PerturbPlan& plan) {
  std::vector<Matrix> dirs;
  dirs.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& t = params.tensor(i);
    dirs.push_back(plan.Materialize(i, t.rows(), t.cols()));
  }
  return dirs;
}

PerturbationJournal ApplyDirections(ParamSet& params, const std::vector<Matrix>& dirs,
                                    double eps, int sign) {
  PerturbationJournal journal;
  journal.sign = sign;
  const double scale = sign * eps;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params.tensor(i).data();
    const auto zd = dirs[i].data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double d = scale * zd[k];
      const double moved = p[k] + d;
      if (std::bit_cast<std::uint64_t>(moved - d) !=
          std::bit_cast<std::uint64_t>(p[k])) {
        journal.entries.push_back({static_cast<std::uint32_t>(i), k, p[k]});
      }
      p[k] = moved;
    }
  }
  return journal;
}

void RevertDirections(ParamSet& params, const std::vector<Matrix>& dirs, double eps,
                      const PerturbationJournal& journal) {
  const double scale = journal.sign * eps;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params.tensor(i).data();
    const auto zd = dirs[i].data();
    for (std::size_t k = 0; k < p.size(); ++k) p[k] -= scale * zd[k];
  }
  for (const auto& e : journal.entries) {
    params.tensor(e.param).data()[e.index] = e.original;
  }
}

void RequirePlanSize(const ParamSet& params, const PerturbPlan& plan,
                     const char* where) {
  if (plan.size() != params.size()) {
    throw DimensionError(std::string(where) + ": plan has " +
                         std::to_string(plan.size()) + " recipes for " +
                         std::to_string(params.size()) + " parameters");
  }
}

}  // namespace

PerturbationJournal ApplySignedPerturbation(ParamSet& params,
                                            const PerturbPlan& plan, int sign) {
  if (sign != 1 && sign != -1) {
    throw ConfigError("ApplySignedPerturbation: sign must be +1 or -1");
  }
  RequirePlanSize(params, plan, "ApplySignedPerturbation");
  return ApplyDirections(params, MaterializeAll(params, plan), plan.eps(), sign);
}

void RevertPerturbation(ParamSet& params, const PerturbPlan& plan,
                        const PerturbationJournal& journal) {
  RequirePlanSize(params, plan, "RevertPerturbation");
  RevertDirections(params, MaterializeAll(params, plan), plan.eps(), journal);
}

ZoStepRecord TwoPointCoeff(const LossOracle& oracle, ParamSet& params,
                           const PerturbPlan& plan, const Batch& batch,
                           std::int64_t step) {
  RequirePlanSize(params, plan, "TwoPointCoeff");
  const std::uint64_t before = params.Checksum();
  // Directions are regenerated from the plan's seeds once per call and shared
  // by both evaluations and both restores.
  const std::vector<Matrix> dirs = MaterializeAll(params, plan);
  auto evaluate = [&](int sign) {
    const PerturbationJournal journal = ApplyDirections(params, dirs, plan.eps(), sign);
    double loss = 0.0;
    try {
      loss = oracle.Loss(params, batch);
    } catch (...) {
      RevertDirections(params, dirs, plan.eps(), journal);
      throw;
    }
    RevertDirections(params, dirs, plan.eps(), journal);
    return loss;
  };
  const double plus = evaluate(+1);
  const double minus = evaluate(-1);
  if (params.Checksum() != before) {
    throw InternalError("TwoPointCoeff: parameters not restored at step " +
                        std::to_string(step));
  }
  if (!std::isfinite(plus) || !std::isfinite(minus)) {
    throw NumericError("TwoPointCoeff: non-finite loss at step " +
                       std::to_string(step));
  }
  return ZoStepRecord{step, (plus - minus) / (2.0 * plan.eps()), plus, minus,
                      plan};
}

AveragedEstimateResult AveragedEstimate(const LossOracle& oracle,
                                        ParamSet& params,
                                        std::span<const PerturbPlan> plans,
                                        const Batch& batch) {
  if (plans.empty()) throw ConfigError("AveragedEstimate: need at least one plan");
  AveragedEstimateResult out{params.ZerosLike(), {}};
  const double inv_n = 1.0 / static_cast<double>(plans.size());
  for (const PerturbPlan& plan : plans) {
    out.records.push_back(TwoPointCoeff(oracle, params, plan, batch));
  }
  for (std::size_t j = 0; j < plans.size(); ++j) {
    const double w = out.records[j].rho * inv_n;
    for (std::size_t i = 0; i < params.size(); ++i) {
      Matrix& d = out.direction.tensor(i);
      Axpy(w, plans[j].Materialize(i, d.rows(), d.cols()), d);
    }
  }
  return out;
}

void ApplyUpdate(ParamSet& params, const PerturbPlan& plan, double coeff) {
  if (plan.size() != params.size()) {
    throw DimensionError("ApplyUpdate: plan has " + std::to_string(plan.size()) +
                         " recipes for " + std::to_string(params.size()) +
                         " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& t = params.tensor(i);
    Axpy(-coeff, plan.Materialize(i, t.rows(), t.cols()), t);
  }
}

}  // namespace pgap
