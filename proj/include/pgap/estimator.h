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

// Two-point zeroth-order estimation with seed-regenerated perturbations.
//
// A step never stores a perturbation across parameters: each tensor's
// direction is regenerated from its recipe when applied, when reverted, and
// again when the update is applied.

#ifndef PGAP_ESTIMATOR_H_
#define PGAP_ESTIMATOR_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "pgap/basis.h"
#include "pgap/matrix.h"
#include "pgap/objectives.h"
#include "pgap/params.h"
#include "pgap/random.h"

namespace pgap {

// i.i.d. N(0, 1) entries drawn from `seed`.
struct FullGaussian {
  Seed seed;
};

// Z_init ~ N(0, I_{r x r}) from `seed`, projected against the basis
// coefficients with (delta, xi), then lifted through the frames.
struct SubspaceAligned {
  Seed seed;
  std::shared_ptr<const SubspaceBasis> basis;
  double delta = 0.0;
  int xi = 1;
};

using PerturbRecipe = std::variant<FullGaussian, SubspaceAligned>;

class PerturbPlan {
 public:
  // Throws ConfigError unless eps is finite and > 0, or if an aligned recipe
  // has no basis.
  PerturbPlan(double eps, std::vector<PerturbRecipe> recipes);

  double eps() const { return eps_; }
  std::size_t size() const { return recipes_.size(); }
  const PerturbRecipe& recipe(std::size_t i) const { return recipes_[i]; }
  bool aligned(std::size_t i) const {
    return std::holds_alternative<SubspaceAligned>(recipes_[i]);
  }

  // Unit-scale direction for parameter i with the given shape. Bit-identical
  // on every call.
  Matrix Materialize(std::size_t i, std::size_t rows, std::size_t cols) const;

 private:
  double eps_;
  std::vector<PerturbRecipe> recipes_;
};

// Recipes for one draw. Parameter i gets an aligned recipe when `bases` has a
// frame at index i, otherwise a full Gaussian. Per-parameter seeds and signs
// are derived from `draw_seed`.
PerturbPlan BuildPlan(const ParamSet& params, Seed draw_seed, double eps,
                      const BasisSet* bases, double delta);

// Elements whose bits would not survive p + d - d in floating point, with
// the original values needed to patch them back.
struct PerturbationJournal {
  struct Entry {
    std::uint32_t param;
    std::uint64_t index;
    double original;
  };
  std::vector<Entry> entries;
  int sign = 0;
};

// p += sign * eps * z for every tensor. Returns the journal that
// RevertPerturbation needs for a bit-exact restore.
PerturbationJournal ApplySignedPerturbation(ParamSet& params,
                                            const PerturbPlan& plan, int sign);
void RevertPerturbation(ParamSet& params, const PerturbPlan& plan,
                        const PerturbationJournal& journal);

struct ZoStepRecord {
  std::int64_t step = 0;
  double rho = 0.0;
  double loss_plus = 0.0;
  double loss_minus = 0.0;
  PerturbPlan plan;
};

// rho = (L(p + eps z) - L(p - eps z)) / (2 eps) with exactly two oracle
// calls. Parameters are restored bit-exactly before returning or throwing.
// Throws NumericError on a non-finite loss and InternalError if the restored
// checksum differs.
ZoStepRecord TwoPointCoeff(const LossOracle& oracle, ParamSet& params,
                           const PerturbPlan& plan, const Batch& batch,
                           std::int64_t step = 0);

struct AveragedEstimateResult {
  // (1/n) sum_i rho_i z_i, parameter shaped.
  ParamSet direction;
  std::vector<ZoStepRecord> records;
};

AveragedEstimateResult AveragedEstimate(const LossOracle& oracle,
                                        ParamSet& params,
                                        std::span<const PerturbPlan> plans,
                                        const Batch& batch);

// p -= coeff * z for every tensor, regenerating z from the plan.
void ApplyUpdate(ParamSet& params, const PerturbPlan& plan, double coeff);

}  // namespace pgap

#endif  // PGAP_ESTIMATOR_H_
