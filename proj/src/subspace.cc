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

#include "pgap/subspace.h"

#include <algorithm>
#include <memory>
#include <string>
#include <utility>

#include "pgap/errors.h"
#include "pgap/estimator.h"
#include "pgap/svd.h"

namespace pgap {

void RefreshSchedule::Validate() const {
  if (k < 1) throw ConfigError("refresh window k must be >= 1");
  if (h < 1) throw ConfigError("probe count h must be >= 1");
}

bool ShouldRefresh(const RefreshSchedule& schedule, std::int64_t step) {
  schedule.Validate();
  if (step < 0) throw ConfigError("ShouldRefresh: negative step");
  return step % schedule.k == 0;
}

ProbeResult LowerDimGenerate(const LossOracle& oracle, ParamSet& params,
                             const Batch& batch, std::int64_t h, std::size_t r,
                             double eps, Seed seed, std::int64_t born_at_step) {
  if (h < 1) throw ConfigError("LowerDimGenerate: h must be >= 1");
  if (r < 1) throw ConfigError("LowerDimGenerate: rank must be >= 1");
  ProbeResult out;
  out.bases.resize(params.size());
  out.averaged.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params.kind(i) != ParamKind::kMatrixSubspace) continue;
    const Matrix& t = params.tensor(i);
    if (std::min(t.rows(), t.cols()) < r) {
      throw DimensionError("LowerDimGenerate: rank " + std::to_string(r) +
                           " exceeds parameter '" + params.name(i) + "' " +
                           t.ShapeString());
    }
    out.averaged[i] = Matrix(t.rows(), t.cols());
  }

  const double inv_h = 1.0 / static_cast<double>(h);
  for (std::int64_t j = 0; j < h; ++j) {
    const PerturbPlan plan = BuildPlan(
        params, DeriveSubstream(seed, "probe", static_cast<std::uint64_t>(j)),
        eps, nullptr, 0.0);
    const ZoStepRecord rec = TwoPointCoeff(oracle, params, plan, batch, j);
    out.rhos.push_back(rec.rho);
    for (std::size_t i = 0; i < params.size(); ++i) {
      Matrix& g = out.averaged[i];
      if (g.empty()) continue;
      Axpy(rec.rho * inv_h, plan.Materialize(i, g.rows(), g.cols()), g);
    }
  }

  for (std::size_t i = 0; i < params.size(); ++i) {
    if (out.averaged[i].empty()) continue;
    SvdTriple svd;
    try {
      svd = TruncatedSvd(out.averaged[i], r);
    } catch (const NumericError& e) {
      throw NumericError("LowerDimGenerate: parameter '" + params.name(i) +
                         "': " + e.what());
    }
    auto basis = std::make_shared<SubspaceBasis>();
    basis->u = std::move(svd.u);
    basis->s = std::move(svd.s);
    basis->v = std::move(svd.v);
    basis->born_at_step = born_at_step;
    out.bases[i] = std::move(basis);
  }
  return out;
}

double SubspaceCapture(const SubspaceBasis& basis, const Matrix& true_grad) {
  if (true_grad.rows() != basis.u.rows() || true_grad.cols() != basis.v.rows()) {
    throw DimensionError("SubspaceCapture: gradient " + true_grad.ShapeString() +
                         " vs frames u " + basis.u.ShapeString() + ", v " +
                         basis.v.ShapeString());
  }
  const double norm = FrobNorm(true_grad);
  if (norm == 0.0) return 0.0;
  const Matrix core = MatMul(MatMulTransA(basis.u, true_grad), basis.v);
  const Matrix kept = MatMulTransB(MatMul(basis.u, core), basis.v);
  return std::clamp(FrobNorm(true_grad - kept) / norm, 0.0, 1.0);
}

}  // namespace pgap
