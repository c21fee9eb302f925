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

// Lazy low-rank gradient subspace estimation.

#ifndef PGAP_SUBSPACE_H_
#define PGAP_SUBSPACE_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pgap/basis.h"
#include "pgap/matrix.h"
#include "pgap/objectives.h"
#include "pgap/params.h"
#include "pgap/random.h"

namespace pgap {

struct RefreshSchedule {
  std::int64_t k = 100;  // window size
  std::int64_t h = 10;   // probes per refresh

  // Throws ConfigError unless k >= 1 and h >= 1.
  void Validate() const;
};

// True iff step mod k == 0. Throws ConfigError for a negative step.
bool ShouldRefresh(const RefreshSchedule& schedule, std::int64_t step);

struct ProbeResult {
  // Indexed like the ParamSet; set for every kMatrixSubspace parameter.
  BasisSet bases;
  // One shared coefficient per probe, in probe order.
  std::vector<double> rhos;
  // Probe-averaged gradient estimate per parameter (zero-sized for
  // parameters without a frame).
  std::vector<Matrix> averaged;
};

// h joint probes: every parameter is perturbed by its own Gaussian Q^j, one
// scalar rho_j is measured for the whole set, and each matrix parameter
// accumulates (rho_j / h) Q^j. The accumulators are then reduced to rank-r
// frames. Exactly 2h oracle calls; parameters are restored bit-exactly.
//
// Throws ConfigError for h < 1 or r < 1, DimensionError if a matrix parameter
// has min(m, n) < r, NumericError (naming the parameter) if an SVD fails.
ProbeResult LowerDimGenerate(const LossOracle& oracle, ParamSet& params,
                             const Batch& batch, std::int64_t h, std::size_t r,
                             double eps, Seed seed, std::int64_t born_at_step = 0);

// ||g - u u^T g v v^T||_F / ||g||_F; 0 when g is zero.
double SubspaceCapture(const SubspaceBasis& basis, const Matrix& true_grad);

}  // namespace pgap

#endif  // PGAP_SUBSPACE_H_
