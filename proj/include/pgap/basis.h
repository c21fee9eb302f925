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

#ifndef PGAP_BASIS_H_
#define PGAP_BASIS_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "pgap/matrix.h"

namespace pgap {

// Low-rank frame of one matrix parameter: u (m x r) and v (n x r) with
// orthonormal columns, singular values s (non-increasing), and the step at
// which the frame was estimated.
struct SubspaceBasis {
  Matrix u;
  std::vector<double> s;
  Matrix v;
  std::int64_t born_at_step = 0;

  std::size_t rank() const { return s.size(); }
  // diag(s), the r x r coefficient matrix consumed by the projection.
  Matrix SigmaMatrix() const { return Matrix::Diagonal(s); }
  // True while the frame may be consumed under a refresh window of k steps.
  bool FreshAt(std::int64_t step, std::int64_t k) const {
    return step >= born_at_step && step - born_at_step < k;
  }
};

// One entry per parameter, indexed like the ParamSet; null for parameters
// without a frame.
using BasisSet = std::vector<std::shared_ptr<const SubspaceBasis>>;

}  // namespace pgap

#endif  // PGAP_BASIS_H_
