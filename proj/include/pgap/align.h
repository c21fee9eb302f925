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

// Gradient-aligned perturbations.
//
// A raw Gaussian perturbation is corrected along the gradient direction so
// that its Frobenius inner product with the gradient equals xi * sqrt(delta)
// times the gradient norm. The low-dimensional form works on r x r
// coefficients and lifts them into parameter space through a frame pair.

#ifndef PGAP_ALIGN_H_
#define PGAP_ALIGN_H_

#include <span>
#include <vector>

#include "pgap/basis.h"
#include "pgap/matrix.h"

namespace pgap {

struct AlignedPerturbation {
  Matrix low_dim;  // r x r corrected coefficients
  Matrix lifted;   // m x n, u * low_dim * v^T
  int xi = 1;
  double delta = 0.0;
};

// Projection of z_init onto {Z : <s, Z>_F = xi sqrt(delta) ||s||_F}:
//
//   Z = z_init - alpha s,  alpha = (<s, z_init>_F - xi sqrt(delta) ||s||_F)
//                                  / ||s||_F^2
//
// When ||s||_F <= 1e-8 * r the gradient carries no usable direction and z_init
// is returned unchanged. Throws DimensionError on shape mismatch or
// ConfigError for delta < 0 or |xi| != 1.
Matrix ProjectLowDim(const Matrix& z_init, const Matrix& s, double delta, int xi);

// u * z * v^T.
Matrix Lift(const Matrix& z, const SubspaceBasis& basis);

// Full-space matrix form: c_init corrected along grad. Passes c_init through
// when ||grad||_F <= 1e-8 * sqrt(numel).
Matrix AlignFullspaceMatrix(const Matrix& c_init, const Matrix& grad,
                            double delta, int xi);

// Vector specialisation of AlignFullspaceMatrix.
std::vector<double> AlignFullspaceVector(std::span<const double> v_init,
                                         std::span<const double> grad,
                                         double delta, int xi);

// Projects z_init (r x r) against basis.SigmaMatrix() and lifts the result.
AlignedPerturbation MakeAlignedPerturbation(const Matrix& z_init,
                                            const SubspaceBasis& basis,
                                            double delta, int xi);

// Compares the two routes to an aligned perturbation for a gradient equal to
// u diag(s) v^T and a starting perturbation c_init (m x n) restricted to the
// frame span: lifting the low-dimensional projection of u^T c_init v, and
// aligning the restricted c_init in full space. Returns the Frobenius norm of
// the difference.
double ConsistencyCheckLowDimVsFullspace(const SubspaceBasis& basis,
                                         const Matrix& c_init, double delta,
                                         int xi);

}  // namespace pgap

#endif  // PGAP_ALIGN_H_
