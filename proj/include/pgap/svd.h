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

#ifndef PGAP_SVD_H_
#define PGAP_SVD_H_

#include <cstddef>
#include <span>
#include <vector>

#include "pgap/matrix.h"

namespace pgap {

// Thin singular value decomposition g ~= u * diag(s) * v^T.
//
// u is m x r and v is n x r with orthonormal columns; s is non-negative and
// non-increasing. Signs are carried by u and v, never by s.
struct SvdTriple {
  Matrix u;
  std::vector<double> s;
  Matrix v;

  std::size_t rank() const { return s.size(); }
  // diag(s) as an r x r matrix.
  Matrix SigmaMatrix() const;
  Matrix Reconstruct() const;
};

// Largest min(rows, cols) at which TruncatedSvd runs exact Jacobi; above it
// the randomized range finder is used.
inline constexpr std::size_t kExactSvdLimit = 64;

// Best rank-r factorisation of g. Throws DimensionError when r is zero or
// exceeds min(rows, cols), NumericError when Jacobi sweeps do not converge.
SvdTriple TruncatedSvd(const Matrix& g, std::size_t r);

// Full thin SVD by one-sided (Hestenes) Jacobi rotations.
SvdTriple JacobiSvd(const Matrix& g);

// Randomized range finder (Gaussian sketch of width r + 8, two power
// iterations) followed by an exact SVD of the projected core.
SvdTriple RandomizedSvd(const Matrix& g, std::size_t r);

// Orthonormal basis for the column space of a (rows >= cols), by modified
// Gram-Schmidt with one re-orthogonalisation pass. Rank-deficient columns are
// replaced by canonical directions so the result always has orthonormal
// columns.
Matrix Orthonormalize(Matrix a);

// ||vec(u z v^T) - (v kron u) vec(z)||_2, evaluated with an explicit
// Kronecker product. Test support for the frame lifting identity.
double KronVecCheck(const Matrix& u, const Matrix& v, const Matrix& z);

// bdiag(blocks...).
Matrix BlockDiagonal(std::span<const Matrix> blocks);

}  // namespace pgap

#endif  // PGAP_SVD_H_
