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

#include "pgap/align.h"

#include <cmath>
#include <string>

#include "pgap/errors.h"

namespace pgap {
namespace {

void CheckDeltaXi(double delta, int xi, const char* who) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) {
    throw ConfigError(std::string(who) + ": delta must be finite and >= 0");
  }
  if (xi != 1 && xi != -1) {
    throw ConfigError(std::string(who) + ": xi must be +1 or -1");
  }
}

// Shared correction step; `guard` is the norm below which nothing is done.
Matrix CorrectAlong(const Matrix& init, const Matrix& dir, double delta, int xi,
                    double guard) {
  const double norm = FrobNorm(dir);
  if (!(norm > guard)) return init;
  const double alpha =
      (FrobInner(dir, init) - xi * std::sqrt(delta) * norm) / (norm * norm);
  Matrix out = init;
  Axpy(-alpha, dir, out);
  return out;
}

}  // namespace

Matrix ProjectLowDim(const Matrix& z_init, const Matrix& s, double delta,
                     int xi) {
  CheckDeltaXi(delta, xi, "ProjectLowDim");
  if (!z_init.SameShape(s) || s.rows() != s.cols()) {
    throw DimensionError("ProjectLowDim: z " + z_init.ShapeString() + ", s " +
                         s.ShapeString());
  }
  return CorrectAlong(z_init, s, delta, xi, 1e-8 * static_cast<double>(s.rows()));
}

Matrix Lift(const Matrix& z, const SubspaceBasis& basis) {
  if (z.rows() != basis.u.cols() || z.cols() != basis.v.cols()) {
    throw DimensionError("Lift: z " + z.ShapeString() + " vs frames u " +
                         basis.u.ShapeString() + ", v " + basis.v.ShapeString());
  }
  return MatMulTransB(MatMul(basis.u, z), basis.v);
}

Matrix AlignFullspaceMatrix(const Matrix& c_init, const Matrix& grad,
                            double delta, int xi) {
  CheckDeltaXi(delta, xi, "AlignFullspaceMatrix");
  if (!c_init.SameShape(grad)) {
    throw DimensionError("AlignFullspaceMatrix: " + c_init.ShapeString() +
                         " vs " + grad.ShapeString());
  }
  return CorrectAlong(c_init, grad, delta, xi,
                      1e-8 * std::sqrt(static_cast<double>(grad.size())));
}

std::vector<double> AlignFullspaceVector(std::span<const double> v_init,
                                         std::span<const double> grad,
                                         double delta, int xi) {
  if (v_init.size() != grad.size()) {
    throw DimensionError("AlignFullspaceVector: lengths " +
                         std::to_string(v_init.size()) + " and " +
                         std::to_string(grad.size()));
  }
  const Matrix out = AlignFullspaceMatrix(Matrix::Column(v_init),
                                          Matrix::Column(grad), delta, xi);
  return out.values();
}

AlignedPerturbation MakeAlignedPerturbation(const Matrix& z_init,
                                            const SubspaceBasis& basis,
                                            double delta, int xi) {
  AlignedPerturbation out;
  out.low_dim = ProjectLowDim(z_init, basis.SigmaMatrix(), delta, xi);
  out.lifted = Lift(out.low_dim, basis);
  out.xi = xi;
  out.delta = delta;
  return out;
}

double ConsistencyCheckLowDimVsFullspace(const SubspaceBasis& basis,
                                         const Matrix& c_init, double delta,
                                         int xi) {
  if (c_init.rows() != basis.u.rows() || c_init.cols() != basis.v.rows()) {
    throw DimensionError("ConsistencyCheck: c_init " + c_init.ShapeString() +
                         " vs frames u " + basis.u.ShapeString() + ", v " +
                         basis.v.ShapeString());
  }
  const Matrix low = MatMul(MatMulTransA(basis.u, c_init), basis.v);
  const Matrix via_low = Lift(ProjectLowDim(low, basis.SigmaMatrix(), delta, xi),
                              basis);
  const Matrix restricted = Lift(low, basis);
  const Matrix grad = Lift(basis.SigmaMatrix(), basis);
  const Matrix via_full = AlignFullspaceMatrix(restricted, grad, delta, xi);
  return FrobNorm(via_low - via_full);
}

}  // namespace pgap
