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

// Shared helpers for the unit tests.

#ifndef PGAP_TESTS_TEST_UTIL_H_
#define PGAP_TESTS_TEST_UTIL_H_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>

#include "pgap/basis.h"
#include "pgap/matrix.h"
#include "pgap/random.h"
#include "pgap/svd.h"

namespace pgap::testing {

inline Eigen::MatrixXd ToEigen(const Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  }
  return e;
}

inline Matrix FromEigen(const Eigen::MatrixXd& e) {
  Matrix m(e.rows(), e.cols());
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    for (Eigen::Index j = 0; j < e.cols(); ++j) m(i, j) = e(i, j);
  }
  return m;
}

inline Matrix Gaussian(std::uint64_t seed, std::size_t rows, std::size_t cols) {
  GaussStream s(Seed{seed});
  return s.GaussMatrix(rows, cols);
}

// Orthonormal columns from Eigen's Householder QR, independent of the
// library's own orthonormalization.
inline Matrix OrthonormalFrame(std::uint64_t seed, std::size_t rows, std::size_t cols) {
  const Eigen::MatrixXd g = ToEigen(Gaussian(seed, rows, cols));
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  const Eigen::MatrixXd q =
      qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
  return FromEigen(q);
}

inline SubspaceBasis RandomBasis(std::uint64_t seed, std::size_t m, std::size_t n,
                                 std::size_t r) {
  SubspaceBasis b;
  b.u = OrthonormalFrame(seed, m, r);
  b.v = OrthonormalFrame(seed + 7919, n, r);
  GaussStream s(Seed{seed + 104729});
  for (std::size_t i = 0; i < r; ++i) b.s.push_back(std::abs(s.NextGaussian()) + 0.1);
  std::sort(b.s.begin(), b.s.end(), std::greater<>());
  return b;
}

inline double RelErr(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

}  // namespace pgap::testing

#endif  // PGAP_TESTS_TEST_UTIL_H_
