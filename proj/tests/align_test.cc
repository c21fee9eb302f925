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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "pgap/align.h"
#include "pgap/errors.h"
#include "test_util.h"

namespace pgap {
namespace {

using testing::Gaussian;
using testing::RandomBasis;

TEST(ProjectLowDimTest, HandExample) {
  const Matrix s = Matrix::FromRows({{2, 0}, {0, 1}});
  const Matrix z = ProjectLowDim(Matrix::FromRows({{1, 1}, {1, 1}}), s, 1.0, 1);
  const double alpha = (3.0 - std::sqrt(5.0)) / 5.0;
  EXPECT_NEAR(z(0, 0), 1 - 2 * alpha, 1e-15);
  EXPECT_EQ(z(0, 1), 1.0);
  EXPECT_EQ(z(1, 0), 1.0);
  EXPECT_NEAR(z(1, 1), 1 - alpha, 1e-15);
  EXPECT_NEAR(FrobInner(s, z), std::sqrt(5.0), 1e-14);
}

TEST(ProjectLowDimTest, FixedPointAndGuard) {
  const Matrix s = Matrix::FromRows({{2, 0}, {0, 1}});
  // <s, z> = 2 * sqrt(5) / 2 = sqrt(5) = sqrt(delta) |s| with delta = 1.
  const Matrix on_plane = Matrix::FromRows({{std::sqrt(5.0) / 2, 3}, {-1, 0}});
  EXPECT_LT(MaxAbsDiff(ProjectLowDim(on_plane, s, 1.0, 1), on_plane), 1e-15);
  const Matrix z = Gaussian(1, 3, 3);
  EXPECT_EQ(ProjectLowDim(z, Matrix(3, 3), 2.0, -1), z);
}

TEST(ProjectLowDimTest, RejectsBadArguments) {
  const Matrix s = Matrix::Identity(2);
  EXPECT_THROW(ProjectLowDim(Matrix(2, 2), s, -1.0, 1), ConfigError);
  EXPECT_THROW(ProjectLowDim(Matrix(2, 2), s, 1.0, 0), ConfigError);
  EXPECT_THROW(ProjectLowDim(Matrix(3, 3), s, 1.0, 1), DimensionError);
}

TEST(ProjectLowDimTest, HyperplaneAndIdempotence) {
  GaussStream rng(Seed{77});
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t r = std::vector<std::size_t>{2, 8, 32}[trial % 3];
    std::vector<double> diag(r);
    for (double& x : diag) x = std::abs(rng.NextGaussian());
    const Matrix s = Matrix::Diagonal(diag);
    const Matrix z0 = rng.GaussMatrix(r, r);
    const double delta = 2.0 * rng.NextUniform();
    const int xi = rng.RademacherSign();
    const Matrix z = ProjectLowDim(z0, s, delta, xi);
    const double want = xi * std::sqrt(delta) * FrobNorm(s);
    EXPECT_LE(std::abs(FrobInner(s, z) - want), 1e-9 * (1 + FrobNorm(s)));
    EXPECT_LT(MaxAbsDiff(ProjectLowDim(z, s, delta, xi), z), 1e-12);
    // Only the diagonal moves.
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < r; ++j) {
        if (i != j) ASSERT_EQ(z(i, j), z0(i, j));
      }
    }
  }
}

// Components orthogonal to S keep standard normal marginals.
TEST(ProjectLowDimTest, OrthogonalComponentStaysStandardNormal) {
  const Matrix s = Matrix::FromRows({{2, 0}, {0, 1}});
  const Matrix d = Matrix::FromRows({{1, 0}, {0, -2}}) * (1.0 / std::sqrt(5.0));
  GaussStream rng(Seed{3});
  std::vector<double> xs(100000);
  for (double& x : xs) {
    x = FrobInner(d, ProjectLowDim(rng.GaussMatrix(2, 2), s, 1.0, rng.RademacherSign()));
  }
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = 0.5 * std::erfc(-xs[i] / std::sqrt(2.0));
    ks = std::max({ks, f - i / n, (i + 1) / n - f});
  }
  EXPECT_LT(ks, 1.628 / std::sqrt(n));
}

TEST(LiftTest, IdentityZeroAndIsometry) {
  SubspaceBasis id{Matrix::Identity(3), {1, 1, 1}, Matrix::Identity(3), 0};
  const Matrix z = Gaussian(2, 3, 3);
  EXPECT_EQ(Lift(z, id), z);
  const SubspaceBasis b = RandomBasis(5, 12, 9, 4);
  EXPECT_EQ(FrobNorm(Lift(Matrix(4, 4), b)), 0.0);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const SubspaceBasis fb = RandomBasis(seed, 10 + seed % 30, 5 + seed % 17, 1 + seed % 5);
    const Matrix zz = Gaussian(seed, fb.rank(), fb.rank());
    EXPECT_LE(std::abs(FrobNorm(Lift(zz, fb)) - FrobNorm(zz)), 1e-10 * FrobNorm(zz));
  }
  EXPECT_THROW(Lift(Matrix(3, 3), b), DimensionError);
}

TEST(LiftTest, GradientInnerProductCarriesHyperplane) {
  const SubspaceBasis b = RandomBasis(9, 20, 15, 4);
  const Matrix grad = Lift(b.SigmaMatrix(), b);
  const AlignedPerturbation p = MakeAlignedPerturbation(Gaussian(1, 4, 4), b, 1.5, -1);
  const double want = -std::sqrt(1.5) * FrobNorm(b.SigmaMatrix());
  EXPECT_NEAR(FrobInner(grad, p.lifted), want, 1e-9 * (1 + std::abs(want)));
  EXPECT_LT(MaxAbsDiff(p.lifted, Lift(p.low_dim, b)), 1e-12);
}

TEST(AlignFullspaceMatrixTest, Examples) {
  const Matrix grad = Gaussian(1, 4, 3);
  // Orthogonal c_init with delta = 0 is a fixed point.
  Matrix c = Gaussian(2, 4, 3);
  Axpy(-FrobInner(grad, c) / FrobInner(grad, grad), grad, c);
  EXPECT_LT(MaxAbsDiff(AlignFullspaceMatrix(c, grad, 0.0, 1), c), 1e-12);
  // c_init = grad lands on (xi sqrt(delta) / |grad|) grad.
  const Matrix out = AlignFullspaceMatrix(grad, grad, 1.0, 1);
  EXPECT_LT(MaxAbsDiff(out, grad * (1.0 / FrobNorm(grad))), 1e-12);
  EXPECT_NEAR(FrobInner(out, grad), FrobNorm(grad), 1e-12);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Matrix g = Gaussian(seed, 5, 6);
    const Matrix ci = Gaussian(seed + 1000, 5, 6);
    const int xi = seed % 2 ? 1 : -1;
    const Matrix a = AlignFullspaceMatrix(ci, g, 0.7, xi);
    const double want = xi * std::sqrt(0.7) * FrobNorm(g);
    EXPECT_LE(std::abs(FrobInner(a, g) - want), 1e-9 * std::abs(want));
  }
}

TEST(AlignFullspaceVectorTest, Examples) {
  for (double a : {3.0, -0.5}) {
    const std::vector<double> g = {a};
    const std::vector<double> v = AlignFullspaceVector(std::vector<double>{0.3}, g, 1.0, 1);
    EXPECT_NEAR(a * v[0], std::abs(a), 1e-14);
  }
  const std::vector<double> g = {1, 2, 2};
  const std::vector<double> perp = {2, -1, 0};
  EXPECT_EQ(AlignFullspaceVector(perp, g, 0.0, 1), perp);
  const std::vector<double> v = AlignFullspaceVector(std::vector<double>{0.1, -3, 4}, g, 2.0, -1);
  const double dot = v[0] * g[0] + v[1] * g[1] + v[2] * g[2];
  EXPECT_NEAR(dot, -std::sqrt(2.0) * 3.0, 1e-10);
}

TEST(ConsistencyCheckTest, LowDimMatchesFullspaceInFrameSpan) {
  const SubspaceBasis square = RandomBasis(4, 5, 5, 5);
  EXPECT_LE(ConsistencyCheckLowDimVsFullspace(square, Gaussian(1, 5, 5), 1.0, 1), 1e-9);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const SubspaceBasis b = RandomBasis(seed, 16, 12, 4);
    const Matrix c_in_span = Lift(Gaussian(seed, 4, 4), b);
    EXPECT_LE(ConsistencyCheckLowDimVsFullspace(b, c_in_span, 2.0 * (seed % 3) / 2, -1), 1e-9);
  }
  const SubspaceBasis b = RandomBasis(3, 6, 6, 3);
  EXPECT_LE(ConsistencyCheckLowDimVsFullspace(b, Matrix(6, 6), 1.0, 1), 1e-12);
}

}  // namespace
}  // namespace pgap
