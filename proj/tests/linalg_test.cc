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

#include <cmath>
#include <vector>

#include "pgap/errors.h"
#include "pgap/matrix.h"
#include "pgap/svd.h"
#include "test_util.h"

namespace pgap {
namespace {

using testing::FromEigen;
using testing::Gaussian;
using testing::OrthonormalFrame;
using testing::ToEigen;

TEST(FrobInnerTest, HandValues) {
  const Matrix i2 = Matrix::Identity(2);
  EXPECT_EQ(FrobInner(i2, i2), 2.0);
  EXPECT_EQ(FrobInner(Matrix::FromRows({{2, 0}, {0, 1}}), Matrix::FromRows({{1, 1}, {1, 1}})),
            3.0);
  const Matrix x = Gaussian(3, 4, 5);
  EXPECT_EQ(FrobInner(x, Matrix(4, 5)), 0.0);
}

TEST(FrobInnerTest, ShapeMismatchThrows) {
  EXPECT_THROW(FrobInner(Matrix(2, 3), Matrix(3, 2)), DimensionError);
}

TEST(FrobInnerTest, SymmetricAndConsistentWithNorm) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix a = Gaussian(seed, 7, 3);
    const Matrix b = Gaussian(seed + 100, 7, 3);
    EXPECT_EQ(FrobInner(a, b), FrobInner(b, a));
    const double n = FrobNorm(a);
    EXPECT_NEAR(FrobInner(a, a), n * n, 1e-12 * n * n);
    EXPECT_NEAR(FrobInner(a, b), (ToEigen(a).array() * ToEigen(b).array()).sum(), 1e-12);
  }
}

TEST(FrobNormTest, HandValues) {
  EXPECT_EQ(FrobNorm(Matrix::FromRows({{3, 4}, {0, 0}})), 5.0);
  EXPECT_EQ(FrobNorm(Matrix(3, 3)), 0.0);
  EXPECT_DOUBLE_EQ(FrobNorm(Matrix::FromRows({{2, 0}, {0, 1}})), std::sqrt(5.0));
}

TEST(MatMulTest, AgreesWithEigen) {
  const Matrix a = Gaussian(1, 5, 4);
  const Matrix b = Gaussian(2, 4, 6);
  const Matrix c = Gaussian(3, 6, 4);
  EXPECT_LT(MaxAbsDiff(MatMul(a, b), FromEigen(ToEigen(a) * ToEigen(b))), 1e-12);
  EXPECT_LT(MaxAbsDiff(MatMulTransA(a, Gaussian(4, 5, 3)),
                       FromEigen(ToEigen(a).transpose() * ToEigen(Gaussian(4, 5, 3)))),
            1e-12);
  EXPECT_LT(MaxAbsDiff(MatMulTransB(a, c), FromEigen(ToEigen(a) * ToEigen(c).transpose())),
            1e-12);
  EXPECT_THROW(MatMul(a, a), DimensionError);
}

TEST(TruncatedSvdTest, RankOneRecovery) {
  const std::vector<double> x = {1.0, -2.0, 0.5, 3.0};
  const std::vector<double> y = {0.3, 1.0, -1.5};
  const Matrix g = Outer(x, y);
  const SvdTriple t = TruncatedSvd(g, 1);
  EXPECT_LE(FrobNorm(t.Reconstruct() - g), 1e-8 * FrobNorm(g));
}

TEST(TruncatedSvdTest, DiagonalEckartYoung) {
  const std::vector<double> d = {3.0, 2.0, 1.0};
  const SvdTriple t = TruncatedSvd(Matrix::Diagonal(d), 2);
  ASSERT_EQ(t.rank(), 2u);
  EXPECT_NEAR(t.s[0], 3.0, 1e-12);
  EXPECT_NEAR(t.s[1], 2.0, 1e-12);
  EXPECT_NEAR(FrobNorm(t.Reconstruct() - Matrix::Diagonal(d)), 1.0, 1e-12);
}

TEST(TruncatedSvdTest, FullRankNoTruncation) {
  const Matrix g = Gaussian(11, 9, 5);
  const SvdTriple t = TruncatedSvd(g, 5);
  EXPECT_LE(FrobNorm(t.Reconstruct() - g), 1e-8 * FrobNorm(g));
}

TEST(TruncatedSvdTest, RankTooLargeThrows) {
  EXPECT_THROW(TruncatedSvd(Matrix(3, 4), 4), DimensionError);
}

TEST(TruncatedSvdTest, FramesOrthonormalAndValuesSorted) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix g = Gaussian(seed, 12, 7);
    const SvdTriple t = TruncatedSvd(g, 4);
    EXPECT_LT(MaxAbsDiff(MatMulTransA(t.u, t.u), Matrix::Identity(4)), 1e-10);
    EXPECT_LT(MaxAbsDiff(MatMulTransA(t.v, t.v), Matrix::Identity(4)), 1e-10);
    for (std::size_t i = 0; i < t.rank(); ++i) {
      EXPECT_GE(t.s[i], 0.0);
      if (i > 0) EXPECT_LE(t.s[i], t.s[i - 1]);
    }
  }
}

// Singular values against the eigenvalues of g^T g from an independent
// symmetric eigensolver.
TEST(TruncatedSvdTest, MatchesEigendecompositionOfGram) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const std::size_t m = 2 + seed % 7;
    const std::size_t n = 2 + (seed * 3) % 7;
    const Matrix g = Gaussian(seed + 500, m, n);
    const std::size_t r = std::min(m, n);
    const SvdTriple t = TruncatedSvd(g, r);
    const Eigen::MatrixXd e = ToEigen(g);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(e.transpose() * e);
    Eigen::VectorXd ev = es.eigenvalues().reverse();
    for (std::size_t i = 0; i < r; ++i) {
      EXPECT_NEAR(t.s[i], std::sqrt(std::max(0.0, ev(i))), 1e-8) << "seed " << seed;
    }
  }
}

TEST(TruncatedSvdTest, RandomizedPathExactOnLowRank) {
  const Matrix u = OrthonormalFrame(1, 100, 3);
  const Matrix v = OrthonormalFrame(2, 90, 3);
  const std::vector<double> s = {5.0, 2.0, 0.5};
  const Matrix g = MatMulTransB(MatMul(u, Matrix::Diagonal(s)), v);
  const SvdTriple t = TruncatedSvd(g, 3);
  EXPECT_LE(FrobNorm(t.Reconstruct() - g), 1e-8 * FrobNorm(g));
  EXPECT_NEAR(t.s[0], 5.0, 1e-9);
  EXPECT_NEAR(t.s[2], 0.5, 1e-9);
}

TEST(KronVecCheckTest, IdentityAndZero) {
  const Matrix z = Gaussian(5, 2, 2);
  EXPECT_EQ(KronVecCheck(Matrix::Identity(2), Matrix::Identity(2), z), 0.0);
  EXPECT_EQ(KronVecCheck(OrthonormalFrame(1, 4, 2), OrthonormalFrame(2, 4, 2), Matrix(2, 2)),
            0.0);
}

// Brute-force oracle: build (v kron u) explicitly in Eigen and compare with
// vec(u z v^T), both in column-major vec.
TEST(KronVecCheckTest, RandomFramesAgainstExplicitKronecker) {
  const Matrix u = OrthonormalFrame(3, 4, 2);
  const Matrix v = OrthonormalFrame(4, 4, 2);
  const Matrix z = Gaussian(6, 2, 2);
  EXPECT_LE(KronVecCheck(u, v, z), 1e-10 * FrobNorm(z));

  const Eigen::MatrixXd eu = ToEigen(u), ev = ToEigen(v), ez = ToEigen(z);
  Eigen::MatrixXd kron(ev.rows() * eu.rows(), ev.cols() * eu.cols());
  for (Eigen::Index i = 0; i < ev.rows(); ++i) {
    for (Eigen::Index j = 0; j < ev.cols(); ++j) {
      kron.block(i * eu.rows(), j * eu.cols(), eu.rows(), eu.cols()) = ev(i, j) * eu;
    }
  }
  const Eigen::MatrixXd lifted = eu * ez * ev.transpose();
  const Eigen::VectorXd lhs = Eigen::Map<const Eigen::VectorXd>(lifted.data(), lifted.size());
  const Eigen::VectorXd vz = Eigen::Map<const Eigen::VectorXd>(ez.data(), ez.size());
  EXPECT_LT((lhs - kron * vz).norm(), 1e-12);
  EXPECT_LT((kron.transpose() * kron - Eigen::MatrixXd::Identity(4, 4)).norm(), 1e-12);
}

TEST(KronVecCheckTest, ShapeMismatchThrows) {
  EXPECT_THROW(KronVecCheck(Matrix(4, 2), Matrix(4, 3), Matrix(2, 2)), DimensionError);
}

TEST(FrameIdentityTest, InnerProductAndNormInvariance) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const std::size_t m = 3 + seed % 20, n = 2 + (seed * 7) % 20;
    const std::size_t r = 1 + seed % std::min<std::size_t>(m, n);
    const Matrix u = OrthonormalFrame(seed, m, r);
    const Matrix v = OrthonormalFrame(seed + 1000, n, r);
    const Matrix s = Gaussian(seed + 2000, r, r);
    const Matrix c = Gaussian(seed + 3000, m, n);
    const Matrix usv = MatMulTransB(MatMul(u, s), v);
    const double lhs = FrobInner(usv, c);
    const double rhs = FrobInner(s, MatMul(MatMulTransA(u, c), v));
    EXPECT_LE(std::abs(lhs - rhs), 1e-10 * std::max(1.0, std::abs(lhs)));
    EXPECT_LE(std::abs(FrobNorm(usv) - FrobNorm(s)), 1e-10 * FrobNorm(s));
  }
}

TEST(BlockDiagonalTest, StackedFramesStayOrthonormal) {
  std::vector<Matrix> blocks;
  for (std::uint64_t l = 0; l < 3; ++l) {
    const Matrix u = OrthonormalFrame(l, 5, 2);
    const Matrix v = OrthonormalFrame(l + 10, 4, 2);
    blocks.push_back(Kronecker(v, u));
  }
  const Matrix p = BlockDiagonal(blocks);
  EXPECT_EQ(p.rows(), 60u);
  EXPECT_EQ(p.cols(), 12u);
  EXPECT_LT(MaxAbsDiff(MatMulTransA(p, p), Matrix::Identity(12)), 1e-10);
}

}  // namespace
}  // namespace pgap
