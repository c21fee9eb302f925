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
#include <memory>
#include <vector>

#include "pgap/align.h"
#include "pgap/errors.h"
#include "pgap/estimator.h"
#include "pgap/objectives.h"
#include "pgap/subspace.h"
#include "test_util.h"

namespace pgap {
namespace {

// L(W) = sum_l <A_l, W_l> plus a dense bias term <c, b>.
class LinearMatrixOracle final : public LossOracle {
 public:
  LinearMatrixOracle(std::vector<Matrix> a, Matrix c) : a_(std::move(a)), c_(std::move(c)) {}
  std::string Name() const override { return "linear_matrix"; }
  ParamSet Initialize(Seed) const override {
    ParamSet p;
    for (std::size_t l = 0; l < a_.size(); ++l) {
      p.Add("W" + std::to_string(l), Matrix(a_[l].rows(), a_[l].cols()),
            ParamKind::kMatrixSubspace);
    }
    p.Add("b", Matrix(c_.rows(), c_.cols()), ParamKind::kDense);
    return p;
  }
  double Loss(const ParamSet& p, const Batch&) const override {
    double s = FrobInner(c_, p.tensor(a_.size()));
    for (std::size_t l = 0; l < a_.size(); ++l) s += FrobInner(a_[l], p.tensor(l));
    return s;
  }
  ParamSet Gradient(const ParamSet& p, const Batch&) const override {
    ParamSet g = p.ZerosLike();
    for (std::size_t l = 0; l < a_.size(); ++l) g.tensor(l) = a_[l];
    g.tensor(a_.size()) = c_;
    return g;
  }

 private:
  std::vector<Matrix> a_;
  Matrix c_;
};

TEST(ShouldRefreshTest, WindowBoundaries) {
  const RefreshSchedule s{100, 10};
  EXPECT_TRUE(ShouldRefresh(s, 0));
  EXPECT_TRUE(ShouldRefresh(s, 100));
  EXPECT_FALSE(ShouldRefresh(s, 55));
  EXPECT_FALSE(ShouldRefresh(s, 99));
  EXPECT_THROW(ShouldRefresh(s, -1), ConfigError);
  EXPECT_THROW((RefreshSchedule{0, 10}.Validate()), ConfigError);
  EXPECT_THROW((RefreshSchedule{10, 0}.Validate()), ConfigError);
}

TEST(LowerDimGenerateTest, LinearOracleSingleProbeIsExact) {
  const Matrix a = testing::Gaussian(1, 5, 4);
  LinearMatrixOracle oracle({a}, testing::Gaussian(2, 3, 1));
  ParamSet p = oracle.Initialize(Seed{0});
  const Seed seed{17};
  const ProbeResult res = LowerDimGenerate(oracle, p, {}, 1, 2, 0.01, seed);
  const PerturbPlan plan = BuildPlan(p, DeriveSubstream(seed, "probe", 0), 0.01, nullptr, 0);
  const Matrix q = plan.Materialize(0, 5, 4);
  const Matrix c_dir = plan.Materialize(1, 3, 1);
  const double want = FrobInner(a, q) + FrobInner(testing::Gaussian(2, 3, 1), c_dir);
  ASSERT_EQ(res.rhos.size(), 1u);
  EXPECT_NEAR(res.rhos[0], want, 1e-10 * std::max(1.0, std::abs(want)));
  EXPECT_LT(MaxAbsDiff(res.averaged[0], q * res.rhos[0]), 1e-14);
  // The frame is the best rank-2 approximation of G.
  const auto& b = *res.bases[0];
  const Matrix rebuilt = MatMulTransB(MatMul(b.u, b.SigmaMatrix()), b.v);
  const Eigen::JacobiSVD<Eigen::MatrixXd> oracle_svd(testing::ToEigen(res.averaged[0]));
  const auto sv = oracle_svd.singularValues();
  EXPECT_NEAR(b.s[0], sv(0), 1e-12);
  EXPECT_NEAR(b.s[1], sv(1), 1e-12);
  EXPECT_NEAR(FrobNorm(rebuilt - res.averaged[0]), std::hypot(sv(2), sv(3)), 1e-12);
  EXPECT_FALSE(res.bases[1]);  // dense parameter gets no basis

  ParamSet p2 = oracle.Initialize(Seed{0});
  const ProbeResult again = LowerDimGenerate(oracle, p2, {}, 1, 2, 0.01, seed);
  EXPECT_EQ(again.averaged[0], res.averaged[0]);
}

TEST(LowerDimGenerateTest, SharedRhoAcrossLayersAndEvaluationCount) {
  auto oracle = std::make_shared<LinearMatrixOracle>(
      std::vector<Matrix>{testing::Gaussian(1, 6, 5), testing::Gaussian(2, 4, 7)},
      testing::Gaussian(3, 2, 1));
  CountingOracle counting(oracle);
  ParamSet p = oracle->Initialize(Seed{0});
  const ParamSet before = p;
  const Seed seed{5};
  const std::int64_t h = 7;
  const ProbeResult res = LowerDimGenerate(counting, p, {}, h, 3, 0.1, seed, 42);
  EXPECT_EQ(counting.evaluations(), static_cast<std::size_t>(2 * h));
  EXPECT_TRUE(p == before);
  for (std::size_t l = 0; l < 2; ++l) {
    Matrix g(p.tensor(l).rows(), p.tensor(l).cols());
    for (std::int64_t j = 0; j < h; ++j) {
      const PerturbPlan plan =
          BuildPlan(p, DeriveSubstream(seed, "probe", j), 0.1, nullptr, 0);
      Axpy(res.rhos[j] / h, plan.Materialize(l, g.rows(), g.cols()), g);
    }
    EXPECT_LT(MaxAbsDiff(g, res.averaged[l]), 1e-12) << l;
    EXPECT_EQ(res.bases[l]->born_at_step, 42);
    EXPECT_EQ(res.bases[l]->rank(), 3u);
  }
}

TEST(LowerDimGenerateTest, Preconditions) {
  LinearMatrixOracle oracle({Matrix(3, 4)}, Matrix(1, 1));
  ParamSet p = oracle.Initialize(Seed{0});
  EXPECT_THROW(LowerDimGenerate(oracle, p, {}, 0, 2, 0.1, Seed{1}), ConfigError);
  EXPECT_THROW(LowerDimGenerate(oracle, p, {}, 1, 4, 0.1, Seed{1}), DimensionError);
}

TEST(SubspaceCaptureTest, InsideOrthogonalAndZero) {
  const SubspaceBasis b = testing::RandomBasis(1, 8, 6, 2);
  EXPECT_NEAR(SubspaceCapture(b, Lift(testing::Gaussian(1, 2, 2), b)), 0.0, 1e-12);
  // u_perp x anything is orthogonal to the frame product space.
  Matrix x = testing::Gaussian(3, 8, 1);
  Axpy(-1.0, MatMul(b.u, MatMulTransA(b.u, x)), x);
  const Matrix outside = MatMulTransB(x, testing::Gaussian(4, 6, 1));
  EXPECT_NEAR(SubspaceCapture(b, outside), 1.0, 1e-12);
  EXPECT_EQ(SubspaceCapture(b, Matrix(8, 6)), 0.0);
}

TEST(SubspaceCaptureTest, NoiselessProbesRecoverLowRankGradient) {
  const Matrix u = testing::OrthonormalFrame(1, 12, 2);
  const Matrix v = testing::OrthonormalFrame(2, 10, 2);
  const std::vector<double> s = {2.0, 1.0};
  const Matrix a = MatMulTransB(MatMul(u, Matrix::Diagonal(s)), v);
  LinearMatrixOracle oracle({a}, Matrix(1, 1));
  ParamSet p = oracle.Initialize(Seed{0});
  const ProbeResult res = LowerDimGenerate(oracle, p, {}, 4000, 2, 0.01, Seed{3});
  EXPECT_LE(SubspaceCapture(*res.bases[0], a), 0.5);
}

}  // namespace
}  // namespace pgap
