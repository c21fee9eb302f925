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
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "pgap/errors.h"
#include "pgap/objectives.h"
#include "test_util.h"

namespace pgap {
namespace {

// Central differences, written independently of the library helper.
ParamSet CentralDifference(const LossOracle& oracle, const ParamSet& at, const Batch& batch) {
  const double h = 1e-5;
  ParamSet g = at.ZerosLike();
  ParamSet p = at;
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto d = p.tensor(i).data();
    for (std::size_t k = 0; k < d.size(); ++k) {
      const double keep = d[k];
      d[k] = keep + h;
      const double up = oracle.Loss(p, batch);
      d[k] = keep - h;
      const double down = oracle.Loss(p, batch);
      d[k] = keep;
      g.tensor(i).data()[k] = (up - down) / (2 * h);
    }
  }
  return g;
}

void ExpectGradientMatches(const LossOracle& oracle, const ParamSet& at, const Batch& batch,
                           double tol = 1e-6) {
  const ParamSet analytic = oracle.Gradient(at, batch);
  const ParamSet numeric = CentralDifference(oracle, at, batch);
  ASSERT_TRUE(analytic.SameLayout(numeric));
  for (std::size_t i = 0; i < at.size(); ++i) {
    const auto a = analytic.tensor(i).data();
    const auto n = numeric.tensor(i).data();
    for (std::size_t k = 0; k < a.size(); ++k) {
      ASSERT_NEAR(a[k], n[k], tol * std::max(1.0, std::abs(n[k])))
          << oracle.Name() << " " << at.name(i) << "[" << k << "]";
    }
  }
}

ParamSet Perturbed(ParamSet p, std::uint64_t seed, double scale) {
  GaussStream s(Seed{seed});
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (double& x : p.tensor(i).data()) x += scale * s.NextGaussian();
  }
  return p;
}

ParamSet Vector(std::vector<double> x) {
  ParamSet p;
  p.Add("x", Matrix::Column(x), ParamKind::kDense);
  return p;
}

TEST(QuadraticTest, HandValues) {
  const QuadraticObjective q(Matrix::Identity(3));
  EXPECT_EQ(q.Loss(Vector({1, 0, 0}), {}), 1.0);
  EXPECT_EQ(q.Loss(Vector({0, 0, 0}), {}), 0.0);
}

TEST(QuadraticTest, GradientIsSymmetrizedH) {
  const Matrix h = testing::Gaussian(3, 4, 4);  // not symmetric
  const QuadraticObjective q(h);
  const std::vector<double> x = {0.5, -1.0, 2.0, 0.25};
  const Eigen::VectorXd ex = Eigen::Map<const Eigen::VectorXd>(x.data(), 4);
  const Eigen::MatrixXd eh = testing::ToEigen(h);
  const Eigen::VectorXd want = (eh + eh.transpose()) * ex;
  const Matrix got = q.Gradient(Vector(x), {}).tensor(0);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(got(i, 0), want(i), 1e-12);
}

TEST(QuadraticTest, LossEqualsQuadraticFormUpTo256) {
  for (std::size_t d : {1u, 7u, 64u, 256u}) {
    const Matrix h = testing::Gaussian(d, d, d);
    const QuadraticObjective q(h);
    const Matrix x = testing::Gaussian(d + 1, d, 1);
    const Eigen::VectorXd ex = testing::ToEigen(x);
    const double want = ex.dot(testing::ToEigen(h) * ex);
    ParamSet p;
    p.Add("x", x, ParamKind::kDense);
    EXPECT_NEAR(q.Loss(p, {}), want, 1e-10 * std::max(1.0, std::abs(want))) << d;
  }
}

TEST(QuadraticTest, ShapeMismatchThrows) {
  const QuadraticObjective q(Matrix::Identity(3));
  EXPECT_THROW(q.Loss(Vector({1, 2}), {}), DimensionError);
}

TEST(LogisticTest, ZeroWeightsGiveLnTwo) {
  const LinearModelObjective m(LinearLoss::kLogistic, LinearLayout::Vector(3));
  Batch b{testing::Gaussian(1, 6, 3), {1, 0, 1, 0, 1, 0}};
  EXPECT_NEAR(m.Loss(m.Initialize(Seed{0}), b), std::log(2.0), 1e-15);
}

TEST(ObjectiveGradientTest, AllTasksMatchCentralDifferences) {
  SyntheticSpec lin;
  lin.kind = TaskKind::kLogistic;
  lin.layout.blocks = {{3, 4}, {2, 3}};
  lin.label_noise = 0.1;
  const SyntheticData logi = MakeSynthetic(lin, Seed{1}, 40, 18);
  lin.kind = TaskKind::kLeastSquares;
  const SyntheticData ls = MakeSynthetic(lin, Seed{2}, 40, 18);
  SyntheticSpec mlp_spec;
  mlp_spec.kind = TaskKind::kTinyMlp;
  mlp_spec.hidden = 6;
  mlp_spec.classes = 4;
  const SyntheticData mlp_data = MakeSynthetic(mlp_spec, Seed{3}, 30, 5);

  const LinearModelObjective logistic(LinearLoss::kLogistic, lin.layout);
  const LinearModelObjective lsq(LinearLoss::kLeastSquares, lin.layout);
  const TinyMlpObjective mlp(5, 6, 4);
  RankQuadraticSpec rq;
  rq.shapes = {{5, 4}, {3, 6}};
  rq.planted_rank = 2;
  rq.mu = 0.3;
  const RankQuadraticObjective rank_quad(rq, Seed{4});
  const QuadraticObjective quad(testing::Gaussian(5, 6, 6));

  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    ExpectGradientMatches(logistic, Perturbed(logistic.Initialize(Seed{0}), trial, 0.5),
                          logi.batch);
    ExpectGradientMatches(lsq, Perturbed(lsq.Initialize(Seed{0}), trial, 0.5), ls.batch);
    ExpectGradientMatches(mlp, Perturbed(mlp.Initialize(Seed{trial}), trial, 0.1),
                          mlp_data.batch);
    ExpectGradientMatches(rank_quad, Perturbed(rank_quad.Initialize(Seed{0}), trial, 0.3), {});
    ExpectGradientMatches(quad, Perturbed(quad.Initialize(Seed{trial}), trial, 0.3), {});
  }
}

TEST(LeastSquaresTest, ZeroGradientAtNoiselessSolution) {
  SyntheticSpec spec;
  spec.kind = TaskKind::kLeastSquares;
  const SyntheticData data = MakeSynthetic(spec, Seed{9}, 50, 6);
  const LinearModelObjective m(LinearLoss::kLeastSquares, LinearLayout::Vector(6));
  const ParamSet g = m.Gradient(data.truth, data.batch);
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (double x : g.tensor(i).data()) EXPECT_NEAR(x, 0.0, 1e-14);
  }
}

TEST(PurityTest, RepeatedEvaluationBitIdentical) {
  const TinyMlpObjective mlp(4, 5, 3);
  SyntheticSpec spec;
  spec.kind = TaskKind::kTinyMlp;
  spec.hidden = 5;
  spec.classes = 3;
  const SyntheticData data = MakeSynthetic(spec, Seed{1}, 20, 4);
  const ParamSet p = mlp.Initialize(Seed{2});
  const ParamSet copy = p;
  const double first = mlp.Loss(p, data.batch);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(mlp.Loss(p, data.batch), first);
  EXPECT_TRUE(p == copy);
}

TEST(TinyMlpTest, NonFiniteNamesLayer) {
  const TinyMlpObjective mlp(2, 3, 2);
  ParamSet p = mlp.Initialize(Seed{0});
  p.tensor("W2")(0, 0) = std::numeric_limits<double>::infinity();
  Batch b{Matrix::FromRows({{1, 1}}), {0}};
  try {
    mlp.Loss(p, b);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("W2"), std::string::npos) << e.what();
  }
}

TEST(TinyMlpTest, MatricesAreSubspaceBiasesDense) {
  const ParamSet p = TinyMlpObjective(32, 64, 32).Initialize(Seed{0});
  EXPECT_EQ(p.kind(*p.IndexOf("W1")), ParamKind::kMatrixSubspace);
  EXPECT_EQ(p.kind(*p.IndexOf("W2")), ParamKind::kMatrixSubspace);
  EXPECT_EQ(p.kind(*p.IndexOf("b1")), ParamKind::kDense);
  EXPECT_EQ(p.kind(*p.IndexOf("b2")), ParamKind::kDense);
}

TEST(SyntheticTest, DeterministicAndDegenerateSize) {
  SyntheticSpec spec;
  const SyntheticData a = MakeSynthetic(spec, Seed{5}, 10, 3);
  const SyntheticData b = MakeSynthetic(spec, Seed{5}, 10, 3);
  EXPECT_EQ(a.batch.inputs, b.batch.inputs);
  EXPECT_EQ(a.batch.targets, b.batch.targets);
  const SyntheticData one = MakeSynthetic(spec, Seed{5}, 1, 3);
  EXPECT_EQ(one.batch.size(), 1u);
  const LinearModelObjective m(LinearLoss::kLogistic, LinearLayout::Vector(3));
  EXPECT_TRUE(std::isfinite(m.Loss(m.Initialize(Seed{0}), one.batch)));
}

TEST(SyntheticTest, SeparableLogisticTrainsToHighAccuracy) {
  SyntheticSpec spec;
  spec.kind = TaskKind::kLogistic;
  const SyntheticData data = MakeSynthetic(spec, Seed{11}, 1024, 16);
  const LinearModelObjective m(LinearLoss::kLogistic, LinearLayout::Vector(16));
  ParamSet w = m.Initialize(Seed{0});
  for (int step = 0; step < 3000; ++step) {
    const ParamSet g = m.Gradient(w, data.batch);
    for (std::size_t i = 0; i < w.size(); ++i) Axpy(-2.0, g.tensor(i), w.tensor(i));
  }
  const std::vector<double> z = m.Logits(w, data.batch);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    correct += ((z[i] > 0) == (data.batch.targets[i] > 0.5)) ? 1 : 0;
  }
  EXPECT_GE(static_cast<double>(correct) / static_cast<double>(z.size()), 0.99);
}

class CsvTest : public ::testing::Test {
 protected:
  std::filesystem::path Write(const std::string& name, const std::string& text) {
    const auto dir = std::filesystem::temp_directory_path() / "pgap_csv_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / name;
    std::ofstream(path) << text;
    return path;
  }
};

TEST_F(CsvTest, ReadsRowsInOrder) {
  const auto path = Write("ok.csv", "a,label,b\n1,0,2.5\n-3,1,4\n0.5,1,-1e-3\n");
  const Batch b = LoadCsv(path, {"label", {}});
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b.inputs, Matrix::FromRows({{1, 2.5}, {-3, 4}, {0.5, -1e-3}}));
  EXPECT_EQ(b.targets, (std::vector<double>{0, 1, 1}));
  const Batch only_b = LoadCsv(path, {"label", {"b"}});
  EXPECT_EQ(only_b.inputs, Matrix::FromRows({{2.5}, {4}, {-1e-3}}));
}

TEST_F(CsvTest, Errors) {
  EXPECT_THROW(LoadCsv("/nonexistent/file.csv", {"label", {}}), IoError);
  auto message = [&](const std::string& text, const CsvSchema& schema) {
    try {
      LoadCsv(Write("bad.csv", text), schema);
    } catch (const ParseError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("a,label\n", {"label", {}}).find("no rows"), std::string::npos);
  EXPECT_NE(message("a,b\n1,2\n", {"label", {}}).find("label"), std::string::npos);
  const std::string bad_cell = message("a,label\n1,0\n2,x\n", {"label", {}});
  EXPECT_NE(bad_cell.find("row 3"), std::string::npos) << bad_cell;
  EXPECT_NE(bad_cell.find("column 2"), std::string::npos) << bad_cell;
}

TEST(LoraTest, InitialLossUnchangedAndCounts) {
  auto base = std::make_shared<TinyMlpObjective>(6, 8, 5);
  SyntheticSpec spec;
  spec.kind = TaskKind::kTinyMlp;
  spec.hidden = 8;
  spec.classes = 5;
  const SyntheticData data = MakeSynthetic(spec, Seed{1}, 25, 6);
  const ParamSet w0 = base->Initialize(Seed{3});
  const auto lora = LoraWrap(base, w0, 2, Seed{4});
  const ParamSet adapters = lora->Initialize(Seed{0});
  EXPECT_EQ(lora->Loss(adapters, data.batch), base->Loss(w0, data.batch));
  EXPECT_EQ(adapters.ParameterCount(), 2u * (8 + 6) + 2u * (5 + 8));
  for (std::size_t i = 0; i < adapters.size(); ++i) {
    EXPECT_EQ(adapters.kind(i), ParamKind::kMatrixSubspace);
  }
  EXPECT_THROW(LoraWrap(base, w0, 6, Seed{4}), DimensionError);
  EXPECT_THROW(LoraWrap(base, w0, 0, Seed{4}), DimensionError);
}

TEST(LoraTest, GradientWrtBIsBaseGradientTimesATransposed) {
  auto base = std::make_shared<TinyMlpObjective>(6, 8, 5);
  SyntheticSpec spec;
  spec.kind = TaskKind::kTinyMlp;
  spec.hidden = 8;
  spec.classes = 5;
  const SyntheticData data = MakeSynthetic(spec, Seed{1}, 25, 6);
  const ParamSet w0 = base->Initialize(Seed{3});
  const auto lora = LoraWrap(base, w0, 3, Seed{4});
  const ParamSet adapters = lora->Initialize(Seed{0});
  const ParamSet numeric = CentralDifference(*lora, adapters, data.batch);
  const ParamSet base_grad = base->Gradient(w0, data.batch);
  for (const char* w : {"W1", "W2"}) {
    const Matrix want = MatMulTransB(base_grad.tensor(w), adapters.tensor(std::string(w) + ".lora_A"));
    const Matrix& got = numeric.tensor(std::string(w) + ".lora_B");
    EXPECT_LT(MaxAbsDiff(got, want), 1e-7) << w;
  }
  ExpectGradientMatches(*lora, Perturbed(adapters, 5, 0.2), data.batch);
}

TEST(BatchSamplerTest, EpochPermutations) {
  BatchSampler s(10, 3, Seed{1});
  std::vector<int> seen(10, 0);
  for (int i = 0; i < 3; ++i) {
    for (auto r : s.Next()) ++seen[r];
  }
  int total = 0;
  for (int c : seen) {
    EXPECT_LE(c, 1);
    total += c;
  }
  EXPECT_EQ(total, 9);
  BatchSampler a(10, 4, Seed{2}), b(10, 4, Seed{2});
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.Next(), b.Next());
}

TEST(CountingOracleTest, CountsLossCalls) {
  CountingOracle c(std::make_shared<QuadraticObjective>(Matrix::Identity(2)));
  c.Loss(Vector({1, 2}), {});
  c.Loss(Vector({1, 2}), {});
  EXPECT_EQ(c.evaluations(), 2u);
  c.Reset();
  EXPECT_EQ(c.evaluations(), 0u);
}

}  // namespace
}  // namespace pgap
