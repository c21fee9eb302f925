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

// Loss oracles and desk-scale training tasks.
//
// An oracle maps (parameters, batch) to a scalar loss. Evaluation is pure:
// it never mutates parameters and repeated calls are bit-identical. Every
// oracle also provides its exact gradient, which the optimizers never use;
// it exists so tests and the lab can compare estimates against truth.

#ifndef PGAP_OBJECTIVES_H_
#define PGAP_OBJECTIVES_H_

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pgap/matrix.h"
#include "pgap/params.h"
#include "pgap/random.h"

namespace pgap {

// Mini-batch: one example per row of `inputs`, one target per example.
struct Batch {
  Matrix inputs;
  std::vector<double> targets;

  std::size_t size() const { return targets.size(); }
};

// Throws DimensionError if rows and targets disagree.
void ValidateBatch(const Batch& batch);
Batch SelectRows(const Batch& batch, std::span<const std::size_t> rows);

class LossOracle {
 public:
  virtual ~LossOracle() = default;

  virtual std::string Name() const = 0;
  // Default starting point with this oracle's parameter layout.
  virtual ParamSet Initialize(Seed seed) const = 0;
  virtual double Loss(const ParamSet& params, const Batch& batch) const = 0;
  virtual ParamSet Gradient(const ParamSet& params, const Batch& batch) const = 0;
};

// f(x) = vec(X)^T H vec(X), with vec taken in row-major order. The batch is
// ignored. With the default shape X is a d x 1 dense vector named "x".
class QuadraticObjective final : public LossOracle {
 public:
  explicit QuadraticObjective(Matrix h);
  QuadraticObjective(Matrix h, std::size_t rows, std::size_t cols,
                     ParamKind kind);

  std::string Name() const override { return "quadratic"; }
  ParamSet Initialize(Seed seed) const override;
  double Loss(const ParamSet& params, const Batch& batch) const override;
  ParamSet Gradient(const ParamSet& params, const Batch& batch) const override;

  const Matrix& hessian_form() const { return h_; }

 private:
  Matrix h_;
  std::size_t rows_;
  std::size_t cols_;
  ParamKind kind_;
};

// x^T H x for a flat vector; the quadratic identity used by the oracle.
double QuadraticForm(const Matrix& h, std::span<const double> x);

// Rank-structured quadratic over matrices W_l (all kMatrixSubspace):
//
//   f(W) = 1/2 sum_l [ mu ||W_l - W*_l||_F^2
//                      + lambda ||U_l^T (W_l - W*_l) V_l||_F^2 ]
//
// with planted orthonormal frames U_l (m x p), V_l (n x p). The default start
// is W*_l + U_l C_l V_l^T, so the gradient there has rank p exactly and lies
// in the planted frame product space.
struct RankQuadraticSpec {
  std::vector<std::pair<std::size_t, std::size_t>> shapes = {{64, 64}};
  std::size_t planted_rank = 4;
  double lambda = 1.0;
  double mu = 0.0;
  // Frobenius norm of each planted offset U C V^T.
  double offset_norm = 1.0;
};

class RankQuadraticObjective final : public LossOracle {
 public:
  RankQuadraticObjective(RankQuadraticSpec spec, Seed seed);

  std::string Name() const override { return "quad_lowrank"; }
  ParamSet Initialize(Seed seed) const override;
  double Loss(const ParamSet& params, const Batch& batch) const override;
  ParamSet Gradient(const ParamSet& params, const Batch& batch) const override;

  const RankQuadraticSpec& spec() const { return spec_; }
  const Matrix& frame_u(std::size_t l) const { return blocks_[l].u; }
  const Matrix& frame_v(std::size_t l) const { return blocks_[l].v; }
  const Matrix& optimum(std::size_t l) const { return blocks_[l].optimum; }

 private:
  struct Block {
    Matrix u;
    Matrix v;
    Matrix optimum;
    Matrix offset;
  };
  RankQuadraticSpec spec_;
  std::vector<Block> blocks_;
  ParamSet layout_;
};

// How a linear model's weight vector is laid out as parameter tensors.
// Feature columns are consumed block by block, each block row-major.
struct LinearLayout {
  std::vector<std::pair<std::size_t, std::size_t>> blocks;
  bool bias = true;

  static LinearLayout Vector(std::size_t d, bool bias = true);
  std::size_t FeatureCount() const;
};

enum class LinearLoss { kLeastSquares, kLogistic };

// Least squares: (1/2n) sum (z_i - y_i)^2. Logistic: (1/n) sum
// log(1 + e^{z_i}) - y_i z_i with y_i in {0, 1}. z_i = <w, x_i> + b.
// Blocks with both dimensions >= 2 are kMatrixSubspace, others kDense.
class LinearModelObjective final : public LossOracle {
 public:
  LinearModelObjective(LinearLoss loss, LinearLayout layout);

  std::string Name() const override;
  ParamSet Initialize(Seed seed) const override;
  double Loss(const ParamSet& params, const Batch& batch) const override;
  ParamSet Gradient(const ParamSet& params, const Batch& batch) const override;

  const LinearLayout& layout() const { return layout_; }
  // Logits z_i for every example.
  std::vector<double> Logits(const ParamSet& params, const Batch& batch) const;

 private:
  LinearLoss loss_;
  LinearLayout layout_;
  ParamSet template_;
};

// One hidden tanh layer, softmax cross-entropy over `classes` outputs.
// Parameters: W1 (hidden x in), b1, W2 (classes x hidden), b2. Targets are
// class indices stored as doubles.
class TinyMlpObjective final : public LossOracle {
 public:
  TinyMlpObjective(std::size_t inputs, std::size_t hidden, std::size_t classes);

  std::string Name() const override { return "tiny_mlp"; }
  ParamSet Initialize(Seed seed) const override;
  double Loss(const ParamSet& params, const Batch& batch) const override;
  ParamSet Gradient(const ParamSet& params, const Batch& batch) const override;

  // Fraction of examples whose argmax logit equals the target.
  double Accuracy(const ParamSet& params, const Batch& batch) const;

 private:
  std::size_t inputs_;
  std::size_t hidden_;
  std::size_t classes_;
  ParamSet template_;
};

// Low-rank adapters over a frozen base point: every kMatrixSubspace base
// tensor W (m x n) becomes W0 + B A with B (m x r', zero-initialised) and
// A (r' x n, entries N(0, 1/n)). Only the adapters are trainable; they are
// named "<W>.lora_B" / "<W>.lora_A" and marked kMatrixSubspace.
class LoraObjective final : public LossOracle {
 public:
  // Throws DimensionError if r' is zero or exceeds min(m, n) of any wrapped
  // matrix, or if `base_params` holds no kMatrixSubspace tensor.
  LoraObjective(std::shared_ptr<const LossOracle> base, ParamSet base_params,
                std::size_t rank, Seed seed);

  std::string Name() const override;
  ParamSet Initialize(Seed seed) const override;
  double Loss(const ParamSet& params, const Batch& batch) const override;
  ParamSet Gradient(const ParamSet& params, const Batch& batch) const override;

  // Frozen base with the adapter products folded in.
  ParamSet EffectiveParams(const ParamSet& adapters) const;
  const ParamSet& base_params() const { return base_params_; }

 private:
  std::shared_ptr<const LossOracle> base_;
  ParamSet base_params_;
  std::size_t rank_;
  ParamSet initial_adapters_;
  // base index of the tensor each adapter pair wraps.
  std::vector<std::size_t> wrapped_;
};

std::shared_ptr<LoraObjective> LoraWrap(std::shared_ptr<const LossOracle> base,
                                        ParamSet base_params, std::size_t rank,
                                        Seed seed);

// Forwards to a base oracle and counts Loss() calls.
class CountingOracle final : public LossOracle {
 public:
  explicit CountingOracle(std::shared_ptr<const LossOracle> base)
      : base_(std::move(base)) {}

  std::string Name() const override { return base_->Name(); }
  ParamSet Initialize(Seed seed) const override { return base_->Initialize(seed); }
  double Loss(const ParamSet& params, const Batch& batch) const override;
  ParamSet Gradient(const ParamSet& params, const Batch& batch) const override {
    return base_->Gradient(params, batch);
  }

  std::size_t evaluations() const { return count_.load(); }
  void Reset() { count_ = 0; }

 private:
  std::shared_ptr<const LossOracle> base_;
  mutable std::atomic<std::size_t> count_{0};
};

// Central finite-difference gradient; the test oracle for Gradient().
ParamSet FiniteDifferenceGradient(const LossOracle& oracle,
                                  const ParamSet& params, const Batch& batch,
                                  double step = 1e-5);

// --- Data synthesis -------------------------------------------------------

enum class TaskKind { kQuadratic, kRankQuadratic, kLeastSquares, kLogistic, kTinyMlp };

struct SyntheticSpec {
  TaskKind kind = TaskKind::kLogistic;
  // Label-flip probability (logistic, MLP) or Gaussian target noise std
  // (least squares).
  double label_noise = 0.0;
  // Layout of the planted linear weights; empty blocks means a d x 1 vector.
  LinearLayout layout;
  // If non-zero, each planted weight block has this rank.
  std::size_t planted_rank = 0;
  // Frobenius norm of the planted linear weights.
  double weight_scale = 3.0;
  std::size_t hidden = 64;
  std::size_t classes = 32;
};

struct SyntheticData {
  Batch batch;
  // Planted weights (linear tasks, MLP teacher); empty for quadratics.
  ParamSet truth;
};

// Deterministic in (spec, seed, n, d). Features are i.i.d. N(0, 1).
SyntheticData MakeSynthetic(const SyntheticSpec& spec, Seed seed, std::size_t n,
                            std::size_t d);

// CSV ingestion: header row required, comma separated, '.' decimals.
struct CsvSchema {
  std::string label_column;
  // Empty means every column except the label, in file order.
  std::vector<std::string> feature_columns;
};

// Throws IoError when the file cannot be read and ParseError (with 1-based
// row and column numbers) on malformed content.
Batch LoadCsv(const std::filesystem::path& path, const CsvSchema& schema);

// Sequential mini-batches over a shuffled permutation, reshuffled each epoch
// from DeriveSubstream(seed, "epoch", e).
class BatchSampler {
 public:
  BatchSampler(std::size_t examples, std::size_t batch_size, Seed seed);

  std::vector<std::size_t> Next();
  std::size_t epoch() const { return epoch_; }
  std::size_t batch_size() const { return batch_size_; }

 private:
  void Reshuffle();

  std::size_t examples_;
  std::size_t batch_size_;
  Seed seed_;
  std::size_t epoch_ = 0;
  std::size_t cursor_ = 0;
  std::vector<std::size_t> order_;
};

}  // namespace pgap

#endif  // PGAP_OBJECTIVES_H_
