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

#include "pgap/objectives.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>

#include "pgap/errors.h"
#include "pgap/svd.h"

namespace pgap {
namespace {

void RequireFeatures(const Batch& batch, std::size_t expected,
                     std::string_view who) {
  ValidateBatch(batch);
  if (batch.size() == 0) {
    throw DimensionError(std::string(who) + ": empty batch");
  }
  if (batch.inputs.cols() != expected) {
    throw DimensionError(std::string(who) + ": batch has " +
                         std::to_string(batch.inputs.cols()) +
                         " features, model expects " + std::to_string(expected));
  }
}

void RequireFinite(double value, std::string_view who, std::string_view layer) {
  if (!std::isfinite(value)) {
    throw NumericError(std::string(who) + ": non-finite value in layer '" +
                       std::string(layer) + "'");
  }
}

// log(1 + e^z) without overflow.
double Softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

ParamKind BlockKind(std::size_t rows, std::size_t cols) {
  return rows >= 2 && cols >= 2 ? ParamKind::kMatrixSubspace : ParamKind::kDense;
}

// Scales m in place to Frobenius norm `target` (no-op for a zero matrix).
void ScaleTo(Matrix& m, double target) {
  const double n = FrobNorm(m);
  if (n > 0.0) m *= target / n;
}

std::string Trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(Trim(std::string_view(line).substr(start)));
      return out;
    }
    out.push_back(Trim(std::string_view(line).substr(start, comma - start)));
    start = comma + 1;
  }
}

}  // namespace

void ValidateBatch(const Batch& batch) {
  if (batch.inputs.rows() != batch.targets.size()) {
    throw DimensionError("Batch: " + std::to_string(batch.inputs.rows()) +
                         " input rows but " +
                         std::to_string(batch.targets.size()) + " targets");
  }
}

Batch SelectRows(const Batch& batch, std::span<const std::size_t> rows) {
  ValidateBatch(batch);
  Batch out{Matrix(rows.size(), batch.inputs.cols()), {}};
  out.targets.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= batch.size()) {
      throw DimensionError("SelectRows: row " + std::to_string(rows[i]) +
                           " out of range");
    }
    for (std::size_t j = 0; j < batch.inputs.cols(); ++j) {
      out.inputs(i, j) = batch.inputs(rows[i], j);
    }
    out.targets.push_back(batch.targets[rows[i]]);
  }
  return out;
}

// --- Quadratic -------------------------------------------------------------

double QuadraticForm(const Matrix& h, std::span<const double> x) {
  if (h.rows() != x.size() || h.cols() != x.size()) {
    throw DimensionError("QuadraticForm: H " + h.ShapeString() +
                         " vs vector of length " + std::to_string(x.size()));
  }
  KahanSum sum;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) continue;
    for (std::size_t j = 0; j < x.size(); ++j) sum.Add(x[i] * h(i, j) * x[j]);
  }
  return sum.value();
}

QuadraticObjective::QuadraticObjective(Matrix h)
    : QuadraticObjective(h, h.rows(), 1, ParamKind::kDense) {}

QuadraticObjective::QuadraticObjective(Matrix h, std::size_t rows,
                                       std::size_t cols, ParamKind kind)
    : h_(std::move(h)), rows_(rows), cols_(cols), kind_(kind) {
  if (h_.rows() != h_.cols() || h_.rows() != rows_ * cols_ || h_.empty()) {
    throw DimensionError("QuadraticObjective: H " + h_.ShapeString() +
                         " does not match parameter shape " +
                         std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

ParamSet QuadraticObjective::Initialize(Seed seed) const {
  GaussStream rng(DeriveSubstream(seed, "quadratic_init", 0));
  ParamSet p;
  p.Add("x", rng.GaussMatrix(rows_, cols_), kind_);
  return p;
}

double QuadraticObjective::Loss(const ParamSet& params, const Batch&) const {
  if (params.size() != 1 || params.tensor(0).rows() != rows_ ||
      params.tensor(0).cols() != cols_) {
    throw DimensionError("quadratic: expected a single " + std::to_string(rows_) +
                         "x" + std::to_string(cols_) + " parameter");
  }
  const double f = QuadraticForm(h_, params.tensor(0).data());
  RequireFinite(f, "quadratic", params.name(0));
  return f;
}

ParamSet QuadraticObjective::Gradient(const ParamSet& params,
                                      const Batch& batch) const {
  Loss(params, batch);
  const auto x = params.tensor(0).data();
  ParamSet g = params.ZerosLike();
  auto out = g.tensor(0).data();
  const std::size_t d = x.size();
  for (std::size_t i = 0; i < d; ++i) {
    KahanSum s;
    for (std::size_t j = 0; j < d; ++j) s.Add((h_(i, j) + h_(j, i)) * x[j]);
    out[i] = s.value();
  }
  return g;
}

// --- Rank-structured quadratic ---------------------------------------------

RankQuadraticObjective::RankQuadraticObjective(RankQuadraticSpec spec, Seed seed)
    : spec_(std::move(spec)) {
  if (spec_.shapes.empty()) {
    throw ConfigError("RankQuadraticObjective: no matrix shapes");
  }
  if (spec_.lambda < 0 || spec_.mu < 0 || spec_.lambda + spec_.mu <= 0) {
    throw ConfigError("RankQuadraticObjective: need lambda, mu >= 0, not both 0");
  }
  for (std::size_t l = 0; l < spec_.shapes.size(); ++l) {
    const auto [m, n] = spec_.shapes[l];
    const std::size_t p = spec_.planted_rank;
    if (p == 0 || p > std::min(m, n)) {
      throw DimensionError("RankQuadraticObjective: planted rank " +
                           std::to_string(p) + " invalid for " +
                           std::to_string(m) + "x" + std::to_string(n));
    }
    GaussStream rng(DeriveSubstream(seed, "quad_lowrank", l));
    Block b;
    b.u = RandomOrthonormal(rng, m, p);
    b.v = RandomOrthonormal(rng, n, p);
    b.optimum = rng.GaussMatrix(m, n) * (1.0 / std::sqrt(static_cast<double>(n)));
    b.offset = MatMulTransB(MatMul(b.u, rng.GaussMatrix(p, p)), b.v);
    ScaleTo(b.offset, spec_.offset_norm);
    layout_.Add("W" + std::to_string(l), Matrix(m, n), ParamKind::kMatrixSubspace);
    blocks_.push_back(std::move(b));
  }
}

ParamSet RankQuadraticObjective::Initialize(Seed) const {
  ParamSet p = layout_.ZerosLike();
  for (std::size_t l = 0; l < blocks_.size(); ++l) {
    p.tensor(l) = blocks_[l].optimum + blocks_[l].offset;
  }
  return p;
}

double RankQuadraticObjective::Loss(const ParamSet& params, const Batch&) const {
  RequireLayout(layout_, params, "quad_lowrank");
  KahanSum total;
  for (std::size_t l = 0; l < blocks_.size(); ++l) {
    const Block& b = blocks_[l];
    const Matrix diff = params.tensor(l) - b.optimum;
    if (spec_.mu != 0.0) total.Add(0.5 * spec_.mu * FrobInner(diff, diff));
    if (spec_.lambda != 0.0) {
      const Matrix core = MatMul(MatMulTransA(b.u, diff), b.v);
      total.Add(0.5 * spec_.lambda * FrobInner(core, core));
    }
    RequireFinite(total.value(), "quad_lowrank", params.name(l));
  }
  return total.value();
}

ParamSet RankQuadraticObjective::Gradient(const ParamSet& params,
                                          const Batch& batch) const {
  Loss(params, batch);
  ParamSet g = params.ZerosLike();
  for (std::size_t l = 0; l < blocks_.size(); ++l) {
    const Block& b = blocks_[l];
    const Matrix diff = params.tensor(l) - b.optimum;
    Matrix out = diff * spec_.mu;
    if (spec_.lambda != 0.0) {
      const Matrix core = MatMul(MatMulTransA(b.u, diff), b.v);
      Axpy(spec_.lambda, MatMulTransB(MatMul(b.u, core), b.v), out);
    }
    g.tensor(l) = std::move(out);
  }
  return g;
}

// --- Linear models ---------------------------------------------------------

LinearLayout LinearLayout::Vector(std::size_t d, bool bias) {
  LinearLayout layout;
  layout.blocks.push_back({d, 1});
  layout.bias = bias;
  return layout;
}

std::size_t LinearLayout::FeatureCount() const {
  std::size_t n = 0;
  for (const auto& [r, c] : blocks) n += r * c;
  return n;
}

LinearModelObjective::LinearModelObjective(LinearLoss loss, LinearLayout layout)
    : loss_(loss), layout_(std::move(layout)) {
  if (layout_.blocks.empty() || layout_.FeatureCount() == 0) {
    throw ConfigError("LinearModelObjective: empty layout");
  }
  for (std::size_t b = 0; b < layout_.blocks.size(); ++b) {
    const auto [r, c] = layout_.blocks[b];
    template_.Add("w" + std::to_string(b), Matrix(r, c), BlockKind(r, c));
  }
  if (layout_.bias) template_.Add("bias", Matrix(1, 1), ParamKind::kDense);
}

std::string LinearModelObjective::Name() const {
  return loss_ == LinearLoss::kLogistic ? "logistic" : "least_squares";
}

ParamSet LinearModelObjective::Initialize(Seed) const {
  return template_.ZerosLike();
}

std::vector<double> LinearModelObjective::Logits(const ParamSet& params,
                                                 const Batch& batch) const {
  RequireLayout(template_, params, Name());
  RequireFeatures(batch, layout_.FeatureCount(), Name());
  const double b = layout_.bias ? params.tensor(params.size() - 1)(0, 0) : 0.0;
  std::vector<double> z(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double* x = batch.inputs.data().data() + i * batch.inputs.cols();
    double s = b;
    for (std::size_t blk = 0; blk < layout_.blocks.size(); ++blk) {
      for (double w : params.tensor(blk).data()) s += w * *x++;
    }
    z[i] = s;
  }
  return z;
}

double LinearModelObjective::Loss(const ParamSet& params,
                                  const Batch& batch) const {
  const std::vector<double> z = Logits(params, batch);
  KahanSum total;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double y = batch.targets[i];
    if (loss_ == LinearLoss::kLogistic) {
      total.Add(Softplus(z[i]) - y * z[i]);
    } else {
      const double r = z[i] - y;
      total.Add(0.5 * r * r);
    }
  }
  const double f = total.value() / static_cast<double>(z.size());
  RequireFinite(f, Name(), "w");
  return f;
}

ParamSet LinearModelObjective::Gradient(const ParamSet& params,
                                        const Batch& batch) const {
  const std::vector<double> z = Logits(params, batch);
  const double inv_n = 1.0 / static_cast<double>(z.size());
  std::vector<double> resid(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double p = loss_ == LinearLoss::kLogistic ? Sigmoid(z[i]) : z[i];
    resid[i] = (p - batch.targets[i]) * inv_n;
  }
  ParamSet g = params.ZerosLike();
  std::size_t f0 = 0;
  for (std::size_t blk = 0; blk < layout_.blocks.size(); ++blk) {
    auto out = g.tensor(blk).data();
    for (std::size_t k = 0; k < out.size(); ++k) {
      KahanSum s;
      for (std::size_t i = 0; i < z.size(); ++i) {
        s.Add(resid[i] * batch.inputs(i, f0 + k));
      }
      out[k] = s.value();
    }
    f0 += out.size();
  }
  if (layout_.bias) {
    KahanSum s;
    for (double r : resid) s.Add(r);
    g.tensor(g.size() - 1)(0, 0) = s.value();
  }
  return g;
}

// --- Tiny MLP --------------------------------------------------------------

TinyMlpObjective::TinyMlpObjective(std::size_t inputs, std::size_t hidden,
                                   std::size_t classes)
    : inputs_(inputs), hidden_(hidden), classes_(classes) {
  if (inputs == 0 || hidden == 0 || classes < 2) {
    throw ConfigError("TinyMlpObjective: need inputs, hidden >= 1, classes >= 2");
  }
  template_.Add("W1", Matrix(hidden, inputs), BlockKind(hidden, inputs));
  template_.Add("b1", Matrix(hidden, 1), ParamKind::kDense);
  template_.Add("W2", Matrix(classes, hidden), BlockKind(classes, hidden));
  template_.Add("b2", Matrix(classes, 1), ParamKind::kDense);
}

ParamSet TinyMlpObjective::Initialize(Seed seed) const {
  GaussStream rng(DeriveSubstream(seed, "mlp_init", 0));
  ParamSet p = template_.ZerosLike();
  p.tensor(0) = rng.GaussMatrix(hidden_, inputs_) *
                (1.0 / std::sqrt(static_cast<double>(inputs_)));
  p.tensor(2) = rng.GaussMatrix(classes_, hidden_) *
                (1.0 / std::sqrt(static_cast<double>(hidden_)));
  return p;
}

namespace {

struct MlpForward {
  Matrix hidden;  // examples x hidden, post-tanh
  Matrix logits;  // examples x classes
};

MlpForward Forward(const ParamSet& p, const Batch& batch) {
  MlpForward out;
  out.hidden = MatMulTransB(batch.inputs, p.tensor(0));
  for (std::size_t i = 0; i < out.hidden.rows(); ++i) {
    for (std::size_t j = 0; j < out.hidden.cols(); ++j) {
      out.hidden(i, j) = std::tanh(out.hidden(i, j) + p.tensor(1)(j, 0));
    }
  }
  if (!AllFinite(out.hidden)) RequireFinite(NAN, "tiny_mlp", "W1");
  out.logits = MatMulTransB(out.hidden, p.tensor(2));
  for (std::size_t i = 0; i < out.logits.rows(); ++i) {
    for (std::size_t j = 0; j < out.logits.cols(); ++j) {
      out.logits(i, j) += p.tensor(3)(j, 0);
    }
  }
  if (!AllFinite(out.logits)) RequireFinite(NAN, "tiny_mlp", "W2");
  return out;
}

std::size_t ClassOf(double target, std::size_t classes) {
  const double c = std::round(target);
  if (!(c >= 0) || c >= static_cast<double>(classes) || c != target) {
    throw DimensionError("tiny_mlp: target " + std::to_string(target) +
                         " is not a class index below " + std::to_string(classes));
  }
  return static_cast<std::size_t>(c);
}

}  // namespace

double TinyMlpObjective::Loss(const ParamSet& params, const Batch& batch) const {
  RequireLayout(template_, params, "tiny_mlp");
  RequireFeatures(batch, inputs_, "tiny_mlp");
  const MlpForward fw = Forward(params, batch);
  KahanSum total;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::size_t y = ClassOf(batch.targets[i], classes_);
    double mx = fw.logits(i, 0);
    for (std::size_t c = 1; c < classes_; ++c) mx = std::max(mx, fw.logits(i, c));
    double z = 0.0;
    for (std::size_t c = 0; c < classes_; ++c) z += std::exp(fw.logits(i, c) - mx);
    total.Add(mx + std::log(z) - fw.logits(i, y));
  }
  const double f = total.value() / static_cast<double>(batch.size());
  RequireFinite(f, "tiny_mlp", "W2");
  return f;
}

ParamSet TinyMlpObjective::Gradient(const ParamSet& params,
                                    const Batch& batch) const {
  RequireLayout(template_, params, "tiny_mlp");
  RequireFeatures(batch, inputs_, "tiny_mlp");
  const MlpForward fw = Forward(params, batch);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  // dlogits = (softmax - onehot) / n
  Matrix dlogits(batch.size(), classes_);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::size_t y = ClassOf(batch.targets[i], classes_);
    double mx = fw.logits(i, 0);
    for (std::size_t c = 1; c < classes_; ++c) mx = std::max(mx, fw.logits(i, c));
    double z = 0.0;
    for (std::size_t c = 0; c < classes_; ++c) z += std::exp(fw.logits(i, c) - mx);
    for (std::size_t c = 0; c < classes_; ++c) {
      dlogits(i, c) = (std::exp(fw.logits(i, c) - mx) / z - (c == y ? 1.0 : 0.0)) *
                      inv_n;
    }
  }
  ParamSet g = params.ZerosLike();
  g.tensor(2) = MatMulTransA(dlogits, fw.hidden);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (std::size_t c = 0; c < classes_; ++c) g.tensor(3)(c, 0) += dlogits(i, c);
  }
  Matrix dpre = MatMul(dlogits, params.tensor(2));
  for (std::size_t i = 0; i < dpre.rows(); ++i) {
    for (std::size_t j = 0; j < dpre.cols(); ++j) {
      const double h = fw.hidden(i, j);
      dpre(i, j) *= 1.0 - h * h;
      g.tensor(1)(j, 0) += dpre(i, j);
    }
  }
  g.tensor(0) = MatMulTransA(dpre, batch.inputs);
  return g;
}

double TinyMlpObjective::Accuracy(const ParamSet& params,
                                  const Batch& batch) const {
  RequireLayout(template_, params, "tiny_mlp");
  RequireFeatures(batch, inputs_, "tiny_mlp");
  const MlpForward fw = Forward(params, batch);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < classes_; ++c) {
      if (fw.logits(i, c) > fw.logits(i, best)) best = c;
    }
    if (best == ClassOf(batch.targets[i], classes_)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(batch.size());
}

// --- LoRA ------------------------------------------------------------------

LoraObjective::LoraObjective(std::shared_ptr<const LossOracle> base,
                             ParamSet base_params, std::size_t rank, Seed seed)
    : base_(std::move(base)), base_params_(std::move(base_params)), rank_(rank) {
  if (!base_) throw ConfigError("LoraObjective: null base oracle");
  GaussStream rng(DeriveSubstream(seed, "lora_init", 0));
  for (std::size_t i = 0; i < base_params_.size(); ++i) {
    if (base_params_.kind(i) != ParamKind::kMatrixSubspace) continue;
    const Matrix& w = base_params_.tensor(i);
    if (rank_ == 0 || rank_ > std::min(w.rows(), w.cols())) {
      throw DimensionError("lora: rank " + std::to_string(rank_) +
                           " invalid for '" + base_params_.name(i) + "' " +
                           w.ShapeString());
    }
    wrapped_.push_back(i);
    initial_adapters_.Add(base_params_.name(i) + ".lora_B",
                          Matrix(w.rows(), rank_), ParamKind::kMatrixSubspace);
    initial_adapters_.Add(
        base_params_.name(i) + ".lora_A",
        rng.GaussMatrix(rank_, w.cols()) *
            (1.0 / std::sqrt(static_cast<double>(w.cols()))),
        ParamKind::kMatrixSubspace);
  }
  if (wrapped_.empty()) {
    throw DimensionError("lora: base parameters contain no matrix to wrap");
  }
}

std::string LoraObjective::Name() const { return "lora(" + base_->Name() + ")"; }

ParamSet LoraObjective::Initialize(Seed) const { return initial_adapters_; }

ParamSet LoraObjective::EffectiveParams(const ParamSet& adapters) const {
  RequireLayout(initial_adapters_, adapters, Name());
  ParamSet eff = base_params_;
  for (std::size_t k = 0; k < wrapped_.size(); ++k) {
    eff.tensor(wrapped_[k]) +=
        MatMul(adapters.tensor(2 * k), adapters.tensor(2 * k + 1));
  }
  return eff;
}

double LoraObjective::Loss(const ParamSet& params, const Batch& batch) const {
  return base_->Loss(EffectiveParams(params), batch);
}

ParamSet LoraObjective::Gradient(const ParamSet& params,
                                 const Batch& batch) const {
  const ParamSet gw = base_->Gradient(EffectiveParams(params), batch);
  ParamSet g = params.ZerosLike();
  for (std::size_t k = 0; k < wrapped_.size(); ++k) {
    const Matrix& gk = gw.tensor(wrapped_[k]);
    g.tensor(2 * k) = MatMulTransB(gk, params.tensor(2 * k + 1));
    g.tensor(2 * k + 1) = MatMulTransA(params.tensor(2 * k), gk);
  }
  return g;
}

std::shared_ptr<LoraObjective> LoraWrap(std::shared_ptr<const LossOracle> base,
                                        ParamSet base_params, std::size_t rank,
                                        Seed seed) {
  return std::make_shared<LoraObjective>(std::move(base), std::move(base_params),
                                         rank, seed);
}

double CountingOracle::Loss(const ParamSet& params, const Batch& batch) const {
  ++count_;
  return base_->Loss(params, batch);
}

ParamSet FiniteDifferenceGradient(const LossOracle& oracle,
                                  const ParamSet& params, const Batch& batch,
                                  double step) {
  ParamSet work = params;
  ParamSet g = params.ZerosLike();
  for (std::size_t t = 0; t < work.size(); ++t) {
    auto x = work.tensor(t).data();
    auto out = g.tensor(t).data();
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double saved = x[k];
      x[k] = saved + step;
      const double fp = oracle.Loss(work, batch);
      x[k] = saved - step;
      const double fm = oracle.Loss(work, batch);
      x[k] = saved;
      out[k] = (fp - fm) / (2.0 * step);
    }
  }
  return g;
}

// --- Data ------------------------------------------------------------------

SyntheticData MakeSynthetic(const SyntheticSpec& spec, Seed seed, std::size_t n,
                            std::size_t d) {
  if (n == 0 || d == 0) throw ConfigError("MakeSynthetic: n and d must be >= 1");
  SyntheticData out;
  GaussStream features(DeriveSubstream(seed, "features", 0));
  out.batch.inputs = features.GaussMatrix(n, d);
  out.batch.targets.assign(n, 0.0);
  GaussStream truth_rng(DeriveSubstream(seed, "truth", 0));
  GaussStream noise(DeriveSubstream(seed, "label_noise", 0));

  switch (spec.kind) {
    case TaskKind::kQuadratic:
    case TaskKind::kRankQuadratic:
      return out;
    case TaskKind::kLeastSquares:
    case TaskKind::kLogistic: {
      LinearLayout layout =
          spec.layout.blocks.empty() ? LinearLayout::Vector(d) : spec.layout;
      if (layout.FeatureCount() != d) {
        throw DimensionError("MakeSynthetic: layout holds " +
                             std::to_string(layout.FeatureCount()) +
                             " weights but d = " + std::to_string(d));
      }
      const LinearLoss loss = spec.kind == TaskKind::kLogistic
                                  ? LinearLoss::kLogistic
                                  : LinearLoss::kLeastSquares;
      LinearModelObjective model(loss, layout);
      ParamSet w = model.Initialize(seed);
      double total_sq = 0.0;
      for (std::size_t b = 0; b < layout.blocks.size(); ++b) {
        const auto [r, c] = layout.blocks[b];
        const std::size_t p = spec.planted_rank;
        Matrix block;
        if (p > 0 && p < std::min(r, c)) {
          block = MatMul(truth_rng.GaussMatrix(r, p), truth_rng.GaussMatrix(p, c));
        } else {
          block = truth_rng.GaussMatrix(r, c);
        }
        total_sq += FrobInner(block, block);
        w.tensor(b) = std::move(block);
      }
      const double scale = total_sq > 0 ? spec.weight_scale / std::sqrt(total_sq) : 0;
      for (std::size_t b = 0; b < layout.blocks.size(); ++b) w.tensor(b) *= scale;
      const std::vector<double> z = model.Logits(w, out.batch);
      for (std::size_t i = 0; i < n; ++i) {
        if (spec.kind == TaskKind::kLogistic) {
          double y = z[i] > 0 ? 1.0 : 0.0;
          if (noise.NextUniform() < spec.label_noise) y = 1.0 - y;
          out.batch.targets[i] = y;
        } else {
          out.batch.targets[i] = z[i] + spec.label_noise * noise.NextGaussian();
        }
      }
      out.truth = std::move(w);
      return out;
    }
    case TaskKind::kTinyMlp: {
      TinyMlpObjective teacher(d, spec.hidden, spec.classes);
      ParamSet w = teacher.Initialize(DeriveSubstream(seed, "teacher", 0));
      // A sharper teacher gives less ambiguous argmax labels.
      w.tensor(0) *= 2.0;
      w.tensor(2) *= 4.0;
      const Batch probe{out.batch.inputs, std::vector<double>(n, 0.0)};
      const MlpForward fw = Forward(w, probe);
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < spec.classes; ++c) {
          if (fw.logits(i, c) > fw.logits(i, best)) best = c;
        }
        if (noise.NextUniform() < spec.label_noise) {
          const auto shift = 1 + noise.NextU64() % (spec.classes - 1);
          best = (best + shift) % spec.classes;
        }
        out.batch.targets[i] = static_cast<double>(best);
      }
      out.truth = std::move(w);
      return out;
    }
  }
  return out;
}

Batch LoadCsv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open CSV file '" + path.string() + "'");
  const std::string where = path.string();
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError(where + ": missing header row");
  }
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const std::vector<std::string> header = SplitCsvLine(line);
  auto find = [&](const std::string& col) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), col);
    if (it == header.end()) {
      throw ParseError(where + ": missing column '" + col + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t label = find(schema.label_column);
  std::vector<std::size_t> feats;
  if (schema.feature_columns.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (j != label) feats.push_back(j);
    }
  } else {
    for (const auto& c : schema.feature_columns) feats.push_back(find(c));
  }

  std::vector<double> values;
  std::vector<double> targets;
  std::size_t row = 1;
  auto parse = [&](const std::string& cell, std::size_t col) {
    double v = 0.0;
    const char* end = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(cell.data(), end, v);
    if (cell.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
      throw ParseError(where + ": row " + std::to_string(row) + ", column " +
                       std::to_string(col + 1) + ": non-numeric cell '" + cell +
                       "'");
    }
    return v;
  };
  while (std::getline(in, line)) {
    ++row;
    if (Trim(line).empty()) continue;
    const std::vector<std::string> cells = SplitCsvLine(line);
    if (cells.size() != header.size()) {
      throw ParseError(where + ": row " + std::to_string(row) + ", column " +
                       std::to_string(std::min(cells.size(), header.size()) + 1) +
                       ": expected " + std::to_string(header.size()) +
                       " fields, found " + std::to_string(cells.size()));
    }
    for (std::size_t j : feats) values.push_back(parse(cells[j], j));
    targets.push_back(parse(cells[label], label));
  }
  if (targets.empty()) throw ParseError(where + ": no rows");
  return Batch{Matrix(targets.size(), feats.size(), std::move(values)),
               std::move(targets)};
}

BatchSampler::BatchSampler(std::size_t examples, std::size_t batch_size,
                           Seed seed)
    : examples_(examples),
      batch_size_(batch_size == 0 ? examples : std::min(batch_size, examples)),
      seed_(seed) {
  if (examples == 0) throw ConfigError("BatchSampler: no examples");
  Reshuffle();
}

void BatchSampler::Reshuffle() {
  order_.resize(examples_);
  for (std::size_t i = 0; i < examples_; ++i) order_[i] = i;
  GaussStream rng(DeriveSubstream(seed_, "epoch", epoch_));
  for (std::size_t i = examples_; i > 1; --i) {
    const auto j = static_cast<std::size_t>(
        (static_cast<unsigned __int128>(rng.NextU64()) * i) >> 64);
    std::swap(order_[i - 1], order_[j]);
  }
  cursor_ = 0;
}

std::vector<std::size_t> BatchSampler::Next() {
  if (cursor_ + batch_size_ > examples_) {
    ++epoch_;
    Reshuffle();
  }
  std::vector<std::size_t> out(order_.begin() + static_cast<long>(cursor_),
                               order_.begin() + static_cast<long>(cursor_ + batch_size_));
  cursor_ += batch_size_;
  return out;
}

}  // namespace pgap
