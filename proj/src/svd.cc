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

#include "pgap/svd.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "pgap/errors.h"
#include "pgap/random.h"

namespace pgap {
namespace {

constexpr int kMaxJacobiSweeps = 80;
constexpr double kJacobiTolerance = 1e-15;
constexpr std::size_t kSketchOversample = 8;
constexpr int kPowerIterations = 2;

using Columns = std::vector<std::vector<double>>;

Columns ToColumns(const Matrix& a) {
  Columns cols(a.cols(), std::vector<double>(a.rows()));
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) cols[j][i] = a(i, j);
  }
  return cols;
}

double Dot(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double Norm(const std::vector<double>& x) { return std::sqrt(Dot(x, x)); }

// Orthonormalises columns in place. Column j is projected against columns
// 0..j-1 twice; if what remains is negligible it is replaced by the first
// canonical direction that survives the projection.
void OrthonormalizeColumns(Columns& cols, std::size_t n) {
  for (std::size_t j = 0; j < cols.size(); ++j) {
    auto& c = cols[j];
    const double original = Norm(c);
    auto project_out = [&](std::vector<double>& x) {
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t k = 0; k < j; ++k) {
          const double d = Dot(cols[k], x);
          for (std::size_t i = 0; i < n; ++i) x[i] -= d * cols[k][i];
        }
      }
    };
    project_out(c);
    double norm = Norm(c);
    if (!(norm > 1e-10 * original) || norm == 0.0) {
      for (std::size_t e = 0; e < n; ++e) {
        std::vector<double> candidate(n, 0.0);
        candidate[e] = 1.0;
        project_out(candidate);
        const double cn = Norm(candidate);
        if (cn > 0.5) {
          c = std::move(candidate);
          norm = cn;
          break;
        }
      }
    }
    for (double& v : c) v /= norm;
  }
}

Matrix FromColumns(const Columns& cols, std::size_t rows) {
  Matrix m(rows, cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    for (std::size_t i = 0; i < rows; ++i) m(i, j) = cols[j][i];
  }
  return m;
}

// One-sided Jacobi on a tall matrix (rows >= cols).
SvdTriple JacobiTall(const Matrix& g) {
  const std::size_t m = g.rows();
  const std::size_t n = g.cols();
  Columns a = ToColumns(g);
  Columns v(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) v[j][j] = 1.0;

  // Columns below this squared norm are rounding noise of a rank-deficient
  // input; rotating them against each other never settles.
  double total = 0.0;
  for (const auto& c : a) total += Dot(c, c);
  const double negligible = 1e-30 * total;

  bool converged = false;
  int sweep = 0;
  for (; sweep < kMaxJacobiSweeps && !converged; ++sweep) {
    converged = true;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = Dot(a[p], a[p]);
        const double beta = Dot(a[q], a[q]);
        const double gamma = Dot(a[p], a[q]);
        if (gamma == 0.0 || alpha <= negligible || beta <= negligible ||
            std::abs(gamma) <= kJacobiTolerance * std::sqrt(alpha * beta)) {
          continue;
        }
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double ap = a[p][i];
          const double aq = a[q][i];
          a[p][i] = c * ap - s * aq;
          a[q][i] = s * ap + c * aq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v[p][i];
          const double vq = v[q][i];
          v[p][i] = c * vp - s * vq;
          v[q][i] = s * vp + c * vq;
        }
      }
    }
  }
  if (!converged) {
    throw NumericError("JacobiSvd: no convergence after " +
                       std::to_string(sweep) + " sweeps on " +
                       g.ShapeString() + " matrix");
  }

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) sigma[j] = Norm(a[j]);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return sigma[x] > sigma[y];
  });

  const double sigma_max = n == 0 ? 0.0 : sigma[order[0]];
  Columns u_cols(n);
  Columns v_cols(n);
  std::vector<double> s(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    s[k] = sigma[j];
    v_cols[k] = v[j];
    u_cols[k] = a[j];
    if (sigma[j] > 1e-13 * sigma_max && sigma[j] > 0.0) {
      for (double& x : u_cols[k]) x /= sigma[j];
    } else {
      // Left vector undetermined; completed below to keep u orthonormal.
      std::fill(u_cols[k].begin(), u_cols[k].end(), 0.0);
    }
  }
  // Only zeroed columns are rebuilt; the others are already orthonormal and
  // pass through the projection essentially unchanged.
  OrthonormalizeColumns(u_cols, m);
  return SvdTriple{FromColumns(u_cols, m), std::move(s),
                   FromColumns(v_cols, n)};
}

SvdTriple Truncate(SvdTriple full, std::size_t r) {
  if (full.s.size() == r) return full;
  SvdTriple out;
  out.s.assign(full.s.begin(), full.s.begin() + static_cast<long>(r));
  out.u = Matrix(full.u.rows(), r);
  out.v = Matrix(full.v.rows(), r);
  for (std::size_t i = 0; i < full.u.rows(); ++i) {
    for (std::size_t j = 0; j < r; ++j) out.u(i, j) = full.u(i, j);
  }
  for (std::size_t i = 0; i < full.v.rows(); ++i) {
    for (std::size_t j = 0; j < r; ++j) out.v(i, j) = full.v(i, j);
  }
  return out;
}

}  // namespace

Matrix SvdTriple::SigmaMatrix() const { return Matrix::Diagonal(s); }

Matrix SvdTriple::Reconstruct() const {
  Matrix us = u;
  for (std::size_t i = 0; i < us.rows(); ++i) {
    for (std::size_t j = 0; j < us.cols(); ++j) us(i, j) *= s[j];
  }
  return MatMulTransB(us, v);
}

Matrix Orthonormalize(Matrix a) {
  if (a.cols() > a.rows()) {
    throw DimensionError("Orthonormalize: more columns than rows in " +
                         a.ShapeString());
  }
  Columns cols = ToColumns(a);
  OrthonormalizeColumns(cols, a.rows());
  return FromColumns(cols, a.rows());
}

SvdTriple JacobiSvd(const Matrix& g) {
  if (g.rows() >= g.cols()) return JacobiTall(g);
  SvdTriple t = JacobiTall(Transpose(g));
  std::swap(t.u, t.v);
  return t;
}

SvdTriple RandomizedSvd(const Matrix& g, std::size_t r) {
  const std::size_t min_dim = std::min(g.rows(), g.cols());
  const std::size_t width = std::min(r + kSketchOversample, min_dim);
  // The sketch seed depends only on the shape so the routine stays a pure
  // function of its input.
  GaussStream sketch_rng(DeriveSubstream(
      Seed{g.rows() * 0x100000001b3ULL + g.cols()}, "svd_sketch", width));
  const Matrix omega = sketch_rng.GaussMatrix(g.cols(), width);
  Matrix q = Orthonormalize(MatMul(g, omega));
  for (int it = 0; it < kPowerIterations; ++it) {
    const Matrix z = Orthonormalize(MatMulTransA(g, q));
    q = Orthonormalize(MatMul(g, z));
  }
  const Matrix core = MatMulTransA(q, g);  // width x n
  SvdTriple core_svd = JacobiSvd(core);
  SvdTriple out;
  out.u = MatMul(q, core_svd.u);
  out.s = std::move(core_svd.s);
  out.v = std::move(core_svd.v);
  return Truncate(std::move(out), r);
}

SvdTriple TruncatedSvd(const Matrix& g, std::size_t r) {
  const std::size_t min_dim = std::min(g.rows(), g.cols());
  if (r == 0 || r > min_dim) {
    throw DimensionError("TruncatedSvd: rank " + std::to_string(r) +
                         " invalid for " + g.ShapeString() + " matrix");
  }
  if (!AllFinite(g)) throw NumericError("TruncatedSvd: non-finite input");
  if (min_dim <= kExactSvdLimit) return Truncate(JacobiSvd(g), r);
  return RandomizedSvd(g, r);
}

double KronVecCheck(const Matrix& u, const Matrix& v, const Matrix& z) {
  if (u.cols() != z.rows() || v.cols() != z.cols() || z.rows() != z.cols()) {
    throw DimensionError("KronVecCheck: u " + u.ShapeString() + ", v " +
                         v.ShapeString() + ", z " + z.ShapeString());
  }
  const std::vector<double> lhs = Vec(MatMulTransB(MatMul(u, z), v));
  const Matrix p = Kronecker(v, u);
  const std::vector<double> vz = Vec(z);
  double err = 0.0;
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < p.cols(); ++j) s += p(i, j) * vz[j];
    const double d = lhs[i] - s;
    err += d * d;
  }
  return std::sqrt(err);
}

Matrix BlockDiagonal(std::span<const Matrix> blocks) {
  std::size_t rows = 0;
  std::size_t cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  Matrix out(rows, cols);
  std::size_t r0 = 0;
  std::size_t c0 = 0;
  for (const auto& b : blocks) {
    for (std::size_t i = 0; i < b.rows(); ++i) {
      for (std::size_t j = 0; j < b.cols(); ++j) out(r0 + i, c0 + j) = b(i, j);
    }
    r0 += b.rows();
    c0 += b.cols();
  }
  return out;
}

}  // namespace pgap
