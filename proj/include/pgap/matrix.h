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

#ifndef PGAP_MATRIX_H_
#define PGAP_MATRIX_H_

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace pgap {

// Dense row-major matrix of doubles. Vectors are stored as n x 1 matrices.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix FromRows(
      std::initializer_list<std::initializer_list<double>> rows);
  static Matrix Identity(std::size_t n);
  static Matrix Diagonal(std::span<const double> diag);
  static Matrix Column(std::span<const double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  bool SameShape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string ShapeString() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double scale);

  // Bitwise equality of shape and payload.
  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double scale);
Matrix operator*(double scale, Matrix a);

// Compensated (Kahan-Babuska) accumulator.
class KahanSum {
 public:
  void Add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      compensation_ += (sum_ - t) + x;
    } else {
      compensation_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

// Tr(a^T b). Throws DimensionError on shape mismatch.
double FrobInner(const Matrix& a, const Matrix& b);
double FrobNorm(const Matrix& a);

Matrix MatMul(const Matrix& a, const Matrix& b);
// a^T b without materialising the transpose.
Matrix MatMulTransA(const Matrix& a, const Matrix& b);
// a b^T without materialising the transpose.
Matrix MatMulTransB(const Matrix& a, const Matrix& b);
Matrix Transpose(const Matrix& a);

// y += alpha * x.
void Axpy(double alpha, const Matrix& x, Matrix& y);

Matrix Outer(std::span<const double> x, std::span<const double> y);
// Column-major stacking, the convention of vec(U Z V^T) = (V kron U) vec(Z).
std::vector<double> Vec(const Matrix& a);
Matrix Kronecker(const Matrix& a, const Matrix& b);

double MaxAbsDiff(const Matrix& a, const Matrix& b);
bool AllFinite(const Matrix& a);

}  // namespace pgap

#endif  // PGAP_MATRIX_H_
