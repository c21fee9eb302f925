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

#include "pgap/random.h"

#include <cmath>
#include <numbers>

#include "pgap/errors.h"
#include "pgap/svd.h"

namespace pgap {
namespace {

constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

// FNV-1a over the label bytes.
std::uint64_t HashLabel(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t Mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Seed DeriveSubstream(Seed parent, std::string_view label,
                     std::uint64_t counter) {
  if (label.empty()) throw ConfigError("DeriveSubstream: empty label");
  std::uint64_t h = Mix64(parent.value + kGoldenGamma);
  h = Mix64(h ^ HashLabel(label));
  h = Mix64(h + (counter + 1) * kGoldenGamma);
  return Seed{h};
}

std::uint64_t GaussStream::RawWord() {
  ++counter_;
  return Mix64(seed_.value + counter_ * kGoldenGamma);
}

std::uint64_t GaussStream::NextU64() {
  ++position_;
  return RawWord();
}

double GaussStream::NextUniform() {
  ++position_;
  // 53 random bits mapped to (0, 1].
  return (static_cast<double>(RawWord() >> 11) + 1.0) * 0x1.0p-53;
}

int GaussStream::RademacherSign() {
  ++position_;
  return (RawWord() >> 63) ? 1 : -1;
}

double GaussStream::NextGaussian() {
  ++position_;
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = (static_cast<double>(RawWord() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(RawWord() >> 11) * 0x1.0p-53;
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

void GaussStream::FillGaussian(std::span<double> out) {
  for (double& v : out) v = NextGaussian();
}

Matrix GaussStream::GaussMatrix(std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  FillGaussian(m.data());
  return m;
}

Matrix GaussMatrix(GaussStream& stream, std::size_t rows, std::size_t cols) {
  return stream.GaussMatrix(rows, cols);
}

Matrix RandomOrthonormal(GaussStream& stream, std::size_t rows,
                         std::size_t cols) {
  if (cols > rows) {
    throw DimensionError("RandomOrthonormal: cols " + std::to_string(cols) +
                         " exceed rows " + std::to_string(rows));
  }
  return Orthonormalize(stream.GaussMatrix(rows, cols));
}

}  // namespace pgap
