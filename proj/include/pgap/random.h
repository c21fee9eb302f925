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

#ifndef PGAP_RANDOM_H_
#define PGAP_RANDOM_H_

#include <cstdint>
#include <span>
#include <string_view>

#include "pgap/matrix.h"

namespace pgap {

// 64-bit seed. Seeds are values: every random quantity in a run is addressed
// by a (seed, label, counter) path derived from the run seed.
struct Seed {
  std::uint64_t value = 0;

  friend bool operator==(Seed, Seed) = default;
};

// Deterministic child seed for (label, counter). Distinct paths give distinct
// seeds with overwhelming probability. `label` must be non-empty.
Seed DeriveSubstream(Seed parent, std::string_view label,
                     std::uint64_t counter);

// SplitMix64 finaliser; exposed for hashing helpers and tests.
std::uint64_t Mix64(std::uint64_t x);

// Counter-based stream: raw word i is Mix64(seed + (i + 1) * golden gamma),
// so a stream is fully determined by its seed and position. Normals use the
// Box-Muller transform on pairs of raw words; the second variate of a pair is
// cached. A stream has a single owner; threads derive their own substreams.
class GaussStream {
 public:
  explicit GaussStream(Seed seed) : seed_(seed) {}

  double NextGaussian();
  // Uniform in the open interval (0, 1).
  double NextUniform();
  std::uint64_t NextU64();
  // +1 or -1 with equal probability.
  int RademacherSign();

  void FillGaussian(std::span<double> out);
  Matrix GaussMatrix(std::size_t rows, std::size_t cols);

  Seed seed() const { return seed_; }
  // Variates handed out so far (normals, uniforms, and signs alike).
  std::uint64_t position() const { return position_; }

 private:
  std::uint64_t RawWord();

  Seed seed_;
  std::uint64_t counter_ = 0;
  std::uint64_t position_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Free-function form of GaussStream::GaussMatrix.
Matrix GaussMatrix(GaussStream& stream, std::size_t rows, std::size_t cols);

// Matrix with orthonormal columns drawn from the Haar measure (QR of a
// Gaussian matrix with sign-fixed R diagonal). Requires cols <= rows.
Matrix RandomOrthonormal(GaussStream& stream, std::size_t rows,
                         std::size_t cols);

}  // namespace pgap

#endif  // PGAP_RANDOM_H_
