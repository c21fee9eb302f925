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

#ifndef PGAP_PARAMS_H_
#define PGAP_PARAMS_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pgap/matrix.h"

namespace pgap {

// kMatrixSubspace marks the matrices that receive subspace-aligned
// perturbations; everything else is perturbed with a full Gaussian.
enum class ParamKind : std::uint8_t {
  kDense = 0,
  kMatrixSubspace = 1,
};

std::string_view ParamKindName(ParamKind kind);

// Ordered, uniquely named parameter tensors. Names and kinds are fixed at
// insertion; only tensor values may change afterwards.
class ParamSet {
 public:
  ParamSet() = default;

  // Throws ConfigError on a duplicate name.
  void Add(std::string name, Matrix tensor, ParamKind kind);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  const std::string& name(std::size_t i) const { return entries_[i].name; }
  ParamKind kind(std::size_t i) const { return entries_[i].kind; }
  Matrix& tensor(std::size_t i) { return entries_[i].tensor; }
  const Matrix& tensor(std::size_t i) const { return entries_[i].tensor; }

  std::optional<std::size_t> IndexOf(std::string_view name) const;
  // Throws ConfigError when the name is absent.
  Matrix& tensor(std::string_view name);
  const Matrix& tensor(std::string_view name) const;

  // Total scalar count across all tensors.
  std::size_t ParameterCount() const;
  // Same names, kinds and shapes; zero values.
  ParamSet ZerosLike() const;
  // Same names, kinds and shapes as `other`.
  bool SameLayout(const ParamSet& other) const;

  // 64-bit digest of names, kinds, shapes, and the exact payload bits.
  std::uint64_t Checksum() const;

  // Bitwise equality (names, kinds, shapes, payloads).
  bool operator==(const ParamSet& other) const;

 private:
  struct Entry {
    std::string name;
    Matrix tensor;
    ParamKind kind;
  };
  std::vector<Entry> entries_;
};

// Throws DimensionError naming the first parameter whose name, kind, or shape
// differs from `expected`.
void RequireLayout(const ParamSet& expected, const ParamSet& actual,
                   std::string_view who);

}  // namespace pgap

#endif  // PGAP_PARAMS_H_
