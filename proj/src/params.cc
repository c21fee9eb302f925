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

#include "pgap/params.h"

#include <bit>
#include <utility>

#include "pgap/errors.h"
#include "pgap/random.h"

namespace pgap {

std::string_view ParamKindName(ParamKind kind) {
  switch (kind) {
    case ParamKind::kDense:
      return "dense";
    case ParamKind::kMatrixSubspace:
      return "matrix_subspace";
  }
  return "unknown";
}

void ParamSet::Add(std::string name, Matrix tensor, ParamKind kind) {
  if (IndexOf(name)) throw ConfigError("ParamSet: duplicate name '" + name + "'");
  entries_.push_back(Entry{std::move(name), std::move(tensor), kind});
}

std::optional<std::size_t> ParamSet::IndexOf(std::string_view name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name == name) return i;
  }
  return std::nullopt;
}

Matrix& ParamSet::tensor(std::string_view name) {
  auto idx = IndexOf(name);
  if (!idx) throw ConfigError("ParamSet: no parameter '" + std::string(name) + "'");
  return entries_[*idx].tensor;
}

const Matrix& ParamSet::tensor(std::string_view name) const {
  auto idx = IndexOf(name);
  if (!idx) throw ConfigError("ParamSet: no parameter '" + std::string(name) + "'");
  return entries_[*idx].tensor;
}

std::size_t ParamSet::ParameterCount() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.size();
  return n;
}

ParamSet ParamSet::ZerosLike() const {
  ParamSet out;
  for (const auto& e : entries_) {
    out.Add(e.name, Matrix(e.tensor.rows(), e.tensor.cols()), e.kind);
  }
  return out;
}

bool ParamSet::SameLayout(const ParamSet& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.name != b.name || a.kind != b.kind || !a.tensor.SameShape(b.tensor)) {
      return false;
    }
  }
  return true;
}

std::uint64_t ParamSet::Checksum() const {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  auto absorb = [&h](std::uint64_t x) { h = Mix64(h ^ x) + 0x9e3779b97f4a7c15ULL; };
  for (const auto& e : entries_) {
    for (unsigned char c : e.name) absorb(c);
    absorb(static_cast<std::uint64_t>(e.kind));
    absorb(e.tensor.rows());
    absorb(e.tensor.cols());
    for (double v : e.tensor.data()) absorb(std::bit_cast<std::uint64_t>(v));
  }
  return h;
}

bool ParamSet::operator==(const ParamSet& other) const {
  if (!SameLayout(other)) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto a = entries_[i].tensor.data();
    const auto b = other.entries_[i].tensor.data();
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (std::bit_cast<std::uint64_t>(a[k]) != std::bit_cast<std::uint64_t>(b[k])) {
        return false;
      }
    }
  }
  return true;
}

void RequireLayout(const ParamSet& expected, const ParamSet& actual,
                   std::string_view who) {
  if (expected.size() != actual.size()) {
    throw DimensionError(std::string(who) + ": expected " +
                         std::to_string(expected.size()) + " parameters, got " +
                         std::to_string(actual.size()));
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (expected.name(i) != actual.name(i) || expected.kind(i) != actual.kind(i) ||
        !expected.tensor(i).SameShape(actual.tensor(i))) {
      throw DimensionError(std::string(who) + ": parameter " + std::to_string(i) +
                           " expected '" + expected.name(i) + "' " +
                           expected.tensor(i).ShapeString() + ", got '" +
                           actual.name(i) + "' " + actual.tensor(i).ShapeString());
    }
  }
}

}  // namespace pgap
