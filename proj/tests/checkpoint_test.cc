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

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>

#include "pgap/checkpoint.h"
#include "pgap/errors.h"
#include "pgap/params.h"
#include "test_util.h"

namespace pgap {
namespace {

ParamSet Sample() {
  ParamSet p;
  p.Add("W", testing::Gaussian(1, 3, 2), ParamKind::kMatrixSubspace);
  p.Add("b", Matrix::FromRows({{-0.0}, {std::numeric_limits<double>::denorm_min()}}),
        ParamKind::kDense);
  return p;
}

template <typename T>
void PutLe(std::string& out, T v) {
  static_assert(std::endian::native == std::endian::little);
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

TEST(ParamSetTest, RejectsDuplicateNames) {
  ParamSet p;
  p.Add("x", Matrix(1, 1), ParamKind::kDense);
  EXPECT_THROW(p.Add("x", Matrix(1, 1), ParamKind::kDense), ConfigError);
}

TEST(ParamSetTest, CountsAndLookup) {
  const ParamSet p = Sample();
  EXPECT_EQ(p.ParameterCount(), 8u);
  EXPECT_EQ(p.IndexOf("b"), 1u);
  EXPECT_FALSE(p.IndexOf("c").has_value());
  EXPECT_TRUE(p.SameLayout(p.ZerosLike()));
  EXPECT_EQ(p.kind(0), ParamKind::kMatrixSubspace);
}

TEST(ParamSetTest, ChecksumSeesSingleBitFlip) {
  ParamSet p = Sample();
  const auto before = p.Checksum();
  double& x = p.tensor(0)(0, 0);
  x = std::nextafter(x, 1e300);
  EXPECT_NE(p.Checksum(), before);
}

// Byte layout written out by hand from the documented format.
TEST(CheckpointTest, ByteLayoutMatchesFormat) {
  ParamSet p;
  p.Add("ab", Matrix::FromRows({{1.5, -2.0}}), ParamKind::kMatrixSubspace);
  std::string want = "PGAP";
  PutLe<std::uint32_t>(want, 1);
  PutLe<std::uint32_t>(want, 1);
  PutLe<std::uint32_t>(want, 2);
  want += "ab";
  want.push_back(1);
  PutLe<std::uint64_t>(want, 1);
  PutLe<std::uint64_t>(want, 2);
  PutLe<double>(want, 1.5);
  PutLe<double>(want, -2.0);
  EXPECT_EQ(SerializeCheckpoint(p), want);
}

TEST(CheckpointTest, RoundTripBitExact) {
  const ParamSet p = Sample();
  const ParamSet q = DeserializeCheckpoint(SerializeCheckpoint(p));
  ASSERT_TRUE(q == p);
  EXPECT_TRUE(std::signbit(q.tensor(1)(0, 0)));
  const auto dir = std::filesystem::temp_directory_path() / "pgap_ckpt_test";
  std::filesystem::create_directories(dir);
  SaveCheckpoint(p, dir / "a.ckpt");
  EXPECT_TRUE(LoadCheckpoint(dir / "a.ckpt") == p);
}

TEST(CheckpointTest, TruncationIsCorruption) {
  const std::string bytes = SerializeCheckpoint(Sample());
  for (std::size_t cut : {std::size_t{3}, std::size_t{10}, bytes.size() - 1}) {
    try {
      DeserializeCheckpoint(bytes.substr(0, cut));
      FAIL() << "accepted truncated checkpoint of " << cut << " bytes";
    } catch (const FormatError& e) {
      EXPECT_NE(std::string(e.what()).find("corrupt"), std::string::npos) << e.what();
    }
  }
}

TEST(CheckpointTest, WrongMagicNamesExpected) {
  std::string bytes = SerializeCheckpoint(Sample());
  bytes[0] = 'X';
  try {
    DeserializeCheckpoint(bytes);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("PGAP"), std::string::npos);
  }
}

TEST(CheckpointTest, RejectsVersionTrailingBytesAndKind) {
  std::string bytes = SerializeCheckpoint(Sample());
  std::string v2 = bytes;
  v2[4] = 2;
  EXPECT_THROW(DeserializeCheckpoint(v2), FormatError);
  EXPECT_THROW(DeserializeCheckpoint(bytes + "x"), FormatError);
  std::string bad_kind = bytes;
  bad_kind[4 + 4 + 4 + 4 + 1] = 9;  // kind byte of the first tensor ("W")
  EXPECT_THROW(DeserializeCheckpoint(bad_kind), FormatError);
}

TEST(CheckpointTest, MissingFileIsIoError) {
  EXPECT_THROW(LoadCheckpoint("/nonexistent/dir/x.ckpt"), IoError);
}

}  // namespace
}  // namespace pgap
