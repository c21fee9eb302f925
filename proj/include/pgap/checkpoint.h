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

// Binary parameter checkpoints.
//
// Little-endian layout: "PGAP", u32 version, u32 tensor count, then per
// tensor u32 name length, UTF-8 name, u8 kind, u64 rows, u64 cols, and
// rows * cols f64 values in row-major order.

#ifndef PGAP_CHECKPOINT_H_
#define PGAP_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <string>

#include "pgap/params.h"

namespace pgap {

inline constexpr char kCheckpointMagic[4] = {'P', 'G', 'A', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string SerializeCheckpoint(const ParamSet& params);
// Throws FormatError on a wrong magic, unsupported version, truncation,
// trailing bytes, or an impossible shape.
ParamSet DeserializeCheckpoint(const std::string& bytes);

// Written to a temporary sibling and renamed into place. Throws IoError.
void SaveCheckpoint(const ParamSet& params, const std::filesystem::path& path);
// Throws IoError if the file cannot be read, FormatError as above.
ParamSet LoadCheckpoint(const std::filesystem::path& path);

// Whole-file atomic write used for every artifact.
void WriteFileAtomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace pgap

#endif  // PGAP_CHECKPOINT_H_
