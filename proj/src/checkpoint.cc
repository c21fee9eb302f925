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

#include "pgap/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <system_error>

#include "pgap/errors.h"

namespace pgap {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

template <typename T>
void Put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T Get(const char* what) {
    Need(sizeof(T), what);
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string GetString(std::size_t n, const char* what) {
    Need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void Need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw FormatError("checkpoint corrupted: truncated while reading " +
                        std::string(what) + " at byte " + std::to_string(pos_));
    }
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string SerializeCheckpoint(const ParamSet& params) {
  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  Put<std::uint32_t>(out, kCheckpointVersion);
  Put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string& name = params.name(i);
    Put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    Put<std::uint8_t>(out, static_cast<std::uint8_t>(params.kind(i)));
    const Matrix& t = params.tensor(i);
    Put<std::uint64_t>(out, t.rows());
    Put<std::uint64_t>(out, t.cols());
    for (double v : t.data()) Put<double>(out, v);
  }
  return out;
}

ParamSet DeserializeCheckpoint(const std::string& bytes) {
  Reader in(bytes);
  const std::string magic = in.GetString(4, "magic");
  if (magic != std::string(kCheckpointMagic, 4)) {
    throw FormatError("not a checkpoint: expected magic \"PGAP\"");
  }
  const auto version = in.Get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version) +
                      " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const auto count = in.Get<std::uint32_t>("tensor count");
  ParamSet params;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = in.Get<std::uint32_t>("name length");
    std::string name = in.GetString(len, "name");
    const auto kind = in.Get<std::uint8_t>("kind");
    if (kind > static_cast<std::uint8_t>(ParamKind::kMatrixSubspace)) {
      throw FormatError("checkpoint corrupted: unknown kind " +
                        std::to_string(kind) + " for '" + name + "'");
    }
    const auto rows = in.Get<std::uint64_t>("rows");
    const auto cols = in.Get<std::uint64_t>("cols");
    if (rows != 0 && cols > std::numeric_limits<std::uint64_t>::max() / 8 / rows) {
      throw FormatError("checkpoint corrupted: impossible shape for '" + name + "'");
    }
    const std::uint64_t n = rows * cols;
    in.Need(n * sizeof(double), "tensor payload");
    std::vector<double> data(n);
    for (auto& v : data) v = in.Get<double>("tensor payload");
    try {
      params.Add(std::move(name), Matrix(rows, cols, std::move(data)),
                 static_cast<ParamKind>(kind));
    } catch (const ConfigError& e) {
      throw FormatError(std::string("checkpoint corrupted: ") + e.what());
    }
  }
  if (in.remaining() != 0) {
    throw FormatError("checkpoint corrupted: " + std::to_string(in.remaining()) +
                      " trailing bytes");
  }
  return params;
}

void WriteFileAtomic(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename into '" + path.string() + "'");
  }
}

void SaveCheckpoint(const ParamSet& params, const std::filesystem::path& path) {
  WriteFileAtomic(path, SerializeCheckpoint(params));
}

ParamSet LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
  return DeserializeCheckpoint(bytes);
}

}  // namespace pgap
