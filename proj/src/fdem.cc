// Copyright 2026 The Domconv Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "domconv/fdem.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "domconv/errors.h"

namespace domconv {

namespace {

constexpr std::byte kMagic[4] = {std::byte{0x46}, std::byte{0x44},
                                 std::byte{0x45}, std::byte{0x4D}};

template <typename T>
T ReadLittle(const std::byte* p) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<U>(std::to_integer<unsigned>(p[i])) << (8 * i);
  }
  return std::bit_cast<T>(v);
}

template <typename T>
void AppendLittle(std::vector<std::byte>& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  const U v = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFF));
  }
}

}  // namespace

EmbeddingMatrix ParseFdem(std::span<const std::byte> bytes,
                          const LoadOptions& options) {
  if (bytes.size() < kFdemHeaderSize) {
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) != 0) {
      throw FormatError("bad FDEM magic");
    }
    throw CorruptionError("FDEM header truncated");
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("bad FDEM magic");
  }
  const auto version = ReadLittle<std::uint32_t>(bytes.data() + 4);
  if (version != kFdemVersion) {
    throw FormatError("unsupported FDEM version " + std::to_string(version));
  }
  const auto dtype = ReadLittle<std::uint32_t>(bytes.data() + 8);
  if (dtype != kFdemDtypeF32) {
    throw FormatError("unsupported FDEM dtype code " + std::to_string(dtype));
  }
  const auto rows = ReadLittle<std::uint64_t>(bytes.data() + 12);
  const auto dim = ReadLittle<std::uint64_t>(bytes.data() + 20);
  if (rows == 0 || dim == 0) {
    throw FormatError("FDEM matrix must have rows >= 1 and dim >= 1");
  }
  const std::size_t payload = bytes.size() - kFdemHeaderSize;
  if (dim > std::numeric_limits<std::uint64_t>::max() / rows / 4 ||
      rows * dim * 4 != payload) {
    std::ostringstream msg;
    msg << "FDEM payload is " << payload << " bytes, header declares " << rows
        << " x " << dim << " f32 values";
    throw CorruptionError(msg.str());
  }

  std::vector<float> data(rows * dim);
  const std::byte* p = bytes.data() + kFdemHeaderSize;
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(data.data(), p, payload);
  } else {
    for (std::size_t i = 0; i < data.size(); ++i) {
      data[i] = ReadLittle<float>(p + 4 * i);
    }
  }
  EmbeddingMatrix matrix(rows, dim, std::move(data));
  if (options.renormalize) return Renormalized(matrix);
  ValidateUnitRows(matrix);
  return matrix;
}

std::vector<std::byte> ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  std::vector<std::byte> bytes(size);
  if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()),
                           static_cast<std::streamsize>(size))) {
    throw CorruptionError("short read on " + path.string());
  }
  return bytes;
}

EmbeddingMatrix LoadMatrix(const std::filesystem::path& path,
                           const LoadOptions& options) {
  const auto bytes = ReadFileBytes(path);
  try {
    return ParseFdem(bytes, options);
  } catch (const NormalizationError& e) {
    throw NormalizationError(e.row(), e.norm(), path.string());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const CorruptionError& e) {
    throw CorruptionError(path.string() + ": " + e.what());
  }
}

std::vector<std::byte> SerializeFdem(const EmbeddingMatrix& matrix) {
  std::vector<std::byte> out;
  out.reserve(kFdemHeaderSize + matrix.data().size() * 4);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  AppendLittle(out, kFdemVersion);
  AppendLittle(out, kFdemDtypeF32);
  AppendLittle(out, static_cast<std::uint64_t>(matrix.rows()));
  AppendLittle(out, static_cast<std::uint64_t>(matrix.dim()));
  for (float x : matrix.data()) AppendLittle(out, x);
  return out;
}

void WriteMatrix(const std::filesystem::path& path,
                 const EmbeddingMatrix& matrix) {
  const auto bytes = SerializeFdem(matrix);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

}  // namespace domconv
