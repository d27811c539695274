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

#ifndef DOMCONV_FDEM_H_
#define DOMCONV_FDEM_H_

// FDEM embedding files: "FDEM" magic, u32 version (1), u32 dtype (0 = f32),
// u64 rows, u64 dim, then rows*dim f32 values row-major. All integers and
// floats are little-endian; there is no padding or footer.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "domconv/embedding_matrix.h"

namespace domconv {

inline constexpr std::uint32_t kFdemVersion = 1;
inline constexpr std::uint32_t kFdemDtypeF32 = 0;
inline constexpr std::size_t kFdemHeaderSize = 4 + 4 + 4 + 8 + 8;

struct LoadOptions {
  // Divide each row by its norm instead of rejecting non-unit rows.
  bool renormalize = false;
};

EmbeddingMatrix ParseFdem(std::span<const std::byte> bytes,
                          const LoadOptions& options = {});
EmbeddingMatrix LoadMatrix(const std::filesystem::path& path,
                           const LoadOptions& options = {});

std::vector<std::byte> SerializeFdem(const EmbeddingMatrix& matrix);
void WriteMatrix(const std::filesystem::path& path,
                 const EmbeddingMatrix& matrix);

// Whole-file read; throws FormatError when the file cannot be opened.
std::vector<std::byte> ReadFileBytes(const std::filesystem::path& path);

}  // namespace domconv

#endif  // DOMCONV_FDEM_H_
