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

#ifndef DOMCONV_METRICS_H_
#define DOMCONV_METRICS_H_

#include <cstddef>
#include <optional>
#include <span>
#include <unordered_set>
#include <vector>

namespace domconv {

enum class RecallMode {
  // |relevant in top k| / |relevant|.
  kProportional,
  // 1 if any relevant item is in the top k. Only for comparing with numbers
  // reported under that convention.
  kHit,
};

// Average precision over a full ranking. `is_relevant` is indexed by item id
// and its number of set flags is the relevant count. Returns nullopt when
// nothing is relevant.
std::optional<double> AveragePrecision(std::span<const std::size_t> ranking,
                                       const std::vector<bool>& is_relevant);
std::optional<double> AveragePrecision(
    std::span<const std::size_t> ranking,
    const std::unordered_set<std::size_t>& relevant);

std::optional<double> RecallAtK(std::span<const std::size_t> ranking,
                                const std::vector<bool>& is_relevant,
                                std::size_t k,
                                RecallMode mode = RecallMode::kProportional);
std::optional<double> RecallAtK(std::span<const std::size_t> ranking,
                                const std::unordered_set<std::size_t>& relevant,
                                std::size_t k,
                                RecallMode mode = RecallMode::kProportional);

}  // namespace domconv

#endif  // DOMCONV_METRICS_H_
