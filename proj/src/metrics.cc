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

#include "domconv/metrics.h"

#include <algorithm>

#include "domconv/errors.h"

namespace domconv {

namespace {

std::size_t CountRelevant(const std::vector<bool>& is_relevant) {
  return static_cast<std::size_t>(
      std::count(is_relevant.begin(), is_relevant.end(), true));
}

bool IsRelevant(const std::vector<bool>& is_relevant, std::size_t id) {
  return id < is_relevant.size() && is_relevant[id];
}

}  // namespace

std::optional<double> AveragePrecision(std::span<const std::size_t> ranking,
                                       const std::vector<bool>& is_relevant) {
  const std::size_t relevant = CountRelevant(is_relevant);
  if (relevant == 0) return std::nullopt;
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t r = 0; r < ranking.size() && hits < relevant; ++r) {
    if (IsRelevant(is_relevant, ranking[r])) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  return sum / static_cast<double>(relevant);
}

std::optional<double> RecallAtK(std::span<const std::size_t> ranking,
                                const std::vector<bool>& is_relevant,
                                std::size_t k, RecallMode mode) {
  if (k == 0) throw InvalidArgumentError("recall cutoff must be at least 1");
  const std::size_t relevant = CountRelevant(is_relevant);
  if (relevant == 0) return std::nullopt;
  std::size_t hits = 0;
  const std::size_t depth = std::min(k, ranking.size());
  for (std::size_t r = 0; r < depth; ++r) {
    if (IsRelevant(is_relevant, ranking[r])) ++hits;
  }
  if (mode == RecallMode::kHit) return hits > 0 ? 1.0 : 0.0;
  return static_cast<double>(hits) / static_cast<double>(relevant);
}

namespace {

std::vector<bool> ToMask(const std::unordered_set<std::size_t>& relevant) {
  std::size_t size = 0;
  for (std::size_t id : relevant) size = std::max(size, id + 1);
  std::vector<bool> mask(size, false);
  for (std::size_t id : relevant) mask[id] = true;
  return mask;
}

}  // namespace

std::optional<double> AveragePrecision(
    std::span<const std::size_t> ranking,
    const std::unordered_set<std::size_t>& relevant) {
  return AveragePrecision(ranking, ToMask(relevant));
}

std::optional<double> RecallAtK(std::span<const std::size_t> ranking,
                                const std::unordered_set<std::size_t>& relevant,
                                std::size_t k, RecallMode mode) {
  return RecallAtK(ranking, ToMask(relevant), k, mode);
}

}  // namespace domconv
