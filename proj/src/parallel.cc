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

#include "domconv/parallel.h"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace domconv {

namespace {

std::atomic<int> g_threads{0};
thread_local bool t_inside_shard = false;

}  // namespace

void SetThreadCount(int threads) { g_threads.store(std::max(threads, 0)); }

int ThreadCount() {
  const int configured = g_threads.load();
  if (configured > 0) return configured;
  return std::max(1u, std::thread::hardware_concurrency());
}

void ParallelFor(std::size_t n, std::size_t grain,
                 const std::function<void(std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  grain = std::max<std::size_t>(grain, 1);
  const std::size_t max_shards = (n + grain - 1) / grain;
  const std::size_t shards =
      t_inside_shard
          ? 1
          : std::min<std::size_t>(max_shards,
                                  static_cast<std::size_t>(ThreadCount()));
  if (shards <= 1) {
    fn(0, n);
    return;
  }

  std::vector<std::exception_ptr> errors(shards);
  std::vector<std::jthread> workers;
  workers.reserve(shards - 1);
  const std::size_t step = (n + shards - 1) / shards;
  auto run = [&](std::size_t s) {
    const std::size_t begin = s * step;
    const std::size_t end = std::min(n, begin + step);
    if (begin >= end) return;
    t_inside_shard = true;
    try {
      fn(begin, end);
    } catch (...) {
      errors[s] = std::current_exception();
    }
    t_inside_shard = false;
  };
  for (std::size_t s = 1; s < shards; ++s) workers.emplace_back(run, s);
  run(0);
  workers.clear();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace domconv
