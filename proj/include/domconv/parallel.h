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

#ifndef DOMCONV_PARALLEL_H_
#define DOMCONV_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace domconv {

// Process-wide cap on worker threads; 0 selects hardware concurrency.
void SetThreadCount(int threads);
int ThreadCount();

// Splits [0, n) into contiguous shards of at least `grain` items and runs
// `fn(begin, end)` on each, possibly concurrently. Calls made from inside a
// shard run serially, so nesting never oversubscribes. Exceptions thrown by
// a shard are rethrown on the calling thread (the first one by shard order).
void ParallelFor(std::size_t n, std::size_t grain,
                 const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace domconv

#endif  // DOMCONV_PARALLEL_H_
