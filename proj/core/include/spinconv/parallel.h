// Copyright 2026 The spinconv Authors.
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

#ifndef SPINCONV_PARALLEL_H_
#define SPINCONV_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace spinconv {

// Process-wide worker count used by the batch-parallel kernels. 1 gives the
// bit-reproducible single-thread mode.
void set_num_threads(int n);
int num_threads();

// Splits [0, n) into at most num_threads() contiguous chunks and runs
// fn(begin, end, chunk_index) for each. The partition depends only on n and
// the thread count, so per-chunk partial sums reduce in a fixed order.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t, int)>& fn);

// Number of chunks parallel_for(n, ...) will use.
int parallel_chunks(std::size_t n);

}  // namespace spinconv

#endif  // SPINCONV_PARALLEL_H_
