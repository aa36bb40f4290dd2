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

#include "spinconv/parallel.h"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace spinconv {
namespace {

std::atomic<int> g_threads{0};

int default_threads() {
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

void set_num_threads(int n) { g_threads.store(std::max(1, n)); }

int num_threads() {
  int n = g_threads.load();
  return n > 0 ? n : default_threads();
}

int parallel_chunks(std::size_t n) {
  return static_cast<int>(std::min<std::size_t>(
      std::max<std::size_t>(n, 1), static_cast<std::size_t>(num_threads())));
}

void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t, int)>& fn) {
  const int chunks = parallel_chunks(n);
  if (chunks <= 1) {
    fn(0, n, 0);
    return;
  }
  const std::size_t per = n / chunks;
  const std::size_t extra = n % chunks;
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(chunks);
  std::size_t begin = 0;
  for (int c = 0; c < chunks; ++c) {
    std::size_t end = begin + per + (static_cast<std::size_t>(c) < extra ? 1 : 0);
    workers.emplace_back([&, begin, end, c] {
      try {
        fn(begin, end, c);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    });
    begin = end;
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace spinconv
