// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace isac {

// Worker-thread cap: ISAC_THREADS if set, hardware concurrency otherwise.
inline int worker_threads() {
    if (const char* env = std::getenv("ISAC_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Static block split of [0, count) across worker threads. Each index is
// processed exactly once and writes only its own outputs, so results do not
// depend on the thread count.
inline void parallel_for(int count, const std::function<void(int)>& body) {
    const int threads = std::min(worker_threads(), count > 0 ? count : 1);
    if (threads <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    const int chunk = (count + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const int lo = t * chunk;
        const int hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (int i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace isac
