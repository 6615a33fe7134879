#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace scl {

// Worker count: SCL_THREADS when set to a positive integer, else hardware parallelism.
inline unsigned worker_threads() {
    if (const char* env = std::getenv("SCL_THREADS")) {
        try {
            const long n = std::stol(env);
            if (n >= 1) return static_cast<unsigned>(n);
        } catch (...) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Static partition of [0, n) into contiguous ranges, one per worker. Callers
// must write only to state owned by their range, so results do not depend on
// the thread count.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t min_chunk = 64) {
    const std::size_t workers =
        std::min<std::size_t>(worker_threads(), std::max<std::size_t>(1, n / min_chunk));
    if (workers <= 1) {
        fn(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 1; w < workers; ++w) {
        const std::size_t begin = std::min(n, w * chunk);
        const std::size_t end = std::min(n, begin + chunk);
        pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    fn(std::size_t{0}, std::min(n, chunk));
    for (auto& t : pool) t.join();
}

}  // namespace scl
