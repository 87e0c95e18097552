#pragma once

#include <cstddef>
#include <span>
#include <thread>
#include <vector>

namespace kerrdg {

// Process-wide worker count. 0 means "use hardware_concurrency".
inline int& thread_count_ref() {
    static int n = 0;
    return n;
}

inline void set_thread_count(int n) { thread_count_ref() = n < 0 ? 0 : n; }

inline int effective_thread_count() {
    int n = thread_count_ref();
    if (n == 0) {
        unsigned hw = std::thread::hardware_concurrency();
        n = hw == 0 ? 1 : static_cast<int>(hw);
    }
    return n;
}

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks, one per
// worker; fn must only write to slots owned by index i so results do not
// depend on the worker count.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(effective_thread_count()), n);
    if (workers <= 1 || n < 32) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

// Deterministic pairwise reduction over a fixed ordering. Used for every
// norm/energy sum so trajectories are bit-identical for any thread count.
inline double pairwise_sum(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

}  // namespace kerrdg
