#pragma once

// Deterministic replica parallelism: work items are keyed by index and
// results land in an index-addressed vector, so the outcome is byte-identical
// for any thread count.

#include <cstdint>
#include <cstdlib>
#include <thread>
#include <vector>

namespace grem {

inline int default_thread_count() {
    if (const char* env = std::getenv("GREM_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Evaluates worker(0..count-1) on `threads` threads (0 = default) with a
/// static stride schedule; results are collected by index.
template <typename T, typename F>
std::vector<T> run_replicas(std::uint64_t count, F&& worker, int threads = 0) {
    if (threads <= 0) threads = default_thread_count();
    std::vector<T> out(count);
    if (threads == 1 || count <= 1) {
        for (std::uint64_t i = 0; i < count; ++i) out[i] = worker(i);
        return out;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t]() {
            for (std::uint64_t i = static_cast<std::uint64_t>(t); i < count;
                 i += static_cast<std::uint64_t>(threads))
                out[i] = worker(i);
        });
    }
    for (auto& th : pool) th.join();
    return out;
}

} // namespace grem
