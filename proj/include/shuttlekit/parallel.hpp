#pragma once

#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace shuttlekit {

/// Worker count: explicit request, else hardware concurrency, capped by the
/// SHUTTLEKIT_THREADS environment variable when set.
inline unsigned worker_count(int requested = 0) {
    unsigned n = requested > 0 ? static_cast<unsigned>(requested)
                               : std::max(1u, std::thread::hardware_concurrency());
    if (const char* cap = std::getenv("SHUTTLEKIT_THREADS")) {
        const long v = std::strtol(cap, nullptr, 10);
        if (v >= 1 && static_cast<unsigned>(v) < n) n = static_cast<unsigned>(v);
    }
    return n;
}

/// Runs fn(i) for i in [0, n). Tasks are claimed from a shared counter; each
/// task must write only to its own slot so results never depend on scheduling.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, int threads = 0) {
    const unsigned workers = std::min<std::size_t>(worker_count(threads), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& t : pool) t.join();
}

} // namespace shuttlekit
