// This file is part of rmdp-lab, a toolkit for tabular robust Markov
// decision processes. Distributed under the MIT license; see LICENSE.
#pragma once

#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace rmdp_lab {

/**
 * Resolves the worker count: an explicit request wins, otherwise the
 * RMDP_LAB_THREADS environment variable, otherwise the hardware
 * concurrency. Always at least 1.
 */
inline std::size_t resolve_threads(std::size_t requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("RMDP_LAB_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n > 0) return static_cast<std::size_t>(n);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

/**
 * Runs body(i) for i in [0, count) across `threads` workers (resolved via
 * resolve_threads). Work is split into contiguous blocks; results must be
 * written to per-index slots so the outcome is independent of scheduling.
 * The first exception thrown by any worker is rethrown on the caller.
 */
template <typename Body>
inline void parallel_for(std::size_t count, const Body& body,
                         std::size_t threads = 0) {
    if (count == 0) return;
    const std::size_t workers = std::min(resolve_threads(threads), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr first_error;
    std::mutex error_mutex;
    const std::size_t block = (count + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * block;
        const std::size_t hi = std::min(lo + block, count);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace rmdp_lab
