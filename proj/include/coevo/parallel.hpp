#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace coevo {

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index must write
/// only its own output slot; results are therefore independent of scheduling.
/// The first exception thrown by any task is rethrown on the caller.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::jthread> pool;
    const std::size_t count = std::min(threads, n);
    pool.reserve(count);
    for (std::size_t t = 0; t < count; ++t) pool.emplace_back(worker);
    pool.clear();
    if (error) std::rethrow_exception(error);
}

inline std::size_t default_thread_count() { return std::max(1u, std::thread::hardware_concurrency()); }

}  // namespace coevo
