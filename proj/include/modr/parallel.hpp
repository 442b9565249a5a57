#pragma once

#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace modr {

inline unsigned worker_count() {
    if (const char* env = std::getenv("MODR_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n >= 1)
            return static_cast<unsigned>(n);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

/// Static block partition over [0, n). Workers write disjoint indices, so the
/// result is independent of the thread count. The first exception thrown by
/// any worker is rethrown on the calling thread.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    const unsigned workers = worker_count();
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i)
            body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr first_error;
    std::mutex error_mutex;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t lo = static_cast<std::size_t>(w) * chunk;
        if (lo >= n)
            break;
        const std::size_t hi = std::min(n, lo + chunk);
        pool.emplace_back([lo, hi, &body, &first_error, &error_mutex] {
            try {
                for (std::size_t i = lo; i < hi; ++i)
                    body(i);
            } catch (...) {
                std::scoped_lock lock(error_mutex);
                if (!first_error)
                    first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool)
        t.join();
    if (first_error)
        std::rethrow_exception(first_error);
}

} // namespace modr
