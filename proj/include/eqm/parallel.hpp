#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace eqm {

namespace detail {
inline thread_local bool inside_worker = false;
}

// Worker count: EQM_THREADS when set and positive, else hardware concurrency.
inline unsigned thread_count()
{
    if (const char* env = std::getenv("EQM_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) {
            return static_cast<unsigned>(v);
        }
    }
    return std::max(1U, std::thread::hardware_concurrency());
}

// Runs body(begin, end) over disjoint chunks of [0, n). Results must not depend
// on the chunking; callers write to disjoint slots or reduce commutatively.
template <class Body>
void parallel_chunks(std::size_t n, Body&& body, std::size_t min_chunk = 1)
{
    const std::size_t workers =
        std::min<std::size_t>(thread_count(), std::max<std::size_t>(1, n / std::max<std::size_t>(1, min_chunk)));
    if (workers <= 1 || n == 0 || detail::inside_worker) {
        body(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t b = w * chunk;
        const std::size_t e = std::min(n, b + chunk);
        if (b >= e) {
            break;
        }
        pool.emplace_back([&, b, e] {
            detail::inside_worker = true;
            try {
                body(b, e);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

template <class Fn>
void parallel_for(std::size_t n, Fn&& fn)
{
    parallel_chunks(n, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            fn(i);
        }
    });
}

} // namespace eqm
