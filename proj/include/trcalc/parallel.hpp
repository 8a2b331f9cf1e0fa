#pragma once

// Index-parallel map with results in index order. The degree of parallelism
// comes from TRCALC_JOBS (default 1). If several jobs throw, the exception of
// the smallest index is rethrown, so failures are as deterministic as results.

#include "trcalc/errors.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace trcalc {

inline unsigned jobs_from_env()
{
    const char* raw = std::getenv("TRCALC_JOBS");
    if (!raw || !*raw)
        return 1;
    char* end = nullptr;
    unsigned long n = std::strtoul(raw, &end, 10);
    if (*end != '\0' || n == 0 || n > 1024)
        throw ValidationError(std::string("TRCALC_JOBS must be an integer in [1, 1024], got '") + raw + "'");
    return static_cast<unsigned>(n);
}

template <class F>
auto parallel_map(std::size_t n, F&& fn, unsigned jobs = jobs_from_env()) -> std::vector<decltype(fn(std::size_t{}))>
{
    using R = decltype(fn(std::size_t{}));
    std::vector<std::optional<R>> slots(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < n; k = next++) {
            try {
                slots[k].emplace(fn(k));
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    unsigned threads = jobs > n ? static_cast<unsigned>(n) : jobs;
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    std::vector<R> out;
    out.reserve(n);
    for (auto& s : slots)
        out.push_back(std::move(*s));
    return out;
}

} // namespace trcalc
