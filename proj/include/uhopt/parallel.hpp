#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace uhopt {

inline unsigned resolve_workers(unsigned requested) {
    if (requested != 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

// Runs body(begin, end) over contiguous chunks of [0, n). Each index is
// visited exactly once; callers write results by index so the outcome does
// not depend on how the range is split.
template <class Body>
void parallel_for(std::size_t n, unsigned workers, Body&& body) {
    workers = resolve_workers(workers);
    if (workers <= 1 || n < 2 * static_cast<std::size_t>(workers)) {
        body(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned k = 0; k < workers; ++k) {
        const std::size_t begin = std::min(n, k * chunk);
        const std::size_t end = std::min(n, begin + chunk);
        pool.emplace_back([&, k, begin, end] {
            try {
                body(begin, end);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace uhopt
