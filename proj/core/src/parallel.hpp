#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace eitmono::detail {

// Runs body(i) for i in [0, n) on up to hardware_concurrency threads. Each index is owned by
// exactly one thread; the first exception is rethrown on the calling thread.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
    const std::size_t workers =
        std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) body(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    threads.clear();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace eitmono::detail
