#pragma once

#include <cstdint>
#include <thread>
#include <vector>

namespace linetherm::engine::detail {

/// Runs f(worker, i) for i in [begin, end), striding indices across `workers` threads.
template <class F>
void parallel_for(int workers, std::int64_t begin, std::int64_t end, F&& f) {
    if (workers <= 1 || end - begin <= 1) {
        for (std::int64_t i = begin; i < end; ++i) f(0, i);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::int64_t i = begin + w; i < end; i += workers) f(w, i);
        });
    }
}

}  // namespace linetherm::engine::detail
