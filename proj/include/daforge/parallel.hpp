#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace daforge {

// Deterministic chunked parallel map-reduce.
//
// The index range is split into fixed-size chunks; each chunk produces a
// partial result of type R, and partials are reduced sequentially in chunk
// order.  The outcome is therefore independent of the number of workers,
// which is what lets reports be byte-identical across --workers settings.
template <typename R, typename ChunkFn, typename ReduceFn>
R parallel_chunks(std::size_t count, std::size_t chunk_size, int workers,
                  R init, ChunkFn chunk_fn, ReduceFn reduce_fn) {
    if (chunk_size == 0) chunk_size = 1;
    const std::size_t n_chunks = (count + chunk_size - 1) / chunk_size;
    if (workers <= 0) workers = 1;

    std::vector<R> partials(n_chunks);
    if (workers == 1 || n_chunks <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) {
            const std::size_t lo = c * chunk_size;
            const std::size_t hi = std::min(count, lo + chunk_size);
            partials[c] = chunk_fn(c, lo, hi);
        }
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            for (;;) {
                const std::size_t c = next.fetch_add(1);
                if (c >= n_chunks) return;
                const std::size_t lo = c * chunk_size;
                const std::size_t hi = std::min(count, lo + chunk_size);
                partials[c] = chunk_fn(c, lo, hi);
            }
        };
        std::vector<std::thread> pool;
        const int n = std::min<std::size_t>(static_cast<std::size_t>(workers), n_chunks);
        pool.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    R acc = std::move(init);
    for (std::size_t c = 0; c < n_chunks; ++c) acc = reduce_fn(std::move(acc), std::move(partials[c]));
    return acc;
}

} // namespace daforge
