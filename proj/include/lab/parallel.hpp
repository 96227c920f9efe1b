#pragma once
#include <atomic>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace lab {

inline int thread_count() {
    if (const char* s = std::getenv("LAB_THREADS")) {
        int v = std::atoi(s);
        if (v >= 1) return v;
    }
    unsigned hc = std::thread::hardware_concurrency();
    if (hc == 0) return 1;
    return static_cast<int>(hc > 8 ? 8 : hc);
}

// Deterministic parallel reduction: the index range is cut into fixed-size
// blocks, workers compute per-block partials, and the partials are folded
// serially in block order. Results are bit-identical for any thread count.
template <class T, class BlockFn, class Combine>
T block_reduce(size_t n, T init, BlockFn&& block_fn, Combine&& combine, int threads = 0) {
    constexpr size_t kBlock = 16;
    if (n == 0) return init;
    size_t nblocks = (n + kBlock - 1) / kBlock;
    std::vector<T> partials(nblocks, init);

    int nt = threads > 0 ? threads : thread_count();
    if (nt > static_cast<int>(nblocks)) nt = static_cast<int>(nblocks);

    auto run_block = [&](size_t b) {
        size_t lo = b * kBlock;
        size_t hi = lo + kBlock < n ? lo + kBlock : n;
        partials[b] = block_fn(lo, hi, partials[b]);
    };

    if (nt <= 1) {
        for (size_t b = 0; b < nblocks; ++b) run_block(b);
    } else {
        std::atomic<size_t> next{0};
        std::exception_ptr err;
        std::atomic<bool> failed{false};
        auto worker = [&] {
            try {
                for (;;) {
                    size_t b = next.fetch_add(1);
                    if (b >= nblocks || failed.load()) break;
                    run_block(b);
                }
            } catch (...) {
                if (!failed.exchange(true)) err = std::current_exception();
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(nt);
        for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
        if (failed.load()) std::rethrow_exception(err);
    }

    T acc = init;
    for (size_t b = 0; b < nblocks; ++b) acc = combine(acc, partials[b]);
    return acc;
}

} // namespace lab
