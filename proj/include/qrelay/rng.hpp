#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <random>
#include <thread>
#include <vector>

namespace qrelay::rng {

// splitmix64 step; used to derive independent substream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d4a2fa9d6ec531ULL;
    return z ^ (z >> 31);
}

// Seed for the RNG of one (stream, block) pair. Streams are identified by a
// tag (per physical line / per analyzer setting); blocks are fixed-size cycle
// ranges, so the generated stream is identical for any chunked execution.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t stream_tag,
                                    std::uint64_t block_index) {
    std::uint64_t s = master;
    (void)splitmix64(s);
    s ^= splitmix64(s) + 0x632be59bd9b4e019ULL * (stream_tag + 1);
    (void)splitmix64(s);
    s ^= splitmix64(s) + 0x9e3779b97f4a7c15ULL * (block_index + 1);
    return splitmix64(s);
}

inline std::mt19937_64 make_engine(std::uint64_t master, std::uint64_t stream_tag,
                                   std::uint64_t block_index) {
    return std::mt19937_64{substream_seed(master, stream_tag, block_index)};
}

// Cycles per RNG block. Fixed so that results do not depend on how work is
// chunked across threads.
inline constexpr std::uint64_t kCyclesPerBlock = 1024;

// Runs fn(block_index) for block_index in [0, n_blocks) on `threads` workers.
// fn must only write to per-block storage.
inline void parallel_blocks(std::uint64_t n_blocks, int threads,
                            const std::function<void(std::uint64_t)>& fn) {
    if (threads <= 1 || n_blocks <= 1) {
        for (std::uint64_t b = 0; b < n_blocks; ++b) fn(b);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<std::uint64_t> next{0};
    const int n = std::min<std::uint64_t>(threads, n_blocks);
    pool.reserve(n);
    for (int i = 0; i < n; ++i) {
        pool.emplace_back([&] {
            for (;;) {
                const std::uint64_t b = next.fetch_add(1);
                if (b >= n_blocks) return;
                fn(b);
            }
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace qrelay::rng
