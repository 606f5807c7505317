#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace nmsdec {

// splitmix64; used to derive per-frame RNG seeds from (run seed, frame index)
// so that results do not depend on how frames are distributed over workers.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
}

// FNV-1a over an arbitrary byte string; used for weight/config digests.
inline std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    return fnv1a64(s.data(), s.size(), h);
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

class Stopwatch {
public:
    Stopwatch() : start_(clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(clock::now() - start_).count();
    }
    void reset() { start_ = clock::now(); }

private:
    using clock = std::chrono::steady_clock;
    clock::time_point start_;
};

// Worker count: explicit value > 0 wins, then NMSDEC_THREADS, then hardware.
inline int resolve_thread_count(int requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("NMSDEC_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs fn(begin, end) over [0, count) split into contiguous chunks. Chunk
// boundaries depend only on `count`, never on the worker count, so any
// accumulation keyed by chunk index is reproducible across thread settings.
inline void parallel_chunks(std::size_t count, int threads,
                            const std::function<void(std::size_t, std::size_t)>& fn,
                            std::size_t chunk = 0) {
    if (count == 0) return;
    threads = resolve_thread_count(threads);
    if (chunk == 0) chunk = std::max<std::size_t>(1, count / (4 * static_cast<std::size_t>(threads)) + 1);
    if (threads <= 1 || count <= chunk) {
        fn(0, count);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t b = next.fetch_add(chunk);
            if (b >= count) break;
            fn(b, std::min(b + chunk, count));
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads) - 1);
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

}  // namespace nmsdec
