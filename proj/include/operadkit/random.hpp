#pragma once

// Seeded per-task random streams and a tiny thread pool for batch checks.
// Results depend only on (seed, task index), never on the worker count.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

namespace operadkit {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent generator for task `index` of a run seeded with `seed`.
inline std::mt19937_64 task_stream(std::uint64_t seed, std::uint64_t index, std::uint64_t salt = 0)
{
    std::uint64_t s = splitmix64(seed ^ splitmix64(index + 0x632be59bd9b4e019ULL * (salt + 1)));
    std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)};
    return std::mt19937_64(seq);
}

inline unsigned default_threads()
{
    unsigned h = std::thread::hardware_concurrency();
    return h ? h : 1;
}

/// Runs body(i) for i in [0, count) on up to `threads` workers.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body)
{
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_lock;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            try {
                for (std::size_t i = next++; i < count; i = next++)
                    body(i);
            } catch (...) {
                std::lock_guard<std::mutex> g(error_lock);
                if (!error)
                    error = std::current_exception();
                next = count;
            }
        });
    for (auto& th : pool)
        th.join();
    if (error)
        std::rethrow_exception(error);
}

} // namespace operadkit
