#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hyperperc {

/// Evaluates fn(i) for i in [0, count) on `workers` threads and returns the results in
/// index order, so any later reduction is independent of the worker count.
template <class R, class F>
std::vector<R> parallel_map(std::uint64_t count, unsigned workers, F&& fn)
{
    std::vector<R> out(count);
    workers = std::max(1u, workers);
    if (workers == 1 || count < 2) {
        for (std::uint64_t i = 0; i < count; ++i)
            out[i] = fn(i);
        return out;
    }
    constexpr std::uint64_t kChunk = 1;
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    auto work = [&] {
        try {
            while (true) {
                const std::uint64_t begin = next.fetch_add(kChunk);
                if (begin >= count)
                    return;
                const std::uint64_t end = std::min(count, begin + kChunk);
                for (std::uint64_t i = begin; i < end; ++i)
                    out[i] = fn(i);
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mu);
            if (!error)
                error = std::current_exception();
            next.store(count);
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back(work);
    for (std::thread& t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
    return out;
}

/// Splits [0, count) into fixed chunks of `chunk` indices, independent of the worker
/// count, evaluates fn(begin, end) per chunk and returns the chunk results in order.
template <class R, class F>
std::vector<R> parallel_chunks(std::uint64_t count, std::uint64_t chunk, unsigned workers, F&& fn)
{
    if (chunk == 0)
        chunk = 1;
    const std::uint64_t chunks = (count + chunk - 1) / chunk;
    return parallel_map<R>(chunks, workers, [&](std::uint64_t c) {
        return fn(c * chunk, std::min(count, (c + 1) * chunk));
    });
}

} // namespace hyperperc
