#include "matforge/core/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace matforge {

unsigned default_thread_count() noexcept
{
    if (const char* env = std::getenv("MATFORGE_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n > 0) {
            return static_cast<unsigned>(n);
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body)
{
    if (count == 0) {
        return;
    }
    if (threads == 0) {
        threads = default_thread_count();
    }
    const std::size_t workers = std::min<std::size_t>(threads, count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }

    // Small blocks keep load balanced when per-index cost varies (e.g. image
    // rows that miss the scene entirely).
    const std::size_t block = std::max<std::size_t>(1, count / (workers * 8));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto run = [&] {
        for (;;) {
            const std::size_t begin = next.fetch_add(block);
            if (begin >= count) {
                return;
            }
            const std::size_t end = std::min(count, begin + block);
            try {
                for (std::size_t i = begin; i < end; ++i) {
                    body(i);
                }
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                next.store(count);
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) {
        pool.emplace_back(run);
    }
    run();
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

} // namespace matforge
