#include "isocurve/threads.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace isocurve {
namespace {

std::atomic<unsigned>& worker_count() {
    static std::atomic<unsigned> count{
        std::thread::hardware_concurrency() ? std::thread::hardware_concurrency() : 1u};
    return count;
}

}  // namespace

void set_thread_count(unsigned n) { worker_count().store(n ? n : 1u); }

unsigned thread_count() { return worker_count().load(); }

void parallel_blocks(std::size_t n_blocks, const std::function<void(std::size_t)>& fn) {
    const unsigned workers =
        static_cast<unsigned>(std::min<std::size_t>(thread_count(), n_blocks));
    if (workers <= 1) {
        for (std::size_t b = 0; b < n_blocks; ++b) fn(b);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (std::size_t b = w; b < n_blocks; b += workers) {
                if (failed.load(std::memory_order_relaxed)) return;
                try {
                    fn(b);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    failed.store(true, std::memory_order_relaxed);
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace isocurve
