#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace aoi {

/// Run fn(i) for i in [0, n) on up to `threads` workers. Indices are handed
/// out dynamically; the first exception thrown is rethrown after all workers join.
template <class Fn>
void parallel_for(int n, int threads, Fn&& fn) {
    const int workers = std::clamp(threads, 1, std::max(n, 1));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        for (int i; (i = next.fetch_add(1)) < n;) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next = n;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

/// Worker count used when a caller asks for 0 threads.
inline int default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

}  // namespace aoi
