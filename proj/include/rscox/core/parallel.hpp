#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <thread>
#include <utility>
#include <vector>

namespace rscox {

namespace detail {
inline int& workerSetting()
{
    static int workers = 0;
    return workers;
}

inline bool& insideParallel()
{
    thread_local bool inside = false;
    return inside;
}
}  // namespace detail

/// Number of worker threads used by library loops. 0 (the default) means
/// RSCOX_WORKERS from the environment, else hardware concurrency.
inline void setWorkerCount(int n) { detail::workerSetting() = std::max(0, n); }

inline int workerCount()
{
    if (detail::workerSetting() > 0) return detail::workerSetting();
    if (const char* env = std::getenv("RSCOX_WORKERS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls fn(i) for i in [0, n) over contiguous blocks on up to workerCount()
/// threads. fn must only write to slots owned by index i. If several
/// indices throw, the exception of the lowest index is rethrown. Nested calls
/// run serially on the calling worker.
template <typename Fn>
void parallelFor(std::size_t n, Fn&& fn)
{
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(workerCount()), n);
    if (workers <= 1 || detail::insideParallel()) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = n * w / workers;
        const std::size_t end = n * (w + 1) / workers;
        threads.emplace_back([&, w, begin, end] {
            detail::insideParallel() = true;
            for (std::size_t i = begin; i < end; ++i) {
                try {
                    fn(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : threads) t.join();
    for (std::size_t w = 0; w < workers; ++w) {
        if (errors[w]) std::rethrow_exception(errors[w]);
    }
}

/// Pairwise tree reduction in index order; the result depends only on the
/// values, never on how they were computed.
template <typename T>
T pairwiseSum(const std::vector<T>& items, std::size_t begin, std::size_t end)
{
    if (end - begin == 1) return items[begin];
    const std::size_t mid = begin + (end - begin) / 2;
    T left = pairwiseSum(items, begin, mid);
    left += pairwiseSum(items, mid, end);
    return left;
}

template <typename T>
T pairwiseSum(const std::vector<T>& items, T zero)
{
    if (items.empty()) return zero;
    return pairwiseSum(items, 0, items.size());
}

}  // namespace rscox
