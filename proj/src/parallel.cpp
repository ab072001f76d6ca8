#include "sketchreg/parallel.hpp"

#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

namespace sketchreg {

namespace {
std::atomic<int> g_max_threads{0};
thread_local bool tl_inside_parallel = false;
}  // namespace

void set_max_threads(int n) { g_max_threads.store(n < 0 ? 0 : n); }

int max_threads() {
    int n = g_max_threads.load();
    if (n == 0) {
        n = static_cast<int>(std::thread::hardware_concurrency());
        if (n == 0) n = 1;
    }
    return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    const std::size_t threads =
        tl_inside_parallel ? 1 : std::min<std::size_t>(static_cast<std::size_t>(max_threads()), n);

    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::map<std::size_t, std::exception_ptr> errors;
    const std::size_t grain = std::max<std::size_t>(1, n / (threads * 8));

    auto worker = [&]() {
        tl_inside_parallel = true;
        for (;;) {
            const std::size_t begin = next.fetch_add(grain);
            if (begin >= n) break;
            const std::size_t end = std::min(begin + grain, n);
            for (std::size_t i = begin; i < end; ++i) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    errors.emplace(i, std::current_exception());
                }
            }
        }
        tl_inside_parallel = false;
    };

    std::vector<std::thread> pool;
    pool.reserve(threads - 1);
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    if (!errors.empty()) std::rethrow_exception(errors.begin()->second);
}

}  // namespace sketchreg
