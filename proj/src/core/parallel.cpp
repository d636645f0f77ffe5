#include "core/parallel.hpp"

#include <atomic>
#include <thread>
#include <vector>

namespace pairloc {

namespace {
std::atomic<int> g_threads{0};

int resolve_threads() {
    int n = g_threads.load(std::memory_order_relaxed);
    if (n > 0) return n;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : int(hw);
}
}  // namespace

void set_thread_count(int n) {
    g_threads.store(n < 0 ? 0 : n, std::memory_order_relaxed);
}

int thread_count() { return resolve_threads(); }

void parallel_for(int64_t n, const std::function<void(int64_t)>& fn) {
    if (n <= 0) return;
    const int workers = resolve_threads();
    if (workers <= 1 || n == 1) {
        for (int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int64_t> next{0};
    auto run = [&] {
        for (;;) {
            int64_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    const int spawn = int(std::min<int64_t>(workers, n)) - 1;
    pool.reserve(std::size_t(spawn));
    for (int t = 0; t < spawn; ++t) pool.emplace_back(run);
    run();
    for (auto& th : pool) th.join();
}

}  // namespace pairloc
