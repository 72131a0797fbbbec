#include "transposer/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace transposer {

int parallel_width() {
    int width = 0;
    if (const char* env = std::getenv("TRANSPOSER_THREADS")) {
        width = std::atoi(env);
    }
    if (width <= 0) {
        width = static_cast<int>(std::thread::hardware_concurrency());
    }
    return std::max(width, 1);
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    const int width = std::min<std::size_t>(parallel_width(), count);
    if (width <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(width - 1);
    for (int t = 0; t + 1 < width; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
}

}  // namespace transposer
