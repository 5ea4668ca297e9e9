#include "aesthete/parallel.hpp"

#include <atomic>

namespace aesthete {

namespace {
std::atomic<int> g_threads{1};
}

void set_thread_count(int threads) noexcept { g_threads.store(std::max(1, threads)); }

int thread_count() noexcept { return g_threads.load(); }

}  // namespace aesthete
