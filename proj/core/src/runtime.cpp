#include "flowlab/runtime.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <thread>
#include <vector>

namespace flowlab::rt {

std::size_t thread_count() {
    const char* env = std::getenv("FLOWLAB_THREADS");
    if (!env) return 1;
    const long v = std::atol(env);
    if (v <= 0) return 1;
    return static_cast<std::size_t>(v);
}

std::string out_root() {
    const char* env = std::getenv("FLOWLAB_OUT_ROOT");
    return env ? env : "";
}

std::string resolve_out_dir(const std::string& dir) {
    const std::string root = out_root();
    if (root.empty() || dir.empty()) return dir;
    std::filesystem::path p(dir);
    if (p.is_absolute()) return dir;
    return (std::filesystem::path(root) / p).string();
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min(thread_count(), n == 0 ? std::size_t{1} : n);
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
}

}  // namespace flowlab::rt
