#pragma once

#include <cstddef>
#include <functional>
#include <string>

namespace flowlab::rt {

// FLOWLAB_THREADS override; defaults to 1 (sequential) when unset or
// invalid. Deterministic output does not depend on the value: work is
// split into fixed chunks and combined in index order.
std::size_t thread_count();

// FLOWLAB_OUT_ROOT; empty when unset. Relative run directories are
// resolved against it.
std::string out_root();
std::string resolve_out_dir(const std::string& dir);

// Runs fn(i) for i in [0, n). Chunking is fixed (independent of the
// thread count), so any per-chunk accumulation stays reproducible.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace flowlab::rt
