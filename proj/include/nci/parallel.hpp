#pragma once

#include <cstddef>
#include <functional>

namespace nci {

// Thread count used by parallel_for. 0 means hardware concurrency; the
// NCI_THREADS environment variable overrides the default at startup.
void set_thread_count(int threads);
int thread_count();

// Runs fn(i) for i in [0, n). Each index must write only to its own output
// slot; iteration order is unspecified but results are deterministic.
// Exceptions thrown by fn are captured and rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace nci
