#pragma once

#include <cstddef>
#include <functional>

namespace inrseg {

// Worker count used by the parallel-safe operations (chunked forward/backward,
// per-scan fitting). Defaults to std::thread::hardware_concurrency().
void set_num_threads(std::size_t n);
std::size_t num_threads();

// Runs fn(i) for i in [0, count). Work is split statically across threads;
// callers that reduce results must do so in index order afterwards.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace inrseg
