#pragma once

#include <cstddef>
#include <functional>

namespace sarvb {

/// Number of workers to use for a requested thread count; 0 means the
/// hardware concurrency (at least 1).
unsigned resolve_threads(int requested) noexcept;

/// Runs body(i) for i in [0, n) on up to `threads` workers.
///
/// Work items are claimed dynamically, so bodies must only write to
/// index-owned output slots. If any body throws, the exception from the
/// lowest failing index is rethrown after all workers finish, which keeps
/// error reporting independent of scheduling.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

}  // namespace sarvb
