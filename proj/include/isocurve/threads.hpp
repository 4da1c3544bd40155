#pragma once

#include <cstddef>
#include <functional>

namespace isocurve {

// Process-wide worker count for block-parallel loops. Work is always split
// into the same fixed blocks and per-block results land in per-block slots,
// so outputs do not depend on this setting.
void set_thread_count(unsigned n);
unsigned thread_count();

// Runs fn(block_index) for every block in [0, n_blocks). Blocks are assigned
// to workers cyclically; fn must only write to state owned by its block.
void parallel_blocks(std::size_t n_blocks, const std::function<void(std::size_t)>& fn);

}  // namespace isocurve
