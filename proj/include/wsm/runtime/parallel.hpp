#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "wsm/runtime/runtime.hpp"

namespace wsm::rt {

using IndexBody = std::function<Task<>(std::size_t)>;

// Binary fork tree over [0, n); leaf i awaits body(i) inline.
Task<> parallel_for(Runtime& rt, std::size_t n, IndexBody body);

// Charges a fork tree whose leaf i is a serial chain of max(lens[i], 1) nodes.
Task<> charge_chains(Runtime& rt, std::vector<std::uint32_t> lens);

// Appends len nodes to the current thread.
Task<> charge_chain(Runtime& rt, std::uint64_t len);

}  // namespace wsm::rt
