#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "wsm/core/types.hpp"
#include "wsm/runtime/runtime.hpp"

namespace wsm::sort {

// Natural-log entropy of a frequency profile. Zero counts are rejected.
double entropy(const std::vector<std::uint64_t>& counts);
double entropy_of(const std::vector<Key>& items);

struct SortResult {
  std::vector<std::size_t> positions;  // input positions in sorted order, ties in input order
  std::uint64_t comparisons = 0;
};

// Sequential sort through a working-set dictionary, then a merge of its
// segments from smallest to largest.
SortResult esort(const std::vector<Key>& items);

struct PesortOptions {
  bool random_pivot = false;
  std::uint64_t seed = 1;
};

struct PesortStats {
  std::uint64_t comparisons = 0;
  std::size_t max_depth = 0;
  std::size_t pivot_rounds = 0;
  std::size_t pivot_retries = 0;
};

// Parallel quicksort with a median-of-block-medians pivot, run on the simulator.
// Writes sorted input positions to `out`.
rt::Task<> pesort(rt::Runtime& rt, const std::vector<Key>& items, std::vector<std::size_t>& out,
                  PesortStats& stats, PesortOptions opts = {});

// Pivot for items[idx[lo..hi)]: lower median of the lower medians of blocks
// of ceil(log2 k) consecutive items.
rt::Task<Key> ppivot(rt::Runtime& rt, const std::vector<Key>& items, const std::vector<std::size_t>& idx,
                     std::size_t lo, std::size_t hi, PesortStats& stats);

// Block size used by ppivot for a list of k items.
std::size_t pivot_block_size(std::size_t k);

}  // namespace wsm::sort
