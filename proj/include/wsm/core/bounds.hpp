#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "wsm/core/types.hpp"

namespace wsm {

struct AnnotatedOp {
  Operation op;
  OpResult result;
  std::uint64_t rank = 0;
  std::size_t size_before = 0;
  bool success = false;
};

using Linearization = std::vector<AnnotatedOp>;

// Replays ops from an empty map, filling results, sizes and access ranks.
Linearization annotate(const std::vector<Operation>& ops);

// Access rank of history[index], computed from scratch.
std::uint64_t access_rank(const std::vector<Operation>& history, std::size_t index);

struct BoundReport {
  double W_L = 0;
  double IW_L = 0;
  std::uint64_t e_L = 0;
  std::uint64_t N = 0;
  int log_base = 2;
};

nlohmann::json to_json(const BoundReport& b);

// sum of (log2 rank + 1)
double working_set_sum(const Linearization& L);

// e_L counts operations that ran while the map held fewer than p items.
BoundReport working_set_bound(const std::vector<Operation>& L, std::size_t p);

// Bound of searching for each item and inserting it when absent, in order.
double insert_working_set_bound(const std::vector<Key>& items);

// Sequential reference map.
std::vector<OpResult> oracle_replay(const std::vector<Operation>& L);

// True iff L keeps batch order and, inside a batch, the order of operations on
// the same key. Throws UsageError if L and the batches disagree on the op set.
bool validate_batch_preserving(const std::vector<Batch>& batches, const std::vector<Operation>& L);

}  // namespace wsm
