#pragma once

#include <vector>

#include "wsm/runtime/parallel.hpp"
#include "wsm/tree23/tree23.hpp"

namespace wsm::tree23 {

// Applies a sorted batch, then charges a fork tree whose i-th leaf is the
// path of the i-th op.
template <class P>
rt::Task<std::vector<TreeResult>> run_batch(rt::Runtime& rt, BatchTree<P>& tree, std::vector<TreeOp<P>> ops) {
  std::vector<TreeResult> res = tree.batch_op(ops);
  std::vector<std::uint32_t> costs;
  costs.reserve(res.size());
  for (const auto& r : res) costs.push_back(r.cost);
  co_await rt::charge_chains(rt, std::move(costs));
  co_return res;
}

template <class P>
rt::Task<std::vector<Item<P>>> run_reverse_index(rt::Runtime& rt, const BatchTree<P>& tree, std::vector<Handle> hs) {
  std::vector<Item<P>> out = tree.reverse_index(hs);
  std::vector<std::uint32_t> costs(hs.size(), static_cast<std::uint32_t>(tree.height() + 1));
  co_await rt::charge_chains(rt, std::move(costs));
  co_return out;
}

// Flattening a bunch of b items: a balanced fork tree with one node per item.
rt::Task<> charge_flatten(rt::Runtime& rt, std::size_t items);

}  // namespace wsm::tree23
