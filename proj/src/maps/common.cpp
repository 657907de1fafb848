#include "wsm/maps/common.hpp"

#include "wsm/runtime/parallel.hpp"
#include "wsm/sort/sort.hpp"

namespace wsm::maps {

KeyState Group::resolve(KeyState s) {
  results.clear();
  results.reserve(ops.size());
  for (const auto& op : ops) results.push_back(apply_op(s, op));
  return s;
}

namespace {

rt::Task<> deliver_range(rt::Runtime& rt, const std::vector<Request*>* reqs, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) {
    (*reqs)[lo]->done.complete(rt);
    co_return;
  }
  std::size_t mid = lo + (hi - lo) / 2;
  co_await rt.fork(deliver_range(rt, reqs, lo, mid), deliver_range(rt, reqs, mid, hi));
}

}  // namespace

rt::Task<> deliver(rt::Runtime& rt, std::vector<Request*> reqs) {
  if (reqs.empty()) co_return;
  co_await deliver_range(rt, &reqs, 0, reqs.size());
}

rt::Task<std::vector<Group>> sort_and_combine(rt::Runtime& rt, const std::vector<Request*>& batch,
                                              std::uint64_t* comparisons) {
  std::vector<Key> keys;
  keys.reserve(batch.size());
  for (const Request* r : batch) keys.push_back(r->op.key);
  std::vector<std::size_t> order;
  sort::PesortStats st;
  co_await sort::pesort(rt, keys, order, st);
  if (comparisons) *comparisons += st.comparisons;

  std::vector<Group> groups;
  for (std::size_t i : order) {
    Request* r = batch[i];
    if (groups.empty() || groups.back().key != r->op.key) {
      groups.emplace_back();
      groups.back().key = r->op.key;
    }
    groups.back().reqs.push_back(r);
    groups.back().ops.push_back(r->op);
  }
  for (auto& g : groups) g.effect = effect_of(g.ops);
  // group boundaries and the per-group fold: a segmented scan
  if (!batch.empty()) {
    co_await rt::charge_chains(rt, std::vector<std::uint32_t>(batch.size(), 1));
    co_await rt::charge_chains(rt, std::vector<std::uint32_t>(groups.size(), ceil_log2(batch.size() + 1) + 1));
  }
  co_return groups;
}

}  // namespace wsm::maps
