#pragma once

// Per-processor sub-buffers under a static binary tree of flags. A submitter
// appends to its sub-buffer and climbs the tree with test-and-set, giving up
// at the first flag that is already set; whoever reaches the root activates
// the consumer. A flush swaps in a fresh generation in one step and then
// gathers the old one with a fork/join recursion.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "wsm/core/types.hpp"
#include "wsm/runtime/parallel.hpp"
#include "wsm/runtime/runtime.hpp"

namespace wsm::pbuf {

struct BufferStats {
  std::uint64_t submits = 0;
  std::uint64_t activations = 0;  // root reached
  std::uint64_t flushes = 0;
  std::size_t last_walk = 0;      // flags tested by the latest submit
  std::vector<std::uint64_t> flush_spans;
  std::vector<std::size_t> flush_sizes;
};

template <class Item>
class ParallelBuffer {
 public:
  using Activate = std::function<rt::Task<>()>;

  ParallelBuffer(rt::Runtime& rt, std::size_t p, Activate on_root)
      : rt_(rt), p_(p), on_root_(std::move(on_root)) {
    if (p == 0) throw UsageError("parallel buffer needs at least one sub-buffer");
    leaves_ = 1;
    while (leaves_ < p_) leaves_ *= 2;
    gen_ = fresh();
  }

  std::size_t processors() const noexcept { return p_; }
  std::size_t size() const noexcept { return gen_->count; }
  bool empty() const noexcept { return gen_->count == 0; }
  const BufferStats& stats() const noexcept { return stats_; }

  // Runs on the submitting thread, which should already be tagged as a buffer
  // thread. One node appends and tests the first flag; each further flag
  // costs one node.
  rt::Task<> submit(Item item, std::size_t proc) {
    if (proc >= p_) throw UsageError("submit: processor id out of range");
    std::shared_ptr<Generation> g = gen_;
    g->subs[proc].push_back(std::move(item));
    ++g->count;
    ++stats_.submits;
    std::size_t walked = 0;
    bool reached_root = true;
    for (std::size_t node = (leaves_ + proc) / 2; node >= 1; node /= 2) {
      if (walked > 0) co_await rt_.tick();
      ++walked;
      if (g->flags[node]) {
        reached_root = false;
        break;
      }
      g->flags[node] = 1;
    }
    stats_.last_walk = walked;
    if (reached_root) {
      ++stats_.activations;
      auto lane = rt_.current()->lane;
      co_await rt_.spawn(on_root_(), rt::Owner::ds, lane);
    }
  }

  // Consumer side. Items come out sub-buffer by sub-buffer, left to right,
  // each in arrival order.
  rt::Task<> flush(std::vector<Item>& out) {
    rt::Thread* self = rt_.current();
    const rt::Owner owner = self->owner;
    const rt::Lane lane = self->lane;
    std::shared_ptr<Generation> old = gen_;
    gen_ = fresh();
    ++stats_.flushes;
    co_await rt_.switch_to(rt::Owner::buffer, lane);
    const std::uint64_t start = rt_.current_weight().buffer;

    const std::size_t pairs = (leaves_ + 1) / 2;
    std::vector<std::size_t> sums(2 * pairs, 0);
    co_await count_up(*old, sums, 1, 0, pairs);
    out.assign(old->count, Item{});
    co_await scatter(*old, sums, out, 1, 0, pairs, 0);

    stats_.flush_spans.push_back(rt_.current_weight().buffer + 1 - start);
    stats_.flush_sizes.push_back(out.size());
    co_await rt_.switch_to(owner, lane);
  }

 private:
  struct Generation {
    std::vector<std::vector<Item>> subs;
    std::vector<std::uint8_t> flags;  // heap order, index 1 is the root
    std::size_t count = 0;
  };

  std::shared_ptr<Generation> fresh() const {
    auto g = std::make_shared<Generation>();
    g->subs.resize(leaves_);
    g->flags.assign(leaves_, 0);
    return g;
  }

  std::size_t pair_size(const Generation& g, std::size_t i) const {
    std::size_t s = g.subs[2 * i].size();
    if (2 * i + 1 < leaves_) s += g.subs[2 * i + 1].size();
    return s;
  }

  // sums[node] = items under node; node covers pairs [lo, hi)
  rt::Task<> count_up(const Generation& g, std::vector<std::size_t>& sums, std::size_t node, std::size_t lo,
                      std::size_t hi) {
    if (hi - lo == 1) {
      sums[node] = pair_size(g, lo);
      co_return;
    }
    std::size_t mid = lo + (hi - lo) / 2;
    co_await rt_.fork(count_up(g, sums, 2 * node, lo, mid), count_up(g, sums, 2 * node + 1, mid, hi));
    sums[node] = sums[2 * node] + sums[2 * node + 1];
  }

  rt::Task<> scatter(Generation& g, const std::vector<std::size_t>& sums, std::vector<Item>& out, std::size_t node,
                     std::size_t lo, std::size_t hi, std::size_t offset) {
    if (hi - lo == 1) {
      co_await copy_pair(g, out, lo, offset);
      co_return;
    }
    std::size_t mid = lo + (hi - lo) / 2;
    co_await rt_.fork(scatter(g, sums, out, 2 * node, lo, mid, offset),
                      scatter(g, sums, out, 2 * node + 1, mid, hi, offset + sums[2 * node]));
  }

  // The sub-buffer conversion: a balanced fork over its items.
  rt::Task<> copy_pair(Generation& g, std::vector<Item>& out, std::size_t pair, std::size_t offset) {
    std::vector<Item>& a = g.subs[2 * pair];
    std::vector<Item>* b = 2 * pair + 1 < leaves_ ? &g.subs[2 * pair + 1] : nullptr;
    std::size_t n = a.size() + (b ? b->size() : 0);
    if (n == 0) co_return;
    co_await copy_range(a, b, out, offset, 0, n);
  }

  rt::Task<> copy_range(std::vector<Item>& a, std::vector<Item>* b, std::vector<Item>& out, std::size_t offset,
                        std::size_t lo, std::size_t hi) {
    if (hi - lo == 1) {
      out[offset + lo] = lo < a.size() ? std::move(a[lo]) : std::move((*b)[lo - a.size()]);
      co_return;
    }
    std::size_t mid = lo + (hi - lo) / 2;
    co_await rt_.fork(copy_range(a, b, out, offset, lo, mid), copy_range(a, b, out, offset, mid, hi));
  }

  rt::Runtime& rt_;
  std::size_t p_;
  std::size_t leaves_ = 1;
  Activate on_root_;
  std::shared_ptr<Generation> gen_;
  BufferStats stats_;
};

}  // namespace wsm::pbuf
