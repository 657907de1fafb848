#pragma once

// Pieces shared by the batched maps: the request a caller parks on, the feed
// buffer of bunches, key groups and their fold, and result delivery.

#include <cmath>
#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "wsm/core/effect.hpp"
#include "wsm/core/types.hpp"
#include "wsm/maps/segment.hpp"
#include "wsm/runtime/runtime.hpp"
#include "wsm/seq/wsmap.hpp"
#include "wsm/tree23/tree23.hpp"

namespace wsm::maps {

// Lives in the caller's frame until `done` fires.
struct Request {
  Operation op;
  OpResult result;
  rt::Completion done;
};

// One entry of the extracted linearization.
struct LinRecord {
  Operation op;
  OpResult result;
  std::uint64_t batch = 0;  // cut batch (preloads are batch 0)
  std::uint64_t step = 0;   // simulator step at which the result was fixed
};

// All operations of one cut batch on a single key, in batch order.
struct Group {
  Key key = 0;
  std::vector<Request*> reqs;
  std::vector<Operation> ops;
  std::vector<OpResult> results;
  Effect effect;

  // Runs the ops against `s`, filling results; returns the final state.
  KeyState resolve(KeyState s);
};

inline std::uint64_t capacity_prefix(std::size_t k) {
  // total capacity of S[0..k-1], saturating
  std::uint64_t total = 0;
  for (std::size_t j = 0; j < k; ++j) {
    std::uint64_t c = seq::segment_capacity(j);
    if (c == UINT64_MAX || total > UINT64_MAX - c) return UINT64_MAX;
    total += c;
  }
  return total;
}

inline std::uint32_t ceil_log2(std::uint64_t x) {
  std::uint32_t r = 0;
  while ((std::uint64_t{1} << r) < x && r < 63) ++r;
  return r;
}

// Wakes every request's caller from the leaves of a fork tree.
rt::Task<> deliver(rt::Runtime& rt, std::vector<Request*> reqs);

// Sorts a cut batch by key (stable) on the simulator, then folds runs of equal
// keys into groups.
rt::Task<std::vector<Group>> sort_and_combine(rt::Runtime& rt, const std::vector<Request*>& batch,
                                              std::uint64_t* comparisons);

// Queue of bunches, each exactly `bunch_size` items except possibly the last.
template <class T>
class FeedBuffer {
 public:
  explicit FeedBuffer(std::size_t bunch_size) : cap_(bunch_size) {
    if (cap_ == 0) throw UsageError("bunch size must be positive");
  }

  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }
  std::size_t bunches() const noexcept { return q_.size(); }
  std::size_t last_size() const noexcept { return q_.empty() ? 0 : q_.back().size(); }
  std::size_t bunch_size() const noexcept { return cap_; }

  // Cuts the input into small batches: the first tops up the last bunch, the
  // rest become new bunches. Returns the small-batch sizes.
  std::vector<std::size_t> ingest(std::vector<T> input, Phases& ph) {
    std::vector<std::size_t> sizes;
    const std::size_t b = input.size();
    if (b == 0) return sizes;
    std::size_t pos = 0;
    std::size_t q = last_size();
    std::size_t first = q_.empty() ? std::min(b, cap_) : std::min(b, cap_ - q);
    if (first > 0) {
      if (q_.empty()) q_.emplace_back();
      q_.back().add(std::vector<T>(input.begin(), input.begin() + static_cast<std::ptrdiff_t>(first)));
      sizes.push_back(first);
      pos = first;
    }
    while (pos < b) {
      std::size_t len = std::min(cap_, b - pos);
      q_.emplace_back();
      q_.back().add(std::vector<T>(input.begin() + static_cast<std::ptrdiff_t>(pos),
                                   input.begin() + static_cast<std::ptrdiff_t>(pos + len)));
      sizes.push_back(len);
      pos += len;
    }
    size_ += b;
    ph.add_uniform(sizes.size(), ceil_log2(b + 1) + 1);
    return sizes;
  }

  // Removes max(1, min(count, bunches())) bunches and concatenates them.
  std::vector<T> cut(std::size_t count, Phases& ph) {
    if (q_.empty()) throw UsageError("cut from an empty feed buffer");
    count = std::max<std::size_t>(1, std::min(count, q_.size()));
    std::vector<std::vector<T>> parts;
    std::size_t total = 0;
    for (std::size_t i = 0; i < count; ++i) {
      parts.push_back(q_.front().to_batch());
      total += parts.back().size();
      q_.pop_front();
    }
    size_ -= total;
    // flatten every bunch, then a balanced concatenation tree
    ph.add_uniform(total, 1);
    for (std::size_t width = count; width > 1; width = (width + 1) / 2)
      ph.add_uniform(width / 2, ceil_log2(total + 1) + 1);
    std::vector<T> out;
    out.reserve(total);
    for (auto& part : parts)
      for (auto& x : part) out.push_back(std::move(x));
    return out;
  }

 private:
  std::size_t cap_;
  std::size_t size_ = 0;
  std::deque<tree23::Bunch<T>> q_;
};

struct MapStats {
  std::uint64_t batches = 0;
  std::uint64_t interface_runs = 0;
  std::uint64_t sort_comparisons = 0;
  std::vector<std::size_t> cut_sizes;
};

}  // namespace wsm::maps
