#pragma once

// One segment of a batched working-set map: a key-ordered 2-3 tree and a
// recency-ordered 2-3 tree whose leaves point at each other. Recency is kept
// as integer stamps: smaller is more recent; the front counter runs down and
// the back counter runs up.
//
// Every method runs sequentially and appends the per-op path lengths of each
// batch phase to a Phases list, which the caller charges on the simulator.

#include <cstdint>
#include <string>
#include <vector>

#include "wsm/core/types.hpp"
#include "wsm/runtime/runtime.hpp"
#include "wsm/tree23/tree23.hpp"

namespace wsm::maps {

using tree23::Handle;

// Sequential phases; each phase is a parallel fork over per-op chains.
struct Phases {
  std::vector<std::vector<std::uint32_t>> list;

  std::vector<std::uint32_t>& next() { return list.emplace_back(); }
  void add_uniform(std::size_t n, std::uint32_t len) {
    if (n > 0) list.emplace_back(n, len);
  }
  void append(Phases&& o) {
    for (auto& ph : o.list) list.push_back(std::move(ph));
  }
  bool empty() const noexcept { return list.empty(); }
};

rt::Task<> charge(rt::Runtime& rt, Phases phases);

struct Entry {
  Key key = 0;
  Value value = 0;
};

class SegmentStore {
 public:
  std::size_t size() const noexcept { return keys_.size(); }
  bool empty() const noexcept { return keys_.empty(); }
  std::size_t height() const noexcept { return std::max(keys_.height(), recency_.height()); }

  struct Hit {
    bool found = false;
    Handle handle;
    Value value = 0;
  };

  // Batch search; `sorted` must be strictly increasing.
  std::vector<Hit> search(const std::vector<Key>& sorted, Phases& ph);

  // Removes found items (handles from search(), in key order). Returns them
  // most recent first.
  std::vector<Entry> remove(const std::vector<Handle>& found, Phases& ph);

  // `items` most recent first.
  void push_front(const std::vector<Entry>& items, Phases& ph);
  void push_back(const std::vector<Entry>& items, Phases& ph);

  // Removes up to `count` most (front) or least (back) recent items; the
  // result is most recent first.
  std::vector<Entry> pop_front(std::size_t count, Phases& ph);
  std::vector<Entry> pop_back(std::size_t count, Phases& ph);

  void set_value(Handle h, Value v) { keys_.payload(h).value = v; }
  bool contains(Key k) const { return keys_.find(k).found; }
  std::vector<Key> keys_by_recency() const;
  std::string audit() const;

 private:
  struct KeySide {
    Value value = 0;
    Handle rec;
  };

  std::vector<Entry> pop_extreme(std::size_t count, bool front, Phases& ph);
  void insert_stamped(const std::vector<Entry>& items, std::int64_t first_stamp, Phases& ph);

  tree23::BatchTree<KeySide> keys_;
  tree23::BatchTree<Handle> recency_;  // stamp -> key-map leaf
  std::int64_t front_ = 0;
  std::int64_t back_ = 1;
};

}  // namespace wsm::maps
