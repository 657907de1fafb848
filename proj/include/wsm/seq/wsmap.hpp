#pragma once

// Sequential working-set map: segments S[0..l] of capacity 2^(2^k), each a
// key-ordered map plus a most-recent-first list.

#include <cstdint>
#include <list>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <type_traits>
#include <string>
#include <vector>

#include "wsm/core/types.hpp"

namespace wsm::seq {

inline std::uint64_t segment_capacity(std::size_t k) {
  if (k >= 6) return UINT64_MAX;
  return std::uint64_t{1} << (std::uint64_t{1} << k);
}

template <class V>
class WorkingSetMap {
 public:
  struct Found {
    bool found = false;
    std::size_t segment = 0;  // where the key was before the access
    V* value = nullptr;
  };

  WorkingSetMap() : counter_(std::make_unique<std::uint64_t>(0)) {}

  std::size_t size() const noexcept { return n_; }
  std::size_t segment_count() const noexcept { return segs_.size(); }
  std::size_t segment_size(std::size_t k) const { return segs_.at(k).keys.size(); }
  std::uint64_t comparisons() const noexcept { return *counter_; }
  std::uint64_t links() const noexcept { return links_; }
  std::uint64_t steps() const noexcept { return *counter_ + links_; }

  // Successful search: the key moves to the front of the previous segment
  // (or of S[0]), swapping places with that segment's least recent item.
  Found search(Key x) {
    Found f = locate(x);
    if (f.found) promote(x, f);
    return f;
  }

  Found update(Key x, V v) {
    Found f = search(x);
    if (f.found) *f.value = std::move(v);
    return f;
  }

  // Absent keys go to the back of the last segment; present keys are updated.
  Found insert(Key x, V v) {
    Found f = search(x);
    if (f.found) {
      *f.value = std::move(v);
      return f;
    }
    insert_absent(x, std::move(v));
    return f;
  }

  // Precondition: x is absent. Skips the search that insert() performs.
  void insert_new(Key x, V v) { insert_absent(x, std::move(v)); }

  // The most recent item of each later segment shifts back to refill.
  Found erase(Key x) {
    Found f = locate(x);
    if (f.found) erase_at(x, f);
    return f;
  }

  // 1-based position in segment order, then recency order within a segment.
  std::size_t rank_of(Key x) const {
    std::size_t before = 0;
    for (const auto& s : segs_) {
      std::size_t pos = 1;
      for (Key y : s.recency) {
        if (y == x) return before + pos;
        ++pos;
      }
      before += s.recency.size();
    }
    throw UsageError("rank_of: key not present");
  }

  bool contains(Key x) const {
    for (const auto& s : segs_)
      if (s.keys.count(x)) return true;
    return false;
  }

  std::vector<Key> segment_keys_by_recency(std::size_t k) const {
    const auto& r = segs_.at(k).recency;
    return {r.begin(), r.end()};
  }

  // Calls f(key, value) over segment k in key order.
  template <class F>
  void for_each_sorted(std::size_t k, F&& f) const {
    for (const auto& [key, node] : segs_.at(k).keys) f(key, node.value);
  }

  std::string dump() const {
    std::ostringstream os;
    for (std::size_t k = 0; k < segs_.size(); ++k) {
      os << "S[" << k << "]:";
      for (Key y : segs_[k].recency) os << ' ' << y;
      os << '\n';
    }
    return os.str();
  }

  // Empty string when all structural invariants hold.
  std::string audit() const {
    std::size_t total = 0;
    for (std::size_t k = 0; k < segs_.size(); ++k) {
      const auto& s = segs_[k];
      if (s.keys.size() != s.recency.size()) return "key/recency size mismatch in S[" + std::to_string(k) + "]";
      if (s.keys.size() > segment_capacity(k)) return "over capacity S[" + std::to_string(k) + "]";
      if (k + 1 < segs_.size() && s.keys.size() != segment_capacity(k))
        return "S[" + std::to_string(k) + "] not full";
      if (s.keys.empty()) return "empty segment S[" + std::to_string(k) + "]";
      total += s.keys.size();
    }
    if (total != n_) return "size mismatch";
    return {};
  }

  OpResult apply(const Operation& op) {
    Found f;
    OpResult r;
    auto note = [&](const Found& g, const V* before) {
      r.found = g.found;
      if constexpr (std::is_convertible_v<V, Value>)
        if (before) r.value = static_cast<Value>(*before);
    };
    switch (op.kind) {
      case OpKind::search:
        f = search(op.key);
        note(f, f.value);
        break;
      case OpKind::update: {
        f = search(op.key);
        note(f, f.value);
        if (f.found) *f.value = static_cast<V>(op.value());
        break;
      }
      case OpKind::insert: {
        f = search(op.key);
        note(f, f.value);
        if (f.found) *f.value = static_cast<V>(op.value());
        else insert_absent(op.key, static_cast<V>(op.value()));
        break;
      }
      case OpKind::erase: {
        Found g = locate(op.key);
        note(g, g.value);
        if (g.found) erase_at(op.key, g);
        break;
      }
    }
    return r;
  }

 private:
  void erase_at(Key x, Found& f) {
    Segment& s = segs_[f.segment];
    unlink(s, x);
    --n_;
    for (std::size_t i = f.segment; i + 1 < segs_.size(); ++i) {
      Segment& next = segs_[i + 1];
      if (next.recency.empty()) break;
      Key y = next.recency.front();
      V v = take(next, y);
      push_back(segs_[i], y, std::move(v));
    }
    while (!segs_.empty() && segs_.back().keys.empty()) segs_.pop_back();
    f.value = nullptr;
  }

  void insert_absent(Key x, V v) {
    if (segs_.empty() || segs_.back().keys.size() >= segment_capacity(segs_.size() - 1))
      segs_.emplace_back(counter_.get());
    push_back(segs_.back(), x, std::move(v));
    ++n_;
  }

  struct Node {
    V value;
    typename std::list<Key>::iterator pos;
  };
  struct Segment {
    explicit Segment(std::uint64_t* counter) : keys(CountingLess{counter}) {}
    std::map<Key, Node, CountingLess> keys;
    std::list<Key> recency;  // most recent first
  };

  Found locate(Key x) {
    for (std::size_t k = 0; k < segs_.size(); ++k) {
      auto it = segs_[k].keys.find(x);
      if (it != segs_[k].keys.end()) return Found{true, k, &it->second.value};
    }
    return Found{};
  }

  void promote(Key x, Found& f) {
    Segment& s = segs_[f.segment];
    if (f.segment == 0) {
      auto it = s.keys.find(x);
      s.recency.erase(it->second.pos);
      s.recency.push_front(x);
      it->second.pos = s.recency.begin();
      links_ += 2;
      return;
    }
    V v = take(s, x);
    Segment& prev = segs_[f.segment - 1];
    Key y = prev.recency.back();
    V w = take(prev, y);
    push_front(prev, x, std::move(v));
    push_front(s, y, std::move(w));
    f.value = &prev.keys.find(x)->second.value;
  }

  V take(Segment& s, Key x) {
    auto it = s.keys.find(x);
    V v = std::move(it->second.value);
    s.recency.erase(it->second.pos);
    s.keys.erase(it);
    links_ += 2;
    return v;
  }

  void unlink(Segment& s, Key x) { (void)take(s, x); }

  void push_front(Segment& s, Key x, V v) {
    s.recency.push_front(x);
    s.keys.emplace(x, Node{std::move(v), s.recency.begin()});
    links_ += 2;
  }

  void push_back(Segment& s, Key x, V v) {
    s.recency.push_back(x);
    s.keys.emplace(x, Node{std::move(v), std::prev(s.recency.end())});
    links_ += 2;
  }

  std::unique_ptr<std::uint64_t> counter_;
  std::vector<Segment> segs_;
  std::size_t n_ = 0;
  std::uint64_t links_ = 0;
};

}  // namespace wsm::seq
