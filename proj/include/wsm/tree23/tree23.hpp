#pragma once

// Leaf-based 2-3 tree keyed by int64 with stable leaf handles. Operations run
// sequentially; each reports the number of nodes it touched so callers can
// charge the equivalent parallel batch DAG on the simulator.

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "wsm/core/types.hpp"

namespace wsm::tree23 {

struct Handle {
  std::uint32_t slot = UINT32_MAX;
  std::uint32_t gen = 0;

  bool operator==(const Handle&) const = default;
  bool null() const noexcept { return slot == UINT32_MAX; }
};

enum class TreeOpKind : std::uint8_t { search, insert, erase };

template <class P>
struct TreeOp {
  Key key = 0;
  TreeOpKind kind = TreeOpKind::search;
  P payload{};
};

struct TreeResult {
  bool found = false;   // key was present before the op
  Handle handle;        // live leaf after the op (insert/search hit), or the removed leaf
  std::uint32_t cost = 0;
};

template <class P>
struct Item {
  Key key;
  Handle handle;
};

template <class P>
class BatchTree {
 public:
  BatchTree() = default;

  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }
  std::size_t height() const noexcept { return height_; }

  bool live(Handle h) const noexcept {
    return !h.null() && h.slot < leaves_.size() && leaves_[h.slot].alive && leaves_[h.slot].gen == h.gen;
  }
  Key key(Handle h) const { return leaf_of(h).key; }
  P& payload(Handle h) { return leaf_of(h).payload; }
  const P& payload(Handle h) const { return leaf_of(h).payload; }

  // Ops must be strictly increasing by key.
  std::vector<TreeResult> batch_op(const std::vector<TreeOp<P>>& ops) {
    for (std::size_t i = 1; i < ops.size(); ++i)
      if (!(ops[i - 1].key < ops[i].key)) throw UsageError("batch keys must be strictly increasing");
    std::vector<TreeResult> out;
    out.reserve(ops.size());
    for (const auto& op : ops) {
      switch (op.kind) {
        case TreeOpKind::search: out.push_back(find(op.key)); break;
        case TreeOpKind::insert: out.push_back(insert(op.key, op.payload)); break;
        case TreeOpKind::erase: out.push_back(erase(op.key)); break;
      }
    }
    return out;
  }

  TreeResult find(Key k) const {
    TreeResult r;
    if (size_ == 0) return r;
    std::uint32_t depth = 0;
    Ref cur = root_;
    while (!cur.leaf()) {
      cur = descend(cur, k);
      ++depth;
    }
    r.cost = depth + 1;
    const Leaf& l = leaves_[cur.idx()];
    if (l.key == k) {
      r.found = true;
      r.handle = Handle{cur.idx(), l.gen};
    }
    return r;
  }

  // Overwrites the payload when the key is present.
  TreeResult insert(Key k, P payload) {
    TreeResult r;
    if (size_ == 0) {
      std::uint32_t s = new_leaf(k, std::move(payload));
      root_ = Ref::of_leaf(s);
      leaves_[s].parent = kNone;
      height_ = 0;
      size_ = 1;
      r.handle = Handle{s, leaves_[s].gen};
      r.cost = 1;
      return r;
    }
    std::uint32_t cost = 1;
    Ref cur = root_;
    while (!cur.leaf()) {
      cur = descend(cur, k);
      ++cost;
    }
    Leaf& near = leaves_[cur.idx()];
    if (near.key == k) {
      near.payload = std::move(payload);
      r.found = true;
      r.handle = Handle{cur.idx(), near.gen};
      r.cost = cost;
      return r;
    }
    bool after = near.key < k;
    std::uint32_t s = new_leaf(k, std::move(payload));
    r.handle = Handle{s, leaves_[s].gen};
    ++size_;
    Ref nl = Ref::of_leaf(s);
    if (height_ == 0) {
      std::uint32_t root = new_inner();
      Inner& in = inners_[root];
      in.n = 2;
      in.child[0] = after ? cur : nl;
      in.child[1] = after ? nl : cur;
      set_parent(in.child[0], root);
      set_parent(in.child[1], root);
      in.max = max_of(in.child[1]);
      in.parent = kNone;
      root_ = Ref::of_inner(root);
      height_ = 1;
      r.cost = cost + 1;
      return r;
    }
    std::uint32_t parent = leaves_[cur.idx()].parent;
    int pos = index_in_parent(cur, parent);
    cost += insert_child(parent, pos + (after ? 1 : 0), nl);
    r.cost = cost;
    return r;
  }

  TreeResult erase(Key k) {
    TreeResult r = find(k);
    if (!r.found) return r;
    r.cost += remove_leaf(r.handle.slot);
    return r;
  }

  TreeResult erase(Handle h) {
    TreeResult r;
    if (!live(h)) throw UsageError("erase of a dead handle");
    r.found = true;
    r.handle = h;
    r.cost = static_cast<std::uint32_t>(height_) + 1 + remove_leaf(h.slot);
    return r;
  }

  // Extreme leaf (smallest key if front) without removing it.
  Handle extreme(bool front) const {
    if (size_ == 0) return Handle{};
    Ref cur = root_;
    while (!cur.leaf()) {
      const Inner& in = inners_[cur.idx()];
      cur = front ? in.child[0] : in.child[in.n - 1];
    }
    return Handle{cur.idx(), leaves_[cur.idx()].gen};
  }

  // Removes `count` extreme leaves; returns them in key order with their
  // payloads and per-removal costs appended to `costs`.
  std::vector<std::pair<Key, P>> pop_extreme(std::size_t count, bool front, std::vector<std::uint32_t>* costs = nullptr) {
    if (count > size_) throw UsageError("pop_extreme count exceeds size");
    std::vector<std::pair<Key, P>> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      Handle h = extreme(front);
      Leaf& l = leaves_[h.slot];
      out.emplace_back(l.key, std::move(l.payload));
      std::uint32_t c = static_cast<std::uint32_t>(height_) + 1 + remove_leaf(h.slot);
      if (costs) costs->push_back(c);
    }
    if (!front) std::reverse(out.begin(), out.end());
    return out;
  }

  // Items of the given live handles in key order; per-handle walk-up cost is
  // the tree height.
  std::vector<Item<P>> reverse_index(const std::vector<Handle>& hs) const {
    std::vector<Item<P>> out;
    out.reserve(hs.size());
    for (Handle h : hs) {
      if (!live(h)) throw UsageError("reverse_index of a dead handle");
      out.push_back({leaves_[h.slot].key, h});
    }
    std::sort(out.begin(), out.end(), [](const Item<P>& a, const Item<P>& b) { return a.key < b.key; });
    for (std::size_t i = 1; i < out.size(); ++i)
      if (out[i - 1].key == out[i].key) throw UsageError("reverse_index of duplicate handles");
    return out;
  }

  template <class F>
  void for_each(F&& f) const {
    if (size_ == 0) return;
    walk(root_, f);
  }

  std::vector<Key> keys() const {
    std::vector<Key> out;
    out.reserve(size_);
    for_each([&](Key k, const P&) { out.push_back(k); });
    return out;
  }

  // Empty when every structural invariant holds.
  std::string audit() const {
    if (size_ == 0) return root_.valid() ? "empty tree with a root" : "";
    std::size_t leaves = 0;
    bool have_prev = false;
    Key prev = 0;
    std::string err = audit_node(root_, kNone, 0, leaves, have_prev, prev);
    if (!err.empty()) return err;
    if (leaves != size_) return "leaf count mismatch";
    return {};
  }

  std::string dump() const {
    std::ostringstream os;
    if (size_ == 0) return "(empty)\n";
    dump_node(os, root_, 0);
    return os.str();
  }

 private:
  static constexpr std::uint32_t kNone = UINT32_MAX;

  struct Ref {
    std::uint32_t raw = kNone;
    static Ref of_leaf(std::uint32_t i) { return Ref{i | 0x80000000u}; }
    static Ref of_inner(std::uint32_t i) { return Ref{i}; }
    bool valid() const { return raw != kNone; }
    bool leaf() const { return raw != kNone && (raw & 0x80000000u); }
    std::uint32_t idx() const { return raw & 0x7fffffffu; }
    bool operator==(const Ref&) const = default;
  };

  struct Leaf {
    Key key = 0;
    P payload{};
    std::uint32_t parent = kNone;
    std::uint32_t gen = 0;
    bool alive = false;
  };

  struct Inner {
    std::uint32_t parent = kNone;
    int n = 0;
    Ref child[4];
    Key max = 0;
  };

  Leaf& leaf_of(Handle h) {
    if (!live(h)) throw UsageError("dead handle");
    return leaves_[h.slot];
  }
  const Leaf& leaf_of(Handle h) const {
    if (!live(h)) throw UsageError("dead handle");
    return leaves_[h.slot];
  }

  Key max_of(Ref r) const { return r.leaf() ? leaves_[r.idx()].key : inners_[r.idx()].max; }

  Ref descend(Ref cur, Key k) const {
    const Inner& in = inners_[cur.idx()];
    for (int i = 0; i < in.n - 1; ++i)
      if (!(max_of(in.child[i]) < k)) return in.child[i];
    return in.child[in.n - 1];
  }

  void set_parent(Ref r, std::uint32_t p) {
    if (r.leaf()) leaves_[r.idx()].parent = p;
    else inners_[r.idx()].parent = p;
  }
  std::uint32_t parent_of(Ref r) const { return r.leaf() ? leaves_[r.idx()].parent : inners_[r.idx()].parent; }

  int index_in_parent(Ref r, std::uint32_t p) const {
    const Inner& in = inners_[p];
    for (int i = 0; i < in.n; ++i)
      if (in.child[i] == r) return i;
    return -1;
  }

  std::uint32_t new_leaf(Key k, P payload) {
    std::uint32_t s;
    if (!free_leaves_.empty()) {
      s = free_leaves_.back();
      free_leaves_.pop_back();
    } else {
      s = static_cast<std::uint32_t>(leaves_.size());
      leaves_.emplace_back();
    }
    Leaf& l = leaves_[s];
    l.key = k;
    l.payload = std::move(payload);
    l.alive = true;
    l.parent = kNone;
    return s;
  }

  void free_leaf(std::uint32_t s) {
    Leaf& l = leaves_[s];
    l.alive = false;
    ++l.gen;
    l.payload = P{};
    l.parent = kNone;
    free_leaves_.push_back(s);
  }

  std::uint32_t new_inner() {
    if (!free_inners_.empty()) {
      std::uint32_t s = free_inners_.back();
      free_inners_.pop_back();
      inners_[s] = Inner{};
      return s;
    }
    inners_.emplace_back();
    return static_cast<std::uint32_t>(inners_.size() - 1);
  }

  void fix_max_upward(std::uint32_t p, std::uint32_t& cost) {
    while (p != kNone) {
      Inner& in = inners_[p];
      Key m = max_of(in.child[in.n - 1]);
      ++cost;
      if (in.max == m) break;
      in.max = m;
      p = in.parent;
    }
  }

  // Inserts child c at position pos of inner node p, splitting upward.
  std::uint32_t insert_child(std::uint32_t p, int pos, Ref c) {
    std::uint32_t cost = 0;
    for (;;) {
      Inner& in = inners_[p];
      for (int i = in.n; i > pos; --i) in.child[i] = in.child[i - 1];
      in.child[pos] = c;
      ++in.n;
      set_parent(c, p);
      ++cost;
      if (in.n <= 3) {
        in.max = max_of(in.child[in.n - 1]);
        fix_max_upward(in.parent, cost);
        return cost;
      }
      // split 4 -> 2 + 2
      std::uint32_t q = new_inner();
      Inner& left = inners_[p];
      Inner& right = inners_[q];
      right.n = 2;
      right.child[0] = left.child[2];
      right.child[1] = left.child[3];
      left.n = 2;
      set_parent(right.child[0], q);
      set_parent(right.child[1], q);
      left.max = max_of(left.child[1]);
      right.max = max_of(right.child[1]);
      std::uint32_t gp = left.parent;
      if (gp == kNone) {
        std::uint32_t root = new_inner();
        Inner& r = inners_[root];
        r.n = 2;
        r.child[0] = Ref::of_inner(p);
        r.child[1] = Ref::of_inner(q);
        r.parent = kNone;
        inners_[p].parent = root;
        inners_[q].parent = root;
        r.max = inners_[q].max;
        root_ = Ref::of_inner(root);
        ++height_;
        return cost + 1;
      }
      pos = index_in_parent(Ref::of_inner(p), gp) + 1;
      c = Ref::of_inner(q);
      p = gp;
    }
  }

  // Unlinks a leaf and rebalances; returns nodes touched.
  std::uint32_t remove_leaf(std::uint32_t s) {
    std::uint32_t cost = 0;
    --size_;
    Ref victim = Ref::of_leaf(s);
    std::uint32_t p = leaves_[s].parent;
    free_leaf(s);
    if (p == kNone) {
      root_ = Ref{};
      height_ = 0;
      return 1;
    }
    for (;;) {
      Inner& in = inners_[p];
      int i = index_in_parent(victim, p);
      for (int j = i; j + 1 < in.n; ++j) in.child[j] = in.child[j + 1];
      --in.n;
      ++cost;
      if (in.n >= 2) {
        in.max = max_of(in.child[in.n - 1]);
        fix_max_upward(in.parent, cost);
        return cost;
      }
      std::uint32_t gp = in.parent;
      if (gp == kNone) {
        // root with a single child: the child becomes the root
        root_ = in.child[0];
        set_parent(root_, kNone);
        --height_;
        free_inners_.push_back(p);
        return cost + 1;
      }
      Ref only = in.child[0];
      int pi = index_in_parent(Ref::of_inner(p), gp);
      Inner& g = inners_[gp];
      int si = pi > 0 ? pi - 1 : pi + 1;
      std::uint32_t sib = g.child[si].idx();
      Inner& sb = inners_[sib];
      ++cost;
      if (sb.n == 3) {
        // borrow one child from the sibling
        Inner& me = inners_[p];
        if (si < pi) {
          me.child[1] = me.child[0];
          me.child[0] = sb.child[2];
        } else {
          me.child[1] = sb.child[0];
          sb.child[0] = sb.child[1];
          sb.child[1] = sb.child[2];
        }
        sb.n = 2;
        me.n = 2;
        set_parent(me.child[0], p);
        set_parent(me.child[1], p);
        me.max = max_of(me.child[1]);
        sb.max = max_of(sb.child[1]);
        fix_max_upward(gp, cost);
        return cost;
      }
      // merge the lone child into the sibling, drop this node
      if (si < pi) {
        sb.child[2] = only;
      } else {
        sb.child[2] = sb.child[1];
        sb.child[1] = sb.child[0];
        sb.child[0] = only;
      }
      sb.n = 3;
      set_parent(only, sib);
      sb.max = max_of(sb.child[2]);
      free_inners_.push_back(p);
      victim = Ref::of_inner(p);
      p = gp;
    }
  }

  template <class F>
  void walk(Ref r, F& f) const {
    if (r.leaf()) {
      const Leaf& l = leaves_[r.idx()];
      f(l.key, l.payload);
      return;
    }
    const Inner& in = inners_[r.idx()];
    for (int i = 0; i < in.n; ++i) walk(in.child[i], f);
  }

  std::string audit_node(Ref r, std::uint32_t parent, std::size_t depth, std::size_t& leaves, bool& have_prev,
                         Key& prev) const {
    if (parent_of(r) != parent) return "bad parent pointer";
    if (r.leaf()) {
      const Leaf& l = leaves_[r.idx()];
      if (!l.alive) return "dead leaf reachable";
      if (depth != height_) return "leaf depth differs from height";
      if (have_prev && !(prev < l.key)) return "keys out of order";
      have_prev = true;
      prev = l.key;
      ++leaves;
      return {};
    }
    const Inner& in = inners_[r.idx()];
    if (in.n < 2 || in.n > 3) return "inner node arity " + std::to_string(in.n);
    for (int i = 0; i < in.n; ++i) {
      auto e = audit_node(in.child[i], r.idx(), depth + 1, leaves, have_prev, prev);
      if (!e.empty()) return e;
    }
    if (in.max != max_of(in.child[in.n - 1])) return "stale max key";
    return {};
  }

  void dump_node(std::ostream& os, Ref r, int indent) const {
    os << std::string(static_cast<std::size_t>(indent) * 2, ' ');
    if (r.leaf()) {
      os << leaves_[r.idx()].key << '\n';
      return;
    }
    const Inner& in = inners_[r.idx()];
    os << "[max " << in.max << "]\n";
    for (int i = 0; i < in.n; ++i) dump_node(os, in.child[i], indent + 1);
  }

  std::vector<Leaf> leaves_;
  std::vector<Inner> inners_;
  std::vector<std::uint32_t> free_leaves_;
  std::vector<std::uint32_t> free_inners_;
  Ref root_;
  std::size_t height_ = 0;
  std::size_t size_ = 0;
};

// Batches appended in O(1); flattened on demand.
template <class T>
class Bunch {
 public:
  void add(std::vector<T> batch) {
    size_ += batch.size();
    batches_.push_back(std::move(batch));
  }
  std::size_t size() const noexcept { return size_; }
  std::size_t batch_count() const noexcept { return batches_.size(); }
  bool empty() const noexcept { return size_ == 0; }

  std::vector<T> to_batch() {
    std::vector<T> out;
    out.reserve(size_);
    for (auto& b : batches_)
      for (auto& x : b) out.push_back(std::move(x));
    batches_.clear();
    size_ = 0;
    return out;
  }

 private:
  std::vector<std::vector<T>> batches_;
  std::size_t size_ = 0;
};

}  // namespace wsm::tree23
