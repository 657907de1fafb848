#include "wsm/maps/m2.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace wsm::maps {

using rt::Lane;
using rt::Owner;
using tree23::TreeOp;
using tree23::TreeOpKind;
using tree23::TreeResult;

namespace {

std::uint64_t cap(std::size_t k) { return seq::segment_capacity(k); }

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) { return a > UINT64_MAX - b ? UINT64_MAX : a + b; }

std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > UINT64_MAX / a) return UINT64_MAX;
  return a * b;
}

std::size_t group_of(const std::vector<Group>& groups, Key k) {
  auto it = std::lower_bound(groups.begin(), groups.end(), k, [](const Group& g, Key x) { return g.key < x; });
  return static_cast<std::size_t>(it - groups.begin());
}

}  // namespace

std::size_t M2::first_slab_for(std::size_t p) {
  if (p == 0) throw UsageError("p must be positive");
  const double pp = static_cast<double>(p);
  const double x = std::log2(std::log2(2.0 * pp * pp));
  return static_cast<std::size_t>(std::max(0.0, std::ceil(x - 1e-9))) + 1;
}

M2::M2(rt::Runtime& rt, M2Options opts)
    : rt_(rt),
      opts_(opts),
      p_(rt.p()),
      m_(opts.first_slab ? opts.first_slab : first_slab_for(rt.p())),
      feed_(rt.p() * rt.p()) {
  if (m_ + 2 >= kMaxSegments) throw UsageError("first slab too deep");
  buf_ = std::make_unique<pbuf::ParallelBuffer<Request*>>(rt_, p_, [this] { return iface_->activate(); });
  iface_ = std::make_unique<rt::ActivationGate>(
      [this] { return (!buf_->empty() || !feed_.empty()) && filter_.size() <= p_ * p_; },
      [this] { return interface_run(); });
  for (std::size_t k = m_; k < kMaxSegments; ++k)
    gates_[k] = std::make_unique<rt::ActivationGate>([this, k] { return k < l_ && !inbox_[k].empty(); },
                                                     [this, k] { return segment_run(k); });
  for (std::size_t j = 0; j + m_ <= kMaxSegments; ++j) {
    nlock_.push_back(std::make_unique<rt::DedicatedLock>(rt_, 2, "neighbour-lock " + std::to_string(j)));
    flock_.push_back(std::make_unique<rt::DedicatedLock>(rt_, 2, "front-lock " + std::to_string(j)));
  }
  m2stats_.front_delay.assign(kMaxSegments - m_, 0);
  rt_.set_filter_probe([this] { return filter_.size(); });
}

rt::Task<OpResult> M2::call(Operation op) {
  Request req;
  req.op = op;
  const std::size_t proc = rt_.processor();
  const rt::Lane lane = rt_.current()->lane;
  rt_.retag(Owner::buffer, lane);
  co_await rt_.tick();
  co_await buf_->submit(&req, proc);
  rt_.retag(Owner::program, lane);
  co_await rt::wait_for(rt_, req.done, "map call");
  co_return req.result;
}

void M2::preload(const std::vector<Operation>& inserts) {
  std::vector<Key> keys;
  std::vector<Entry> pending;
  for (const auto& op : inserts) {
    if (op.kind != OpKind::insert) throw UsageError("preload takes inserts only");
    keys.push_back(op.key);
    pending.push_back({op.key, op.value()});
  }
  std::sort(keys.begin(), keys.end());
  if (std::adjacent_find(keys.begin(), keys.end()) != keys.end()) throw UsageError("preload keys must be distinct");
  for (Key k : keys)
    for (std::size_t s = 0; s < l_; ++s)
      if (segs_[s].contains(k)) throw UsageError("preload key already present");
  if (!filter_.empty()) throw UsageError("preload while operations are in flight");
  Phases discard;
  std::size_t pos = 0;
  while (pos < pending.size()) {
    if (l_ == 0 || segs_[l_ - 1].size() >= cap(l_ - 1)) {
      if (l_ == kMaxSegments) throw UsageError("map too large");
      ++l_;
    }
    std::size_t room = static_cast<std::size_t>(std::min<std::uint64_t>(cap(l_ - 1) - segs_[l_ - 1].size(),
                                                                        pending.size() - pos));
    segs_[l_ - 1].push_back(std::vector<Entry>(pending.begin() + static_cast<std::ptrdiff_t>(pos),
                                               pending.begin() + static_cast<std::ptrdiff_t>(pos + room)),
                            discard);
    pos += room;
  }
  n_ += pending.size();
  m2stats_.segments_peak = std::max(m2stats_.segments_peak, l_);
  for (const auto& op : inserts) record(op, OpResult{}, 0, Placed::back);
}

std::size_t M2::rank_of(Key k) const {
  std::size_t before = 0;
  for (std::size_t s = 0; s < l_; ++s) {
    if (segs_[s].contains(k)) {
      auto order = segs_[s].keys_by_recency();
      return before + static_cast<std::size_t>(std::find(order.begin(), order.end(), k) - order.begin()) + 1;
    }
    before += segs_[s].size();
  }
  return 0;
}

std::uint64_t M2::prefix_size(std::size_t k) const {
  std::uint64_t total = 0;
  for (std::size_t s = 0; s < k && s < l_; ++s) total += segs_[s].size();
  return total;
}

std::uint32_t M2::new_entry() {
  if (!free_entries_.empty()) {
    std::uint32_t s = free_entries_.back();
    free_entries_.pop_back();
    return s;
  }
  entries_.emplace_back();
  return static_cast<std::uint32_t>(entries_.size() - 1);
}

void M2::free_entry(std::uint32_t slot) {
  entries_[slot] = FilterEntry{};
  free_entries_.push_back(slot);
}

KeyState M2::finish_entry(std::uint32_t slot, KeyState s, std::vector<Request*>& done) {
  FilterEntry& e = entries_[slot];
  for (std::size_t i = 0; i < e.ops.size(); ++i) {
    e.reqs[i]->result = apply_op(s, e.ops[i]);
    done.push_back(e.reqs[i]);
  }
  return s;
}

void M2::record(const Operation& op, const OpResult& r, std::uint64_t batch, Placed placed) {
  lin_.push_back({op, r, batch, rt_.step()});
  placed_.push_back(placed);
}

void M2::fail(std::string what) {
  if (failures_.size() < 200) failures_.push_back("step " + std::to_string(rt_.step()) + ": " + std::move(what));
}

// ---- interface ------------------------------------------------------------

rt::Task<bool> M2::interface_run() {
  ++stats_.interface_runs;
  iface_running_ = true;
  std::vector<Request*> input;
  co_await buf_->flush(input);
  Phases ph;
  feed_.ingest(std::move(input), ph);
  if (feed_.empty()) {
    co_await charge(rt_, std::move(ph));
    iface_running_ = false;
    co_return true;
  }
  std::vector<Request*> cut = feed_.cut(1, ph);
  co_await charge(rt_, std::move(ph));
  const std::uint64_t batch = ++stats_.batches;
  stats_.cut_sizes.push_back(cut.size());
  std::vector<Group> groups = co_await sort_and_combine(rt_, cut, &stats_.sort_comparisons);

  std::vector<Unfinished> active;
  active.reserve(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) active.push_back({i, false, std::nullopt});

  bool locked = false;
  std::uint64_t front_start = 0;
  for (std::size_t k = 0; k < m_ && k < l_ && !active.empty(); ++k) {
    if (k + 1 == m_) {
      co_await nlock_[0]->acquire(1);
      front_start = rt_.step();
      co_await flock_[0]->acquire(1);
      locked = true;
    }
    Phases seg;
    std::vector<Key> keys;
    keys.reserve(active.size());
    for (const auto& a : active) keys.push_back(groups[a.group].key);
    auto hits = segs_[k].search(keys, seg);

    std::vector<Handle> found;
    std::vector<Unfinished> next;
    std::vector<Key> kept_keys;
    std::vector<Value> kept_values;
    auto& fold = seg.next();
    for (std::size_t i = 0; i < active.size(); ++i) {
      if (!hits[i].found) {
        next.push_back(active[i]);
        continue;
      }
      Group& g = groups[active[i].group];
      KeyState fin = g.resolve(KeyState{true, hits[i].value});
      fold.push_back(static_cast<std::uint32_t>(g.ops.size()));
      found.push_back(hits[i].handle);
      if (fin.present) {
        kept_keys.push_back(g.key);
        kept_values.push_back(fin.value);
      } else {
        next.push_back({active[i].group, true, KeyState{true, hits[i].value}});
      }
    }
    if (fold.empty()) seg.list.pop_back();

    std::vector<Entry> removed = segs_[k].remove(found, seg);
    std::vector<Entry> kept;
    for (auto& e : removed) {
      auto it = std::lower_bound(kept_keys.begin(), kept_keys.end(), e.key);
      if (it != kept_keys.end() && *it == e.key) {
        e.value = kept_values[static_cast<std::size_t>(it - kept_keys.begin())];
        kept.push_back(e);
      } else {
        --n_;
      }
    }
    segs_[k == 0 ? 0 : k - 1].push_front(kept, seg);
    // back to front of the block just placed
    std::vector<Request*> done;
    for (auto it = kept.rbegin(); it != kept.rend(); ++it) {
      Group& g = groups[group_of(groups, it->key)];
      for (std::size_t i = 0; i < g.ops.size(); ++i) {
        g.reqs[i]->result = g.results[i];
        done.push_back(g.reqs[i]);
        record(g.ops[i], g.results[i], batch, Placed::front);
      }
    }
    m2stats_.finished_first += done.size();
    co_await charge(rt_, std::move(seg));
    if (!done.empty()) co_await deliver(rt_, std::move(done));
    if (k > 0) co_await restore_first(k);
    active = std::move(next);
  }

  if (!active.empty()) {
    Phases tail;
    if (l_ > m_) {
      if (!locked) throw std::logic_error("final slab reached without its locks");
      // filter: ops on keys already in flight are trapped, the rest go on
      std::vector<TreeOp<std::uint32_t>> probe;
      for (const auto& a : active) probe.push_back({groups[a.group].key, TreeOpKind::search, 0});
      auto hits = filter_.batch_op(probe);
      auto& c0 = tail.next();
      std::vector<TreeOp<std::uint32_t>> admit;
      std::vector<TreeOp<Slot>> pass;
      std::size_t tagged = 0;
      for (std::size_t i = 0; i < active.size(); ++i) {
        c0.push_back(hits[i].cost);
        Group& g = groups[active[i].group];
        std::uint32_t slot;
        if (hits[i].found) {
          slot = filter_.payload(hits[i].handle);
          if (active[i].tagged) fail("a deletion found in the first slab was trapped behind key " + std::to_string(g.key));
          m2stats_.trapped += g.ops.size();
        } else {
          slot = new_entry();
          entries_[slot].start = active[i].start;
          admit.push_back({g.key, TreeOpKind::insert, slot});
          pass.push_back({g.key, TreeOpKind::insert, Slot{active[i].tagged}});
          if (active[i].tagged) ++tagged;
          m2stats_.admitted += g.ops.size();
        }
        FilterEntry& e = entries_[slot];
        for (std::size_t o = 0; o < g.ops.size(); ++o) {
          e.reqs.push_back(g.reqs[o]);
          e.ops.push_back(g.ops[o]);
          e.batches.push_back(batch);
        }
        e.effect = compose(e.effect, g.effect);
      }
      auto& c1 = tail.next();
      for (const auto& r : filter_.batch_op(admit)) c1.push_back(r.cost);
      auto& c2 = tail.next();
      for (const auto& r : inbox_[m_].batch_op(pass)) c2.push_back(r.cost);
      deletions_[m_] += tagged;
      m2stats_.filter_peak = std::max(m2stats_.filter_peak, filter_.size());
      co_await charge(rt_, std::move(tail));
      if (!pass.empty()) co_await rt_.spawn(gates_[m_]->activate(), Owner::ds, Lane::q1);
    } else {
      std::vector<Request*> done;
      finish_without_final_slab(groups, active, batch, tail, done);
      co_await charge(rt_, std::move(tail));
      if (!done.empty()) co_await deliver(rt_, std::move(done));
    }
  }

  iface_running_ = false;
  if (locked) {
    flock_[0]->release();
    m2stats_.interface_front_delay = std::max(m2stats_.interface_front_delay, rt_.step() - front_start);
    nlock_[0]->release();
  }
  audit("interface");
  co_return true;
}

void M2::finish_without_final_slab(std::vector<Group>& groups, const std::vector<Unfinished>& active,
                                   std::uint64_t batch, Phases& ph, std::vector<Request*>& done) {
  std::vector<Entry> inserts;
  for (const auto& a : active) {
    Group& g = groups[a.group];
    KeyState fin = g.resolve(a.start.value_or(KeyState{}));
    if (fin.present) inserts.push_back({g.key, fin.value});
    for (std::size_t i = 0; i < g.ops.size(); ++i) {
      g.reqs[i]->result = g.results[i];
      done.push_back(g.reqs[i]);
      record(g.ops[i], g.results[i], batch, fin.present ? Placed::back : Placed::none);
    }
  }
  m2stats_.finished_first += done.size();
  while (l_ > 0 && segs_[l_ - 1].empty()) --l_;
  std::size_t pos = 0;
  while (pos < inserts.size()) {
    if (l_ == 0 || segs_[l_ - 1].size() >= cap(l_ - 1)) {
      if (l_ == kMaxSegments) throw UsageError("map too large");
      ++l_;
    }
    std::size_t take = static_cast<std::size_t>(
        std::min<std::uint64_t>(cap(l_ - 1) - segs_[l_ - 1].size(), inserts.size() - pos));
    segs_[l_ - 1].push_back(std::vector<Entry>(inserts.begin() + static_cast<std::ptrdiff_t>(pos),
                                               inserts.begin() + static_cast<std::ptrdiff_t>(pos + take)),
                            ph);
    pos += take;
  }
  n_ += inserts.size();
  m2stats_.segments_peak = std::max(m2stats_.segments_peak, l_);
}

rt::Task<> M2::restore_first(std::size_t upto) {
  for (std::size_t i = std::min(upto, l_ - 1); i >= 1; --i) {
    const std::uint64_t prefix = prefix_size(i);
    const std::uint64_t target = capacity_prefix(i);
    Phases ph;
    if (prefix > target) {
      auto moved = segs_[i - 1].pop_back(static_cast<std::size_t>(prefix - target), ph);
      segs_[i].push_front(moved, ph);
    } else if (prefix < target && !segs_[i].empty()) {
      auto moved = segs_[i].pop_front(static_cast<std::size_t>(target - prefix), ph);
      segs_[i - 1].push_back(moved, ph);
    }
    if (!ph.empty()) co_await charge(rt_, std::move(ph));
  }
}

// ---- final slab -----------------------------------------------------------

rt::Task<> M2::acquire_front(std::size_t top) {
  for (std::size_t i = top + 1; i-- > 0;) co_await flock_[i]->acquire(i == top ? 1 : 2);
}

void M2::release_front(std::size_t top) {
  for (std::size_t i = 0; i <= top; ++i) flock_[i]->release();
}

rt::Task<bool> M2::segment_run(std::size_t k) {
  const std::size_t j = k - m_;
  ++m2stats_.segment_runs;
  rt::DedicatedLock& left = *nlock_[j];
  rt::DedicatedLock& right = *nlock_[j + 1];
  // 1. arrow order: 1 before 2; the numbers alternate along the slab
  if (j % 2 == 0) {
    co_await left.acquire(2);
    co_await right.acquire(1);
  } else {
    co_await right.acquire(1);
    co_await left.acquire(2);
  }
  running_[k] = true;
  // 2.
  std::uint64_t front_start = 0;
  if (j == 0) {
    front_start = rt_.step();
    co_await flock_[0]->acquire(1);
  }
  // 3.
  if (k + 1 == l_ && sat_add(segs_[k - 1].size(), segs_[k].size()) > sat_add(cap(k - 1), cap(k))) {
    if (k + 2 >= kMaxSegments) throw UsageError("map too large");
    l_ = k + 2;
    m2stats_.segments_peak = std::max(m2stats_.segments_peak, l_);
  }

  // 4. flush the buffer
  Phases ph;
  std::vector<Key> keys;
  std::vector<bool> tags;
  inbox_[k].for_each([&](Key key, const Slot& s) {
    keys.push_back(key);
    tags.push_back(s.tagged);
  });
  inbox_[k] = tree23::BatchTree<Slot>{};
  ph.add_uniform(keys.size(), ceil_log2(keys.size() + 1) + 1);
  working_[k] = keys;

  // a. search and pull out what is here
  auto hits = segs_[k].search(keys, ph);
  std::vector<Handle> found;
  for (const auto& h : hits)
    if (h.found) found.push_back(h.handle);
  std::vector<Entry> removed = segs_[k].remove(found, ph);
  n_ -= removed.size();
  co_await charge(rt_, std::move(ph));

  // b.
  if (j > 0) {
    front_start = rt_.step();
    co_await acquire_front(j);
  }

  // c. consult the filter for the items found here
  Phases fph;
  std::vector<TreeOp<std::uint32_t>> probe;
  for (std::size_t i = 0; i < keys.size(); ++i)
    if (hits[i].found) probe.push_back({keys[i], TreeOpKind::search, 0});
  auto fr = filter_.batch_op(probe);
  auto& c0 = fph.next();
  std::unordered_map<Key, KeyState> stays;  // found, and present afterwards
  std::vector<bool> gone(keys.size(), false);
  std::size_t newly_tagged = 0;
  for (std::size_t i = 0, q = 0; i < keys.size(); ++i) {
    if (!hits[i].found) continue;
    const TreeResult& r = fr[q++];
    c0.push_back(r.cost);
    if (!r.found) {
      fail("key " + std::to_string(keys[i]) + " travels without a filter entry");
      continue;
    }
    FilterEntry& e = entries_[filter_.payload(r.handle)];
    KeyState st{true, hits[i].value};
    KeyState fin = apply(e.effect, st);
    if (fin.present) {
      stays.emplace(keys[i], fin);
      gone[i] = true;
    } else {
      e.start = st;
      if (!tags[i]) ++newly_tagged;
      tags[i] = true;
    }
  }
  deletions_[k] += newly_tagged;

  // d. shift what stays to the front of S[m'], and at the terminal segment
  // finish everything else
  const std::size_t mp = std::min(k - 1, m_);
  const bool terminal = k + 1 == l_;
  std::vector<Request*> done;
  std::vector<TreeOp<std::uint32_t>> drop;
  std::vector<Entry> shifted;
  for (const auto& e : removed) {
    auto it = stays.find(e.key);
    if (it != stays.end()) shifted.push_back({e.key, it->second.value});
  }
  segs_[mp].push_front(shifted, fph);
  n_ += shifted.size();
  std::vector<Entry> inserted;
  std::vector<std::size_t> inserted_at;
  if (terminal) {
    // ops that leave their key absent first, then the placed blocks back to front
    for (std::size_t i = 0; i < keys.size(); ++i) {
      if (gone[i]) continue;
      std::uint32_t slot = filter_.payload(filter_.find(keys[i]).handle);
      const FilterEntry& e = entries_[slot];
      KeyState fin = apply(e.effect, e.start.value_or(KeyState{}));
      if (fin.present) {
        inserted.push_back({keys[i], fin.value});
        inserted_at.push_back(i);
        continue;
      }
      KeyState s = e.start.value_or(KeyState{});
      const std::size_t from = done.size();
      finish_entry(slot, s, done);
      for (std::size_t o = 0; o < entries_[slot].ops.size(); ++o)
        record(entries_[slot].ops[o], done[from + o]->result, entries_[slot].batches[o], Placed::none);
      drop.push_back({keys[i], TreeOpKind::erase, 0});
    }
  }
  for (auto it = shifted.rbegin(); it != shifted.rend(); ++it) {
    std::uint32_t slot = filter_.payload(filter_.find(it->key).handle);
    const std::size_t from = done.size();
    const auto& e = entries_[slot];
    KeyState s{true, hits[static_cast<std::size_t>(
                               std::lower_bound(keys.begin(), keys.end(), it->key) - keys.begin())]
                         .value};
    finish_entry(slot, s, done);
    for (std::size_t o = 0; o < e.ops.size(); ++o) record(e.ops[o], done[from + o]->result, e.batches[o], Placed::front);
    drop.push_back({it->key, TreeOpKind::erase, 0});
  }
  if (!inserted.empty()) {
    segs_[mp].push_front(inserted, fph);
    n_ += inserted.size();
    for (std::size_t x = inserted.size(); x-- > 0;) {
      Key key = inserted[x].key;
      std::uint32_t slot = filter_.payload(filter_.find(key).handle);
      const std::size_t from = done.size();
      const auto& e = entries_[slot];
      finish_entry(slot, e.start.value_or(KeyState{}), done);
      for (std::size_t o = 0; o < e.ops.size(); ++o)
        record(e.ops[o], done[from + o]->result, e.batches[o], Placed::front);
      drop.push_back({key, TreeOpKind::erase, 0});
    }
  }
  std::sort(drop.begin(), drop.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
  auto& c1 = fph.next();
  for (const auto& d : drop) {
    std::uint32_t slot = filter_.payload(filter_.find(d.key).handle);
    free_entry(slot);
  }
  for (const auto& r : filter_.batch_op(drop)) c1.push_back(r.cost);
  m2stats_.finished_final += done.size();

  std::size_t tagged_total = 0;
  std::vector<TreeOp<Slot>> onward;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (tags[i]) ++tagged_total;
    if (!gone[i] && !terminal) onward.push_back({keys[i], TreeOpKind::insert, Slot{tags[i]}});
  }
  {
    std::vector<Key> still;
    for (const auto& o : onward) still.push_back(o.key);
    working_[k] = std::move(still);
  }
  co_await charge(rt_, std::move(fph));
  if (!done.empty()) co_await rt_.spawn(deliver(rt_, std::move(done)), Owner::ds, Lane::q1);

  // e.
  if (filter_.size() <= p_ * p_) co_await rt_.spawn(iface_->activate(), Owner::ds, Lane::q2);
  // f.
  if (j > 0) {
    release_front(j);
    m2stats_.front_delay[j] = std::max(m2stats_.front_delay[j], rt_.step() - front_start);
  }

  // g. over-full S[k-1] spills into the front of S[k]
  Phases tph;
  if (segs_[k - 1].size() > cap(k - 1)) {
    auto moved = segs_[k - 1].pop_back(static_cast<std::size_t>(segs_[k - 1].size() - cap(k - 1)), tph);
    segs_[k].push_front(moved, tph);
  }
  // h. holes in S[k-1] are refilled only as far as deletions passed through
  if (segs_[k - 1].size() < cap(k - 1)) {
    std::uint64_t holes = cap(k - 1) - segs_[k - 1].size();
    std::size_t t = static_cast<std::size_t>(std::min<std::uint64_t>({holes, segs_[k].size(), tagged_total}));
    if (t > 0) {
      auto moved = segs_[k].pop_front(t, tph);
      segs_[k - 1].push_back(moved, tph);
    }
  }
  deletions_[k] -= tagged_total;
  if (!tph.empty()) co_await charge(rt_, std::move(tph));

  // i.
  if (!onward.empty()) {
    Phases nph;
    auto& c = nph.next();
    for (const auto& r : inbox_[k + 1].batch_op(onward)) c.push_back(r.cost);
    std::size_t t = 0;
    for (const auto& o : onward) t += o.payload.tagged ? 1 : 0;
    deletions_[k + 1] += t;
    working_[k].clear();
    co_await charge(rt_, std::move(nph));
    co_await rt_.spawn(gates_[k + 1]->activate(), Owner::ds, Lane::q1);
  }
  working_[k].clear();

  // 5.
  if (k + 1 == l_ && segs_[k].empty()) l_ = k;
  // 6.
  if (j == 0) {
    flock_[0]->release();
    m2stats_.front_delay[0] = std::max(m2stats_.front_delay[0], rt_.step() - front_start);
  }
  // 7.
  running_[k] = false;
  left.release();
  right.release();
  audit("segment");
  co_return true;
}

// ---- audits ---------------------------------------------------------------

void M2::audit(const char* where) {
  ++m2stats_.audits;
  const std::string at = where;
  if (opts_.audit) {
    if (filter_.size() > 2 * p_ * p_) fail(at + ": filter holds " + std::to_string(filter_.size()) + " keys");
    std::unordered_set<Key> seen;
    bool dup = false;
    for (std::size_t k = m_; k < kMaxSegments; ++k) {
      inbox_[k].for_each([&](Key key, const Slot&) { dup |= !seen.insert(key).second; });
      for (Key key : working_[k]) dup |= !seen.insert(key).second;
    }
    if (dup) fail(at + ": two final-slab operations on one key");
    bool same = seen.size() == filter_.size();
    if (same) filter_.for_each([&](Key key, const std::uint32_t&) { same &= seen.count(key) > 0; });
    if (!same) fail(at + ": filter keys differ from the final-slab operations");
  }
  if (opts_.audit_balance && l_ >= m_) {
    const bool final_exists = l_ > m_;
    // 1.
    if ((!final_exists || !running_[m_]) && segs_[m_ - 1].size() > cap(m_ - 1))
      fail(at + ": S[m-1] over capacity while S[m] is idle");
    // 2.
    if (!iface_running_) {
      for (std::size_t s = 0; s + 1 < m_ && s + 1 < l_; ++s)
        if (segs_[s].size() < cap(s)) fail(at + ": hole in S[" + std::to_string(s) + "]");
      if (final_exists && segs_[m_ - 1].size() + deletions_[m_] < cap(m_ - 1))
        fail(at + ": S[m-1] has more holes than deletions in S[m]");
    }
    for (std::size_t k = m_; k < l_; ++k) {
      // 3.
      if (segs_[k].size() > sat_mul(3, cap(k))) fail(at + ": S[" + std::to_string(k) + "] beyond three capacities");
      // 4.
      if (!running_[k] && sat_add(prefix_size(k), 2 * p_ * p_) < capacity_prefix(k))
        fail(at + ": segments before S[" + std::to_string(k) + "] too far below capacity");
    }
  }
  if (opts_.audit_segments)
    for (std::size_t k = 0; k < l_; ++k)
      if (auto e = segs_[k].audit(); !e.empty()) fail(at + ": S[" + std::to_string(k) + "] " + e);
  if (opts_.audit_rank) audit_rank(where);
}

void M2::audit_rank(const char* where) {
  ++m2stats_.rank_checks;
  std::unordered_map<Key, std::size_t> pos;
  std::size_t at = 0;
  for (std::size_t k = m_; k < l_; ++k)
    for (Key key : segs_[k].keys_by_recency()) pos[key] = ++at;
  if (pos.empty()) return;
  // walk back through the finish order: r counts distinct keys touched since
  // the op that last placed x
  std::unordered_set<Key> touched;
  std::unordered_set<Key> settled;
  for (std::size_t i = lin_.size(); i-- > 0;) {
    const Operation& op = lin_[i].op;
    if (op.kind != OpKind::erase) touched.insert(op.key);
    if (placed_[i] == Placed::none || !settled.insert(op.key).second) continue;
    if (placed_[i] != Placed::front) continue;
    auto it = pos.find(op.key);
    if (it != pos.end() && it->second > touched.size())
      fail(std::string(where) + ": key " + std::to_string(op.key) + " at final-slab position " +
           std::to_string(it->second) + " after " + std::to_string(touched.size()) + " distinct accesses");
  }
}

}  // namespace wsm::maps
