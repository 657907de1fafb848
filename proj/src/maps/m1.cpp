#include "wsm/maps/m1.hpp"

#include <algorithm>
#include <cmath>

namespace wsm::maps {

using rt::Owner;

M1::M1(rt::Runtime& rt, M1Options opts) : rt_(rt), opts_(opts), p_(rt.p()), feed_(rt.p() * rt.p()) {
  buf_ = std::make_unique<pbuf::ParallelBuffer<Request*>>(rt_, p_, [this] { return gate_->activate(); });
  gate_ = std::make_unique<rt::ActivationGate>([this] { return !buf_->empty() || !feed_.empty(); },
                                               [this] { return cycle(); });
}

std::size_t M1::bunches_for(std::size_t n, std::size_t p) {
  if (n <= 1) return 1;
  double want = std::ceil(std::log2(static_cast<double>(n)) / static_cast<double>(p));
  return std::max<std::size_t>(1, static_cast<std::size_t>(want));
}

rt::Task<OpResult> M1::call(Operation op) {
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

void M1::preload(const std::vector<Operation>& inserts) {
  Batch batch;
  std::vector<Entry> pending;
  for (const auto& op : inserts) {
    if (op.kind != OpKind::insert) throw UsageError("preload takes inserts only");
    batch.push_back(op);
    pending.push_back({op.key, op.value()});
  }
  std::sort(batch.begin(), batch.end(), [](const Operation& a, const Operation& b) { return a.key < b.key; });
  for (std::size_t i = 1; i < batch.size(); ++i)
    if (batch[i - 1].key == batch[i].key) throw UsageError("preload keys must be distinct");
  for (const auto& op : batch)
    for (const auto& seg : segs_)
      if (seg.contains(op.key)) throw UsageError("preload key already present");
  Phases discard;
  std::size_t pos = 0;
  while (pos < pending.size()) {
    if (segs_.empty() || segs_.back().size() >= seq::segment_capacity(segs_.size() - 1)) segs_.emplace_back();
    std::size_t room = seq::segment_capacity(segs_.size() - 1) - segs_.back().size();
    std::size_t take = std::min(room, pending.size() - pos);
    segs_.back().push_back(std::vector<Entry>(pending.begin() + static_cast<std::ptrdiff_t>(pos),
                                              pending.begin() + static_cast<std::ptrdiff_t>(pos + take)),
                           discard);
    pos += take;
  }
  n_ += pending.size();
  for (const auto& op : inserts) lin_.push_back({op, OpResult{}, 0, rt_.step()});
  batches_.push_back(inserts);
}

std::size_t M1::rank_of(Key k) const {
  std::size_t before = 0;
  for (const auto& s : segs_) {
    if (s.contains(k)) {
      auto order = s.keys_by_recency();
      return before + static_cast<std::size_t>(std::find(order.begin(), order.end(), k) - order.begin()) + 1;
    }
    before += s.size();
  }
  return 0;
}

rt::Task<bool> M1::cycle() {
  ++stats_.interface_runs;
  std::vector<Request*> input;
  co_await buf_->flush(input);
  Phases ph;
  feed_.ingest(std::move(input), ph);
  if (feed_.empty()) {
    co_await charge(rt_, std::move(ph));
    co_return true;
  }
  std::vector<Request*> cut = feed_.cut(bunches_for(n_, p_), ph);
  co_await charge(rt_, std::move(ph));
  co_await process(std::move(cut));
  co_return true;
}

rt::Task<> M1::process(std::vector<Request*> cut) {
  ++stats_.batches;
  stats_.cut_sizes.push_back(cut.size());
  {
    Batch b;
    for (const Request* r : cut) b.push_back(r->op);
    batches_.push_back(std::move(b));
  }
  std::vector<Group> groups = co_await sort_and_combine(rt_, cut, &stats_.sort_comparisons);

  std::vector<bool> resolved(groups.size(), false);
  std::vector<std::size_t> active(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) active[i] = i;

  for (std::size_t k = 0; k < segs_.size() && !active.empty(); ++k) {
    Phases ph;
    std::vector<Key> keys;
    keys.reserve(active.size());
    for (std::size_t g : active) keys.push_back(groups[g].key);
    auto hits = segs_[k].search(keys, ph);

    std::vector<Handle> found;
    std::vector<std::size_t> next;
    std::vector<char> finished(groups.size(), 0);
    std::vector<Key> kept_keys;
    std::vector<Value> kept_values;
    auto& fold = ph.next();
    for (std::size_t j = 0; j < active.size(); ++j) {
      std::size_t g = active[j];
      if (!hits[j].found) {
        next.push_back(g);
        continue;
      }
      Group& grp = groups[g];
      KeyState fin = grp.resolve(KeyState{true, hits[j].value});
      resolved[g] = true;
      fold.push_back(static_cast<std::uint32_t>(grp.ops.size()));
      found.push_back(hits[j].handle);
      if (fin.present) {
        kept_keys.push_back(grp.key);
        kept_values.push_back(fin.value);
        finished[g] = 1;
      } else {
        next.push_back(g);  // deletions ride along to the end
      }
    }
    if (fold.empty()) ph.list.pop_back();

    std::vector<Entry> removed = segs_[k].remove(found, ph);
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
    segs_[k == 0 ? 0 : k - 1].push_front(kept, ph);
    co_await charge(rt_, std::move(ph));

    std::vector<Request*> done;
    for (std::size_t g : active) {
      if (!finished[g]) continue;
      for (std::size_t i = 0; i < groups[g].reqs.size(); ++i) {
        groups[g].reqs[i]->result = groups[g].results[i];
        done.push_back(groups[g].reqs[i]);
      }
    }
    if (!done.empty()) co_await deliver(rt_, std::move(done));
    if (k > 0) co_await restore(k);
    active = std::move(next);
  }

  // Whatever is left missed every segment or is a finished deletion.
  std::vector<Entry> inserts;
  std::vector<Request*> rest;
  for (std::size_t g : active) {
    Group& grp = groups[g];
    if (!resolved[g]) {
      KeyState fin = grp.resolve(KeyState{});
      resolved[g] = true;
      if (fin.present) inserts.push_back({grp.key, fin.value});
    }
    for (std::size_t i = 0; i < grp.reqs.size(); ++i) {
      grp.reqs[i]->result = grp.results[i];
      rest.push_back(grp.reqs[i]);
    }
  }
  while (!segs_.empty() && segs_.back().empty()) segs_.pop_back();

  if (!inserts.empty()) {
    // top up the last segment, then carve new ones, the last of them first
    Phases ph;
    std::size_t pos = 0;
    if (!segs_.empty()) {
      std::uint64_t cap = seq::segment_capacity(segs_.size() - 1);
      std::size_t take = static_cast<std::size_t>(std::min<std::uint64_t>(cap - segs_.back().size(), inserts.size()));
      segs_.back().push_back(std::vector<Entry>(inserts.begin(), inserts.begin() + static_cast<std::ptrdiff_t>(take)), ph);
      pos = take;
    }
    std::vector<std::vector<Entry>> fresh;
    for (std::size_t k = segs_.size(); pos < inserts.size(); ++k) {
      std::size_t take = static_cast<std::size_t>(
          std::min<std::uint64_t>(seq::segment_capacity(k), inserts.size() - pos));
      fresh.emplace_back(inserts.begin() + static_cast<std::ptrdiff_t>(pos),
                         inserts.begin() + static_cast<std::ptrdiff_t>(pos + take));
      pos += take;
    }
    const std::size_t base = segs_.size();
    segs_.resize(base + fresh.size());
    for (std::size_t i = fresh.size(); i-- > 0;) segs_[base + i].push_back(fresh[i], ph);
    n_ += inserts.size();
    co_await charge(rt_, std::move(ph));
  }
  if (!rest.empty()) co_await deliver(rt_, std::move(rest));

  record(groups);
  audit_capacity();
}

rt::Task<> M1::restore(std::size_t upto) {
  for (std::size_t i = std::min(upto, segs_.size() - 1); i >= 1; --i) {
    std::uint64_t prefix = 0;
    for (std::size_t j = 0; j < i; ++j) prefix += segs_[j].size();
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

void M1::record(const std::vector<Group>& groups) {
  const std::uint64_t b = stats_.batches;
  for (const auto& g : groups)
    for (std::size_t i = 0; i < g.ops.size(); ++i) lin_.push_back({g.ops[i], g.results[i], b, rt_.step()});
}

void M1::audit_capacity() {
  std::size_t total = 0;
  for (std::size_t k = 0; k < segs_.size(); ++k) {
    total += segs_[k].size();
    const bool last = k + 1 == segs_.size();
    if (segs_[k].size() > seq::segment_capacity(k))
      failures_.push_back("batch " + std::to_string(stats_.batches) + ": S[" + std::to_string(k) + "] over capacity");
    if (!last && segs_[k].size() != seq::segment_capacity(k))
      failures_.push_back("batch " + std::to_string(stats_.batches) + ": S[" + std::to_string(k) + "] not full");
    if (segs_[k].empty())
      failures_.push_back("batch " + std::to_string(stats_.batches) + ": empty S[" + std::to_string(k) + "]");
    if (opts_.audit_segments)
      if (auto e = segs_[k].audit(); !e.empty()) failures_.push_back("S[" + std::to_string(k) + "] " + e);
  }
  if (total != n_) failures_.push_back("batch " + std::to_string(stats_.batches) + ": size bookkeeping off");
}

}  // namespace wsm::maps
