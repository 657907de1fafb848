#include "wsm/maps/segment.hpp"

#include <algorithm>

#include "wsm/runtime/parallel.hpp"

namespace wsm::maps {

using tree23::TreeOp;
using tree23::TreeOpKind;

rt::Task<> charge(rt::Runtime& rt, Phases phases) {
  for (auto& ph : phases.list)
    if (!ph.empty()) co_await rt::charge_chains(rt, std::move(ph));
}

std::vector<SegmentStore::Hit> SegmentStore::search(const std::vector<Key>& sorted, Phases& ph) {
  std::vector<Hit> out(sorted.size());
  if (sorted.empty()) return out;
  auto& costs = ph.next();
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i > 0 && !(sorted[i - 1] < sorted[i])) throw UsageError("segment search keys must be strictly increasing");
    auto r = keys_.find(sorted[i]);
    costs.push_back(std::max<std::uint32_t>(r.cost, 1));
    if (r.found) out[i] = Hit{true, r.handle, keys_.payload(r.handle).value};
  }
  return out;
}

std::vector<Entry> SegmentStore::remove(const std::vector<Handle>& found, Phases& ph) {
  if (found.empty()) return {};
  std::vector<Handle> recs;
  std::vector<TreeOp<KeySide>> kill;
  recs.reserve(found.size());
  kill.reserve(found.size());
  for (Handle h : found) {
    recs.push_back(keys_.payload(h).rec);
    kill.push_back({keys_.key(h), TreeOpKind::erase, {}});
  }
  // recency order via the cross-handles
  auto by_stamp = recency_.reverse_index(recs);
  ph.add_uniform(recs.size(), static_cast<std::uint32_t>(recency_.height() + 1));
  std::vector<Entry> out;
  out.reserve(by_stamp.size());
  std::vector<TreeOp<Handle>> kill_rec;
  for (const auto& it : by_stamp) {
    Handle kh = recency_.payload(it.handle);
    out.push_back({keys_.key(kh), keys_.payload(kh).value});
    kill_rec.push_back({it.key, TreeOpKind::erase, {}});
  }
  auto& c1 = ph.next();
  for (auto& r : keys_.batch_op(kill)) c1.push_back(r.cost);
  auto& c2 = ph.next();
  for (auto& r : recency_.batch_op(kill_rec)) c2.push_back(r.cost);
  return out;
}

void SegmentStore::insert_stamped(const std::vector<Entry>& items, std::int64_t first_stamp, Phases& ph) {
  if (items.empty()) return;
  // key-map first (in key order), then the recency leaves, then patch the
  // key side with its recency handle
  std::vector<std::size_t> order(items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return items[a].key < items[b].key; });
  std::vector<TreeOp<KeySide>> kops;
  kops.reserve(items.size());
  for (std::size_t i : order) kops.push_back({items[i].key, TreeOpKind::insert, KeySide{items[i].value, Handle{}}});
  auto kres = keys_.batch_op(kops);
  std::vector<Handle> khandle(items.size());
  auto& c1 = ph.next();
  for (std::size_t j = 0; j < order.size(); ++j) {
    if (kres[j].found) throw UsageError("segment insert of a key that is already present");
    khandle[order[j]] = kres[j].handle;
    c1.push_back(kres[j].cost);
  }
  std::vector<TreeOp<Handle>> rops;
  rops.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i)
    rops.push_back({first_stamp + static_cast<std::int64_t>(i), TreeOpKind::insert, khandle[i]});
  auto rres = recency_.batch_op(rops);
  auto& c2 = ph.next();
  for (std::size_t i = 0; i < items.size(); ++i) {
    keys_.payload(khandle[i]).rec = rres[i].handle;
    c2.push_back(rres[i].cost);
  }
}

void SegmentStore::push_front(const std::vector<Entry>& items, Phases& ph) {
  front_ -= static_cast<std::int64_t>(items.size());
  insert_stamped(items, front_ + 1, ph);
}

void SegmentStore::push_back(const std::vector<Entry>& items, Phases& ph) {
  insert_stamped(items, back_, ph);
  back_ += static_cast<std::int64_t>(items.size());
}

std::vector<Entry> SegmentStore::pop_extreme(std::size_t count, bool front, Phases& ph) {
  count = std::min(count, size());
  if (count == 0) return {};
  auto& c1 = ph.next();
  auto popped = recency_.pop_extreme(count, front, &c1);
  std::vector<Handle> khs;
  khs.reserve(popped.size());
  for (auto& [stamp, kh] : popped) khs.push_back(kh);
  auto sorted = keys_.reverse_index(khs);
  ph.add_uniform(khs.size(), static_cast<std::uint32_t>(keys_.height() + 1));
  std::vector<Entry> out;
  out.reserve(popped.size());
  for (Handle kh : khs) out.push_back({keys_.key(kh), keys_.payload(kh).value});
  std::vector<TreeOp<KeySide>> kill;
  kill.reserve(sorted.size());
  for (const auto& it : sorted) kill.push_back({it.key, TreeOpKind::erase, {}});
  auto& c2 = ph.next();
  for (auto& r : keys_.batch_op(kill)) c2.push_back(r.cost);
  return out;
}

std::vector<Entry> SegmentStore::pop_front(std::size_t count, Phases& ph) { return pop_extreme(count, true, ph); }
std::vector<Entry> SegmentStore::pop_back(std::size_t count, Phases& ph) { return pop_extreme(count, false, ph); }

std::vector<Key> SegmentStore::keys_by_recency() const {
  std::vector<Key> out;
  out.reserve(size());
  recency_.for_each([&](Key, const Handle& kh) { out.push_back(keys_.key(kh)); });
  return out;
}

std::string SegmentStore::audit() const {
  if (auto e = keys_.audit(); !e.empty()) return "key-map: " + e;
  if (auto e = recency_.audit(); !e.empty()) return "recency-map: " + e;
  if (keys_.size() != recency_.size()) return "key-map and recency-map sizes differ";
  std::string err;
  keys_.for_each([&](Key k, const KeySide& side) {
    if (!err.empty()) return;
    if (!recency_.live(side.rec)) {
      err = "dangling recency handle for key " + std::to_string(k);
      return;
    }
    Handle back = recency_.payload(side.rec);
    if (!keys_.live(back) || keys_.key(back) != k) err = "cross-handles disagree for key " + std::to_string(k);
  });
  return err;
}

}  // namespace wsm::maps
