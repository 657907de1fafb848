#include <algorithm>
#include <cmath>
#include <map>

#include "wsm/seq/wsmap.hpp"
#include "wsm/sort/sort.hpp"

namespace wsm::sort {

double entropy(const std::vector<std::uint64_t>& counts) {
  std::uint64_t n = 0;
  for (auto c : counts) {
    if (c == 0) throw UsageError("entropy: zero count");
    n += c;
  }
  double h = 0;
  for (auto c : counts) {
    double q = static_cast<double>(c) / static_cast<double>(n);
    h += q * std::log(1.0 / q);
  }
  return h;
}

double entropy_of(const std::vector<Key>& items) {
  if (items.empty()) return 0.0;
  std::map<Key, std::uint64_t> freq;
  for (Key k : items) ++freq[k];
  std::vector<std::uint64_t> counts;
  counts.reserve(freq.size());
  for (const auto& kv : freq) counts.push_back(kv.second);
  return entropy(counts);
}

SortResult esort(const std::vector<Key>& items) {
  seq::WorkingSetMap<std::vector<std::size_t>> dict;
  for (std::size_t i = 0; i < items.size(); ++i) {
    auto f = dict.search(items[i]);
    if (f.found) f.value->push_back(i);
    else dict.insert_new(items[i], {i});
  }

  using Entry = std::pair<Key, const std::vector<std::size_t>*>;
  std::uint64_t merge_cmp = 0;
  auto less = [&merge_cmp](const Entry& a, const Entry& b) {
    ++merge_cmp;
    return a.first < b.first;
  };
  std::vector<Entry> merged, seg, next;
  for (std::size_t k = 0; k < dict.segment_count(); ++k) {
    seg.clear();
    dict.for_each_sorted(k, [&seg](Key key, const std::vector<std::size_t>& pos) { seg.emplace_back(key, &pos); });
    next.clear();
    next.reserve(merged.size() + seg.size());
    std::merge(merged.begin(), merged.end(), seg.begin(), seg.end(), std::back_inserter(next), less);
    merged.swap(next);
  }

  SortResult r;
  r.positions.reserve(items.size());
  for (const auto& e : merged) r.positions.insert(r.positions.end(), e.second->begin(), e.second->end());
  r.comparisons = dict.comparisons() + merge_cmp;
  return r;
}

}  // namespace wsm::sort
