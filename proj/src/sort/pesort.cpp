#include <algorithm>
#include <random>

#include "wsm/runtime/parallel.hpp"
#include "wsm/sort/sort.hpp"

namespace wsm::sort {

using rt::Runtime;
using rt::Task;

std::size_t pivot_block_size(std::size_t k) {
  std::size_t s = 0;
  while ((std::size_t{1} << s) < k) ++s;  // ceil(log2 k)
  return std::max<std::size_t>(s, 1);
}

namespace {

struct Counting {
  std::uint64_t* n;
  bool operator()(Key a, Key b) const {
    ++*n;
    return a < b;
  }
};

struct BlockJob {
  const std::vector<Key>* items;
  const std::vector<std::size_t>* idx;
  std::size_t lo, hi, block;
  std::vector<Key>* medians;
  PesortStats* stats;
};

Task<> block_medians(Runtime& rt, const BlockJob* job, std::size_t jlo, std::size_t jhi) {
  if (jhi - jlo > 1) {
    std::size_t mid = jlo + (jhi - jlo) / 2;
    co_await rt.fork(block_medians(rt, job, jlo, mid), block_medians(rt, job, mid, jhi));
    co_return;
  }
  std::size_t b = job->lo + jlo * job->block;
  std::size_t e = std::min(job->hi, b + job->block);
  std::vector<Key> blk;
  blk.reserve(e - b);
  for (std::size_t i = b; i < e; ++i) blk.push_back((*job->items)[(*job->idx)[i]]);
  std::uint64_t cmp = 0;
  auto m = blk.begin() + static_cast<long>((blk.size() - 1) / 2);
  std::nth_element(blk.begin(), m, blk.end(), Counting{&cmp});
  (*job->medians)[jlo] = *m;
  job->stats->comparisons += cmp;
  co_await rt::charge_chain(rt, cmp);
}

enum Cls : std::uint8_t { kLess, kEqual, kGreater };

struct Tri {
  std::uint32_t c[3] = {0, 0, 0};
  Tri operator+(const Tri& o) const {
    Tri r;
    for (int i = 0; i < 3; ++i) r.c[i] = c[i] + o.c[i];
    return r;
  }
};

struct Ctx {
  Runtime& rt;
  const std::vector<Key>& items;
  std::vector<std::size_t>& a;
  std::vector<std::size_t> b;
  std::vector<std::uint8_t> cls;
  PesortStats& stats;
  PesortOptions opts;
  std::mt19937_64 rng;
};

Task<> upsweep(Ctx& c, std::vector<Tri>& sums, std::size_t lo, std::size_t hi, std::size_t node, Key pivot) {
  if (hi - lo == 1) {
    Key x = c.items[c.a[lo]];
    ++c.stats.comparisons;
    std::uint8_t k = kEqual;
    if (x < pivot) k = kLess;
    else {
      ++c.stats.comparisons;
      if (pivot < x) k = kGreater;
    }
    c.cls[lo] = k;
    sums[node] = Tri{};
    sums[node].c[k] = 1;
    co_return;
  }
  std::size_t mid = lo + (hi - lo) / 2;
  co_await c.rt.fork(upsweep(c, sums, lo, mid, 2 * node, pivot), upsweep(c, sums, mid, hi, 2 * node + 1, pivot));
  sums[node] = sums[2 * node] + sums[2 * node + 1];
}

Task<> downsweep(Ctx& c, const std::vector<Tri>& sums, std::size_t lo, std::size_t hi, std::size_t node,
                 Tri offset, std::size_t base, const Tri* total) {
  if (hi - lo == 1) {
    std::uint8_t k = c.cls[lo];
    std::size_t dest = base + offset.c[k];
    if (k >= kEqual) dest += total->c[kLess];
    if (k == kGreater) dest += total->c[kEqual];
    c.b[dest] = c.a[lo];
    co_return;
  }
  std::size_t mid = lo + (hi - lo) / 2;
  co_await c.rt.fork(downsweep(c, sums, lo, mid, 2 * node, offset, base, total),
                     downsweep(c, sums, mid, hi, 2 * node + 1, offset + sums[2 * node], base, total));
}

Task<> copy_back(Ctx& c, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) {
    c.a[lo] = c.b[lo];
    co_return;
  }
  std::size_t mid = lo + (hi - lo) / 2;
  co_await c.rt.fork(copy_back(c, lo, mid), copy_back(c, mid, hi));
}

Task<> init_positions(Ctx& c, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) {
    c.a[lo] = lo;
    co_return;
  }
  std::size_t mid = lo + (hi - lo) / 2;
  co_await c.rt.fork(init_positions(c, lo, mid), init_positions(c, mid, hi));
}

Task<Key> random_pivot(Ctx& c, std::size_t lo, std::size_t hi) {
  const std::size_t n = hi - lo;
  for (;;) {
    std::size_t r = lo + static_cast<std::size_t>(c.rng() % n);
    Key x = c.items[c.a[r]];
    std::size_t less = 0, greater = 0;
    for (std::size_t i = lo; i < hi; ++i) {
      Key y = c.items[c.a[i]];
      if (y < x) ++less;
      else if (x < y) ++greater;
    }
    c.stats.comparisons += 2 * n;
    co_await rt::charge_chains(c.rt, std::vector<std::uint32_t>(n, 1));
    if (4 * less <= 3 * n && 4 * greater <= 3 * n) co_return x;
    ++c.stats.pivot_retries;
  }
}

Task<> sort_range(Ctx& c, std::size_t lo, std::size_t hi, std::size_t depth) {
  c.stats.max_depth = std::max(c.stats.max_depth, depth);
  const std::size_t n = hi - lo;
  if (n <= 1) co_return;
  ++c.stats.pivot_rounds;
  Key pivot;
  if (c.opts.random_pivot) pivot = co_await random_pivot(c, lo, hi);
  else pivot = co_await ppivot(c.rt, c.items, c.a, lo, hi, c.stats);

  std::vector<Tri> sums(4 * n);
  co_await upsweep(c, sums, lo, hi, 1, pivot);
  const Tri total = sums[1];
  co_await downsweep(c, sums, lo, hi, 1, Tri{}, lo, &total);
  co_await copy_back(c, lo, hi);

  std::size_t lower_end = lo + total.c[kLess];
  std::size_t upper_begin = lower_end + total.c[kEqual];
  bool has_lower = lower_end > lo + 1;
  bool has_upper = hi > upper_begin + 1;
  if (has_lower && has_upper)
    co_await c.rt.fork(sort_range(c, lo, lower_end, depth + 1), sort_range(c, upper_begin, hi, depth + 1));
  else if (has_lower)
    co_await sort_range(c, lo, lower_end, depth + 1);
  else if (has_upper)
    co_await sort_range(c, upper_begin, hi, depth + 1);
}

}  // namespace

Task<Key> ppivot(Runtime& rt, const std::vector<Key>& items, const std::vector<std::size_t>& idx, std::size_t lo,
                 std::size_t hi, PesortStats& stats) {
  const std::size_t k = hi - lo;
  if (k == 0) throw UsageError("ppivot of an empty list");
  const std::size_t s = pivot_block_size(k);
  const std::size_t c = (k + s - 1) / s;
  std::vector<Key> medians(c);
  BlockJob job{&items, &idx, lo, hi, s, &medians, &stats};
  co_await block_medians(rt, &job, 0, c);

  std::vector<std::size_t> order;
  if (c < 8) {
    order.resize(c);
    for (std::size_t i = 0; i < c; ++i) order[i] = i;
    std::uint64_t cmp = 0;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return Counting{&cmp}(medians[x], medians[y]); });
    stats.comparisons += cmp;
    co_await rt::charge_chain(rt, cmp);
  } else {
    co_await pesort(rt, medians, order, stats, PesortOptions{});
  }
  co_return medians[order[(c - 1) / 2]];
}

Task<> pesort(Runtime& rt, const std::vector<Key>& items, std::vector<std::size_t>& out, PesortStats& stats,
              PesortOptions opts) {
  out.assign(items.size(), 0);
  if (items.empty()) co_return;
  Ctx c{rt, items, out, std::vector<std::size_t>(items.size()), std::vector<std::uint8_t>(items.size()), stats, opts,
        std::mt19937_64(opts.seed)};
  co_await init_positions(c, 0, items.size());
  co_await sort_range(c, 0, items.size(), 0);
}

}  // namespace wsm::sort
