#include "wsm/bench/probes.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "wsm/pbuffer/pbuffer.hpp"
#include "wsm/runtime/activation.hpp"
#include "wsm/runtime/locks.hpp"
#include "wsm/sort/sort.hpp"
#include "wsm/tree23/batch_tasks.hpp"

namespace wsm::bench::probe {

namespace {

std::vector<std::size_t> reference_order(const std::vector<Key>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  return idx;
}

rt::ExecutionMetrics run_pesort(const std::vector<Key>& v, std::vector<std::size_t>& out) {
  rt::Runtime rt({.p = 4});
  sort::PesortStats st;
  rt.spawn_root(sort::pesort(rt, v, out, st), rt::Owner::program);
  return rt.run();
}

rt::Task<> pivot_into(rt::Runtime& rt, const std::vector<Key>& items, const std::vector<std::size_t>& idx, Key& out) {
  sort::PesortStats st;
  out = co_await sort::ppivot(rt, items, idx, 0, items.size(), st);
}

std::vector<Key> distinct_shuffled(std::mt19937_64& rng, std::size_t n) {
  std::vector<Key> v(n);
  std::iota(v.begin(), v.end(), 1);
  std::shuffle(v.begin(), v.end(), rng);
  return v;
}

}  // namespace

SortCheck sort_outputs(std::uint64_t seed, std::size_t inputs, std::size_t max_n) {
  std::mt19937_64 rng(seed);
  SortCheck c;
  for (std::size_t t = 0; t < inputs; ++t) {
    const std::size_t n = 1 + rng() % max_n;
    std::vector<Key> v(n);
    if (t % 3 == 0) {
      v = distinct_shuffled(rng, n);
    } else {
      // skewed: key i with weight 1/i^s over a small universe
      const std::size_t u = 1 + rng() % 200;
      const double s = 0.5 * static_cast<double>(t % 5);
      std::vector<double> w(u);
      for (std::size_t i = 0; i < u; ++i) w[i] = 1.0 / std::pow(static_cast<double>(i + 1), s);
      std::discrete_distribution<std::size_t> d(w.begin(), w.end());
      for (auto& x : v) x = static_cast<Key>(d(rng) * 7919 % 100003);
    }
    ++c.inputs;
    const auto ref = reference_order(v);
    const auto e = sort::esort(v);
    std::vector<std::size_t> p;
    run_pesort(v, p);
    if (e.positions != ref || p != ref) ++c.mismatches;
    const double nd = static_cast<double>(n);
    c.esort_ratio = std::max(c.esort_ratio, static_cast<double>(e.comparisons) / (nd * sort::entropy_of(v) + nd));
    if (t % 3 == 0 && e.comparisons + 1 < n) ++c.below_lower_bound;
  }
  return c;
}

double pesort_span_ratio(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto v = distinct_shuffled(rng, n);
  std::vector<std::size_t> out;
  auto m = run_pesort(v, out);
  const double lg = std::log2(static_cast<double>(n));
  return static_cast<double>(m.T_inf) / (lg * lg);
}

std::size_t ppivot_violations(std::uint64_t seed, std::size_t lists, std::size_t min_k, std::size_t max_k) {
  std::mt19937_64 rng(seed);
  std::size_t bad = 0;
  for (std::size_t i = 0; i < lists; ++i) {
    const std::size_t k = min_k + rng() % (max_k - min_k + 1);
    auto v = distinct_shuffled(rng, k);  // keys 1..k, so a pivot's rank is the pivot
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    rt::Runtime rt({.p = 4});
    Key pivot = 0;
    rt.spawn_root(pivot_into(rt, v, idx, pivot), rt::Owner::program);
    rt.run();
    const double r = static_cast<double>(pivot), kd = static_cast<double>(k);
    if (r < kd / 4 || r > 3 * kd / 4) ++bad;
  }
  return bad;
}

TreeCheck tree_sequences(std::uint64_t seed, std::size_t sequences) {
  using Op = tree23::TreeOp<int>;
  std::mt19937_64 rng(seed);
  TreeCheck c;
  for (std::size_t s = 0; s < sequences; ++s) {
    tree23::BatchTree<int> t;
    std::map<Key, int> oracle;
    const std::size_t rounds = 5 + rng() % 20;
    const Key universe = static_cast<Key>(20 + rng() % 500);
    bool broken = false;
    for (std::size_t r = 0; r < rounds && !broken; ++r) {
      std::map<Key, Op> batch;
      const std::size_t b = 1 + rng() % 60;
      for (std::size_t i = 0; i < b; ++i) {
        Key k = static_cast<Key>(rng() % static_cast<std::uint64_t>(universe));
        int v = static_cast<int>(rng() % 100000);
        switch (rng() % 3) {
          case 0: batch[k] = {k, tree23::TreeOpKind::insert, v}; break;
          case 1: batch[k] = {k, tree23::TreeOpKind::search, 0}; break;
          default: batch[k] = {k, tree23::TreeOpKind::erase, 0}; break;
        }
      }
      std::vector<Op> ops;
      for (auto& kv : batch) ops.push_back(kv.second);
      auto res = t.batch_op(ops);
      ++c.batches;
      for (std::size_t i = 0; i < ops.size(); ++i) {
        if (res[i].found != (oracle.count(ops[i].key) > 0)) broken = true;
        if (ops[i].kind == tree23::TreeOpKind::insert) oracle[ops[i].key] = ops[i].payload;
        if (ops[i].kind == tree23::TreeOpKind::erase) oracle.erase(ops[i].key);
      }
      if (!t.audit().empty() || t.size() != oracle.size()) broken = true;
    }
    if (broken) ++c.audit_failures;
    ++c.sequences;

    // a random subset of handles in random order comes back sorted by key
    std::vector<Key> keys;
    for (auto& kv : oracle)
      if (rng() % 2) keys.push_back(kv.first);
    std::shuffle(keys.begin(), keys.end(), rng);
    std::vector<tree23::Handle> hs;
    for (Key k : keys) hs.push_back(t.find(k).handle);
    auto back = t.reverse_index(hs);
    std::sort(keys.begin(), keys.end());
    bool ok = back.size() == keys.size();
    for (std::size_t i = 0; ok && i < keys.size(); ++i) ok = back[i].key == keys[i] && t.payload(back[i].handle) == oracle[keys[i]];
    if (!ok) ++c.reverse_failures;
  }
  return c;
}

namespace {

rt::Task<> batch_into(rt::Runtime& rt, tree23::BatchTree<int>& t, std::vector<tree23::TreeOp<int>> ops) {
  (void)co_await tree23::run_batch(rt, t, std::move(ops));
}

}  // namespace

double tree_span_slope(std::uint64_t seed, int lo_exp, int hi_exp) {
  std::mt19937_64 rng(seed);
  std::vector<double> xs, ys;
  for (int e = lo_exp; e <= hi_exp; ++e) {
    const Key n = Key{1} << e;
    tree23::BatchTree<int> t;
    std::vector<tree23::TreeOp<int>> fill;
    for (Key k = 0; k < n; ++k) fill.push_back({k, tree23::TreeOpKind::insert, 0});
    t.batch_op(fill);
    std::set<Key> probe;
    while (probe.size() < 16) probe.insert(static_cast<Key>(rng() % static_cast<std::uint64_t>(n)));
    std::vector<tree23::TreeOp<int>> ops;
    for (Key k : probe) ops.push_back({k, tree23::TreeOpKind::search, 0});
    rt::Runtime rt({.p = 4});
    rt.spawn_root(batch_into(rt, t, ops), rt::Owner::ds);
    auto m = rt.run();
    xs.push_back(static_cast<double>(e));
    ys.push_back(static_cast<double>(m.ds_span));
  }
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

namespace {

// Holds the lock for a few steps so that every waiter is parked before the
// first release.
rt::Task<> lock_holder(rt::Runtime& rt, rt::DedicatedLock& l, int key, std::string& trace) {
  co_await l.acquire(key);
  trace += std::to_string(key);
  for (int i = 0; i < 6; ++i) co_await rt.tick();
  l.release();
}

rt::Task<> lock_waiter(rt::Runtime& rt, rt::DedicatedLock& l, int key, int delay, std::string& trace) {
  for (int i = 0; i < delay; ++i) co_await rt.tick();
  co_await l.acquire(key);
  trace += " " + std::to_string(key);
  co_await rt.tick();
  l.release();
}

}  // namespace

std::vector<std::string> lock_golden_mismatches() {
  // holder, waiters -> acquisition order, scanning keys cyclically after the holder
  struct Golden {
    int k, holder;
    std::vector<int> waiters;
    const char* order;
  };
  static const std::vector<Golden> golden = {
      {2, 1, {}, "1"},        {2, 1, {2}, "1 2"},        {2, 2, {}, "2"},         {2, 2, {1}, "2 1"},
      {3, 1, {}, "1"},        {3, 1, {2}, "1 2"},        {3, 1, {3}, "1 3"},      {3, 1, {2, 3}, "1 2 3"},
      {3, 2, {}, "2"},        {3, 2, {1}, "2 1"},        {3, 2, {3}, "2 3"},      {3, 2, {1, 3}, "2 3 1"},
      {3, 3, {}, "3"},        {3, 3, {1}, "3 1"},        {3, 3, {2}, "3 2"},      {3, 3, {1, 2}, "3 1 2"},
  };
  std::vector<std::string> bad;
  for (const auto& g : golden) {
    auto arrival = g.waiters;
    std::sort(arrival.begin(), arrival.end());
    do {  // every arrival order gives the same trace
      rt::Runtime rt({.p = 4});
      rt::DedicatedLock lock(rt, g.k, "golden");
      std::string trace;
      rt.spawn_root(lock_holder(rt, lock, g.holder, trace), rt::Owner::ds);
      for (std::size_t i = 0; i < arrival.size(); ++i)
        rt.spawn_root(lock_waiter(rt, lock, arrival[i], static_cast<int>(i) + 1, trace), rt::Owner::ds);
      rt.run();
      if (trace != g.order) {
        std::string w;
        for (int x : arrival) w += std::to_string(x);
        bad.push_back("k=" + std::to_string(g.k) + " holder=" + std::to_string(g.holder) + " waiters=" + w +
                      " order=" + trace);
      }
    } while (std::next_permutation(arrival.begin(), arrival.end()));
  }
  return bad;
}

namespace {

struct Req {
  int id = -1;
  rt::Completion* done = nullptr;
};

// Flushes whenever the buffer has something and completes what it pulls out.
struct Sink {
  rt::Runtime& rt;
  pbuf::ParallelBuffer<Req> buf;
  rt::ActivationGate gate;
  std::map<int, int> seen;

  Sink(rt::Runtime& r, std::size_t p)
      : rt(r),
        buf(r, p, [this] { return gate.activate(); }),
        gate([this] { return !buf.empty(); }, [this] { return consume(); }) {}

  rt::Task<bool> consume() {
    std::vector<Req> got;
    co_await buf.flush(got);
    for (auto& q : got) {
      ++seen[q.id];
      q.done->complete(rt);
    }
    co_return true;
  }
};

rt::Task<> submitter(rt::Runtime& rt, Sink& s, int id, rt::Completion& c, int think) {
  for (int i = 0; i < think; ++i) co_await rt.tick();
  std::size_t proc = rt.processor();
  rt.retag(rt::Owner::buffer, rt::Lane::q2);
  co_await rt.tick();
  co_await s.buf.submit(Req{id, &c}, proc);
  rt.retag(rt::Owner::program, rt::Lane::q2);
  co_await rt::wait_for(rt, c, "submit");
}

rt::Task<> bare_submit(pbuf::ParallelBuffer<int>& b, std::size_t proc, int v) { co_await b.submit(v, proc); }
rt::Task<> noop() { co_return; }
rt::Task<> flush_into(pbuf::ParallelBuffer<int>& b, std::vector<int>& out) { co_await b.flush(out); }

}  // namespace

std::size_t pbuffer_lost_or_duplicated(std::uint64_t seed, std::size_t runs) {
  std::size_t bad = 0;
  for (std::size_t r = 0; r < runs; ++r) {
    const std::uint64_t s = seed + r;
    const std::size_t p = 2 + s % 15;
    rt::Runtime rt({.p = p, .shuffle_seed = s});
    Sink sink(rt, p);
    const int n = 150 + static_cast<int>(s % 100);
    std::vector<rt::Completion> done(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      rt.spawn_root(submitter(rt, sink, i, done[static_cast<std::size_t>(i)], static_cast<int>((i * 7919 + s) % 17)),
                    rt::Owner::program);
    try {
      rt.run();
    } catch (const rt::DeadlockError&) {
      bad += static_cast<std::size_t>(n);
      continue;
    }
    for (int i = 0; i < n; ++i) {
      auto it = sink.seen.find(i);
      if (it == sink.seen.end() || it->second != 1) ++bad;
    }
  }
  return bad;
}

double flush_span_ratio(std::size_t p, std::size_t b) {
  rt::Runtime rt({.p = p});
  pbuf::ParallelBuffer<int> buf(rt, p, [] { return noop(); });
  for (std::size_t i = 0; i < b; ++i) {
    rt.spawn_root(bare_submit(buf, (i * 5) % p, static_cast<int>(i)), rt::Owner::buffer);
    rt.run();
  }
  std::vector<int> out;
  rt.spawn_root(flush_into(buf, out), rt::Owner::ds);
  rt.run();
  if (out.size() != b) return INFINITY;
  const double lp = std::log2(static_cast<double>(p)), lb = std::log2(static_cast<double>(std::max<std::size_t>(b, 1)));
  return static_cast<double>(buf.stats().flush_spans.back()) / (lp + lb + 1.0);
}

}  // namespace wsm::bench::probe
