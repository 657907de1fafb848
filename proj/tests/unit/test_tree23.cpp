#include <cmath>
#include <map>
#include <random>

#include "doctest.h"
#include "wsm/tree23/batch_tasks.hpp"

using namespace wsm;
using namespace wsm::tree23;

namespace {

using Tree = BatchTree<int>;
using Op = TreeOp<int>;

Op ins(Key k, int v = 0) { return {k, TreeOpKind::insert, v}; }
Op srch(Key k) { return {k, TreeOpKind::search, 0}; }
Op del(Key k) { return {k, TreeOpKind::erase, 0}; }

Tree range_tree(Key lo, Key hi) {
  Tree t;
  std::vector<Op> ops;
  for (Key k = lo; k <= hi; ++k) ops.push_back(ins(k, static_cast<int>(k)));
  t.batch_op(ops);
  return t;
}

}  // namespace

TEST_CASE("batch op examples") {
  Tree t;
  auto r = t.batch_op({ins(1), ins(2), ins(3)});
  CHECK(t.size() == 3);
  for (auto& x : r) CHECK(t.live(x.handle));
  CHECK(t.audit().empty());

  auto t8 = range_tree(1, 8);
  auto r2 = t8.batch_op({srch(3), del(5), ins(9)});
  CHECK(r2[0].found);
  CHECK(t8.key(r2[0].handle) == 3);
  CHECK(r2[1].found);
  CHECK_FALSE(t8.live(r2[1].handle));
  CHECK_FALSE(r2[2].found);
  CHECK(t8.key(r2[2].handle) == 9);
  CHECK(t8.keys() == std::vector<Key>{1, 2, 3, 4, 6, 7, 8, 9});
  CHECK(t8.audit().empty());
}

TEST_CASE("insert of a present key overwrites the payload") {
  auto t = range_tree(1, 4);
  auto r = t.batch_op({ins(2, 99)});
  CHECK(r[0].found);
  CHECK(t.payload(r[0].handle) == 99);
  CHECK(t.size() == 4);
}

TEST_CASE("batches must be sorted and distinct") {
  Tree t;
  CHECK_THROWS_AS(t.batch_op({ins(2), ins(1)}), UsageError);
  CHECK_THROWS_AS(t.batch_op({ins(1), srch(1)}), UsageError);
}

TEST_CASE("random batches: oracle equivalence, audit, handle stability") {
  std::mt19937_64 rng(12345);
  Tree t;
  std::map<Key, int> oracle;
  std::map<Key, Handle> handles;
  for (int round = 0; round < 1000; ++round) {
    std::size_t b = 1 + rng() % 40;
    std::map<Key, Op> batch;
    for (std::size_t i = 0; i < b; ++i) {
      Key k = static_cast<Key>(rng() % 500);
      int v = static_cast<int>(rng() % 100000);
      switch (rng() % 3) {
        case 0: batch[k] = ins(k, v); break;
        case 1: batch[k] = srch(k); break;
        default: batch[k] = del(k); break;
      }
    }
    std::vector<Op> ops;
    for (auto& kv : batch) ops.push_back(kv.second);
    auto res = t.batch_op(ops);
    for (std::size_t i = 0; i < ops.size(); ++i) {
      const Op& op = ops[i];
      bool present = oracle.count(op.key) > 0;
      REQUIRE(res[i].found == present);
      if (op.kind == TreeOpKind::insert) {
        oracle[op.key] = op.payload;
        if (present) REQUIRE(res[i].handle == handles[op.key]);
        handles[op.key] = res[i].handle;
      } else if (op.kind == TreeOpKind::erase && present) {
        oracle.erase(op.key);
        REQUIRE_FALSE(t.live(handles[op.key]));
        handles.erase(op.key);
      } else if (op.kind == TreeOpKind::search && present) {
        REQUIRE(res[i].handle == handles[op.key]);
      }
    }
    REQUIRE(t.audit().empty());
    REQUIRE(t.size() == oracle.size());
    for (auto& [k, h] : handles) {
      REQUIRE(t.live(h));
      REQUIRE(t.key(h) == k);
      REQUIRE(t.payload(h) == oracle[k]);
    }
  }
}

TEST_CASE("reverse index") {
  auto t = range_tree(1, 10);
  auto h7 = t.find(7).handle, h2 = t.find(2).handle, h5 = t.find(5).handle;
  auto one = t.reverse_index({h5});
  REQUIRE(one.size() == 1);
  CHECK(one[0].key == 5);
  auto three = t.reverse_index({h7, h2, h5});
  CHECK(three[0].key == 2);
  CHECK(three[1].key == 5);
  CHECK(three[2].key == 7);
  std::vector<Handle> all;
  for (Key k = 10; k >= 1; --k) all.push_back(t.find(k).handle);
  auto full = t.reverse_index(all);
  for (std::size_t i = 0; i < full.size(); ++i) CHECK(full[i].key == static_cast<Key>(i + 1));
  t.erase(Key{5});
  CHECK_THROWS_AS(t.reverse_index({h5}), UsageError);
  CHECK(t.audit().empty());
}

TEST_CASE("pop extreme") {
  auto t = range_tree(1, 4);
  CHECK(t.pop_extreme(0, true).empty());
  CHECK(t.size() == 4);
  auto f = t.pop_extreme(2, true);
  REQUIRE(f.size() == 2);
  CHECK(f[0].first == 1);
  CHECK(f[1].first == 2);
  auto b = t.pop_extreme(2, false);
  CHECK(b[0].first == 3);
  CHECK(b[1].first == 4);
  CHECK(t.empty());
  CHECK(t.audit().empty());
  CHECK_THROWS_AS(t.pop_extreme(1, true), UsageError);
}

TEST_CASE("handles of removed leaves stay dead after slot reuse") {
  Tree t;
  auto h = t.insert(1, 1).handle;
  t.erase(Key{1});
  auto h2 = t.insert(2, 2).handle;
  CHECK(h2.slot == h.slot);
  CHECK_FALSE(t.live(h));
  CHECK(t.live(h2));
}

TEST_CASE("bunch") {
  Bunch<int> b;
  CHECK(b.to_batch().empty());
  b.add({1, 2, 3, 4, 5});
  CHECK(b.size() == 5);
  Bunch<int> c;
  c.add({1, 2, 3, 4});
  c.add({5, 6, 7, 8});
  c.add({9, 10, 11, 12});
  auto flat = c.to_batch();
  REQUIRE(flat.size() == 12);
  for (int i = 0; i < 12; ++i) CHECK(flat[static_cast<std::size_t>(i)] == i + 1);
  CHECK(c.empty());
}

namespace {

rt::Task<> batch_job(rt::Runtime& rt, Tree& t, std::vector<Op> ops, std::vector<TreeResult>& out) {
  out = co_await run_batch(rt, t, std::move(ops));
}

}  // namespace

TEST_CASE("charged batch span is logarithmic") {
  const double C = 4.0;
  for (int e = 4; e <= 16; e += 4) {
    Key n = Key{1} << e;
    auto t = range_tree(0, n - 1);
    std::vector<Op> ops;
    for (Key k = 0; k < 16; ++k) ops.push_back(srch(k * (n / 16)));
    rt::Runtime rt({.p = 4});
    std::vector<TreeResult> out;
    rt.spawn_root(batch_job(rt, t, ops, out), rt::Owner::ds);
    auto m = rt.run();
    CHECK(out.size() == 16);
    double lg_n = std::log2(static_cast<double>(n) + 1.0);
    CHECK(static_cast<double>(m.ds_span) <= C * (std::log2(16.0) + lg_n + 1.0));
    CHECK(static_cast<double>(m.ds_work) <= C * 16.0 * (lg_n + 1.0));
  }
}
