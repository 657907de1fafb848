#include <map>
#include <random>

#include "doctest.h"
#include "wsm/runtime/activation.hpp"
#include "wsm/runtime/locks.hpp"
#include "wsm/runtime/metrics_json.hpp"
#include "wsm/runtime/parallel.hpp"

using namespace wsm::rt;

TEST_CASE("try lock") {
  TryLock f;
  CHECK(f.try_lock());
  CHECK_FALSE(f.try_lock());
  f.unlock();
  CHECK(f.try_lock());
  f.unlock();
  CHECK_THROWS_AS(f.unlock(), UsageError);
}

TEST_CASE("dedicated lock core: golden traces") {
  SUBCASE("free lock enters immediately") {
    DedicatedLockCore l(3);
    CHECK(l.acquire(2));
    CHECK(l.holder() == 2);
  }
  SUBCASE("cyclic scan from holder") {
    DedicatedLockCore l(3);
    CHECK(l.acquire(1));
    CHECK_FALSE(l.acquire(3));
    CHECK_FALSE(l.acquire(2));
    CHECK(l.release() == 2);
    CHECK(l.release() == 3);
    CHECK(l.release() == 0);
    CHECK(l.count() == 0);
  }
  SUBCASE("wraparound") {
    DedicatedLockCore l(3);
    CHECK(l.acquire(3));
    CHECK_FALSE(l.acquire(1));
    CHECK(l.release() == 1);
  }
  SUBCASE("duplicate keys") {
    DedicatedLockCore l(2);
    CHECK(l.acquire(1));
    CHECK_THROWS_AS(l.acquire(1), UsageError);
    CHECK_FALSE(l.acquire(2));
    CHECK_THROWS_AS(l.acquire(2), UsageError);
    CHECK_THROWS_AS(l.acquire(3), UsageError);
  }
  SUBCASE("release of free lock") {
    DedicatedLockCore l(2);
    CHECK_THROWS_AS(l.release(), UsageError);
  }
}

TEST_CASE("dedicated lock core: a waiter sees at most k-1 other resumptions") {
  for (int k : {1, 2, 3, 5, 8}) {
    std::mt19937_64 rng(1234 + k);
    DedicatedLockCore l(k);
    std::map<int, int> overtaken;  // waiting key -> resumptions seen
    int max_seen = 0;
    for (int it = 0; it < 20000; ++it) {
      bool do_acquire = rng() % 2 == 0;
      if (do_acquire) {
        int key = 1 + static_cast<int>(rng() % static_cast<unsigned>(k));
        if ((l.count() > 0 && l.holder() == key) || overtaken.count(key)) continue;
        if (!l.acquire(key)) overtaken[key] = 0;
      } else if (l.count() > 0) {
        int next = l.release();
        if (next != 0) {
          REQUIRE(overtaken.count(next));
          overtaken.erase(next);
          for (auto& [key, seen] : overtaken) max_seen = std::max(max_seen, ++seen);
        }
      }
    }
    CHECK(max_seen <= k - 1);
  }
}

namespace {

Task<> critical(Runtime& rt, DedicatedLock& lock, int key, int& inside, int& max_inside, int& done) {
  co_await lock.acquire(key);
  ++inside;
  max_inside = std::max(max_inside, inside);
  co_await rt.tick();
  co_await rt.tick();
  --inside;
  lock.release();
  ++done;
}

Task<> try_once(TryLock& f, int& wins) {
  if (f.try_lock()) ++wins;
  co_return;
}

Task<bool> counting_process(Runtime& rt, int& runs, int& budget) {
  ++runs;
  co_await rt.tick();
  if (budget > 0) --budget;
  co_return true;
}

Task<> activate_twice(Runtime& rt, ActivationGate& g) {
  co_await rt.fork(g.activate(), g.activate());
}

Task<> leaf_mark(std::vector<int>& hits, std::size_t i) {
  ++hits[i];
  co_return;
}

Task<> mark_all(Runtime& rt, std::vector<int>& hits) {
  co_await parallel_for(rt, hits.size(), [&hits](std::size_t i) { return leaf_mark(hits, i); });
}

}  // namespace

TEST_CASE("dedicated lock: mutual exclusion under the simulator") {
  Runtime rt({.p = 8});
  DedicatedLock lock(rt, 4, "L");
  int inside = 0, max_inside = 0, done = 0;
  for (int key = 1; key <= 4; ++key)
    rt.spawn_root(critical(rt, lock, key, inside, max_inside, done), Owner::ds);
  rt.run();
  CHECK(done == 4);
  CHECK(max_inside == 1);
  CHECK(lock.contended_acquires() == 3);
}

TEST_CASE("two same-step test-and-sets: exactly one wins") {
  Runtime rt({.p = 4, .record_trace = true});
  TryLock f;
  int wins = 0;
  rt.spawn_root(try_once(f, wins), Owner::ds);
  rt.spawn_root(try_once(f, wins), Owner::ds);
  auto m = rt.run();
  CHECK(m.steps == 1);
  CHECK(wins == 1);
}

TEST_CASE("activation gate") {
  Runtime rt({.p = 4});
  int runs = 0;
  int budget = 0;
  ActivationGate g([&] { return budget > 0; },
                   [&]() { return counting_process(rt, runs, budget); });

  SUBCASE("not ready: nothing runs") {
    rt.spawn_root(g.activate(), Owner::ds);
    rt.run();
    CHECK(runs == 0);
  }
  SUBCASE("ready: runs while the predicate holds") {
    budget = 3;
    rt.spawn_root(g.activate(), Owner::ds);
    rt.run();
    CHECK(runs == 3);
    CHECK_FALSE(g.active());
  }
  SUBCASE("concurrent activations never overlap") {
    budget = 2;
    rt.spawn_root(activate_twice(rt, g), Owner::ds);
    rt.run();
    CHECK(runs == 2);
    CHECK(g.runs() == 2);
  }
}

TEST_CASE("parallel_for visits every index once") {
  Runtime rt({.p = 4});
  std::vector<int> hits(37, 0);
  rt.spawn_root(mark_all(rt, hits), Owner::ds);
  auto m = rt.run();
  for (int h : hits) CHECK(h == 1);
  CHECK(m.ds_span <= 2 * 6 + 1);
}

TEST_CASE("charged chains have work and span of the fork tree") {
  Runtime rt({.p = 64});
  rt.spawn_root(charge_chains(rt, {5, 1, 9, 3}), Owner::ds);
  auto m = rt.run();
  // 3 forks, 3 joins, leaves 5+1+9+3
  CHECK(m.ds_work == 3 + 3 + 18);
  CHECK(m.ds_span == 2 + 9 + 2);
  auto j = to_json(m);
  CHECK(j["per_structure"]["ds"]["work"] == 24);
  CHECK(j["p"] == 64);
}
