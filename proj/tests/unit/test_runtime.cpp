#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "wsm/runtime/runtime.hpp"

using namespace wsm::rt;

namespace {

Task<> chain(Runtime& rt, int len) {
  for (int i = 1; i < len; ++i) co_await rt.tick();
}

Task<> tree(Runtime& rt, int depth) {
  if (depth == 0) co_return;
  co_await rt.fork(tree(rt, depth - 1), tree(rt, depth - 1));
}

Task<int> add_one(int x) { co_return x + 1; }

Task<> inline_calls(Runtime& rt, int& out) {
  int v = co_await add_one(1);
  v = co_await add_one(v);
  co_await rt.tick();
  out = v;
}

Task<> thrower(Runtime& rt) {
  co_await rt.tick();
  throw std::runtime_error("boom");
}

Task<> forever_parked(Runtime& rt) { co_await rt.park("test lock"); }

Task<> waiter(Runtime& rt, Thread** slot, int& done) {
  *slot = rt.current();
  co_await rt.park("wait");
  ++done;
}

Task<> waker(Runtime& rt, Thread** slot) {
  for (int i = 0; i < 5; ++i) co_await rt.tick();
  rt.wake(*slot);
}

Task<> flat(Runtime& rt, int n) {
  for (int i = 0; i < n; ++i) co_await rt.spawn(chain(rt, 1), rt.current()->owner, rt.current()->lane);
}

Task<> switcher(Runtime& rt) {
  co_await rt.tick();
  co_await rt.switch_to(Owner::ds, Lane::q1);
  co_await rt.tick();
  co_await rt.switch_to(Owner::program, Lane::q2);
}

}  // namespace

TEST_CASE("a chain of ten nodes takes ten steps") {
  Runtime rt({.p = 4});
  rt.spawn_root(chain(rt, 10), Owner::program);
  auto m = rt.run();
  CHECK(m.steps == 10);
  CHECK(m.T1 == 10);
  CHECK(m.T_inf == 10);
}

TEST_CASE("complete fork tree has the expected work and span") {
  Runtime rt({.p = 1000});
  rt.spawn_root(tree(rt, 3), Owner::program);
  auto m = rt.run();
  // 7 fork nodes + 8 leaves + 7 joins
  CHECK(m.T1 == 22);
  CHECK(m.T_inf == 7);
  CHECK(m.steps == 7);
  CHECK(m.progress_violations == 0);
}

TEST_CASE("greedy step bound") {
  Runtime rt({.p = 2});
  rt.spawn_root(tree(rt, 4), Owner::program);
  auto m = rt.run();
  CHECK(m.steps <= m.T1 / 2 + m.T_inf);
  CHECK(m.steps >= m.T_inf);
}

TEST_CASE("inline awaited tasks stay inside one node") {
  Runtime rt({.p = 1});
  int out = 0;
  rt.spawn_root(inline_calls(rt, out), Owner::program);
  auto m = rt.run();
  CHECK(out == 3);
  CHECK(m.T1 == 2);
}

TEST_CASE("exceptions propagate out of run") {
  Runtime rt({.p = 1});
  rt.spawn_root(thrower(rt), Owner::program);
  CHECK_THROWS_WITH_AS(rt.run(), "boom", std::runtime_error);
}

TEST_CASE("parked threads left over are reported as deadlock") {
  Runtime rt({.p = 1});
  rt.spawn_root(forever_parked(rt), Owner::ds);
  try {
    rt.run();
    FAIL("expected deadlock");
  } catch (const DeadlockError& e) {
    REQUIRE(e.blocked().size() == 1);
    CHECK(e.blocked()[0] == "test lock");
  }
}

TEST_CASE("wake carries the waker's path into the waiter") {
  Runtime rt({.p = 4});
  Thread* slot = nullptr;
  int done = 0;
  rt.spawn_root(waiter(rt, &slot, done), Owner::program);
  rt.spawn_root(waker(rt, &slot), Owner::program);
  auto m = rt.run();
  CHECK(done == 1);
  CHECK(m.T_inf == 7);
}

TEST_CASE("weak priority executes at most half from each queue") {
  Runtime rt({.p = 4, .scheduler = SchedulerKind::weak_priority});
  for (int i = 0; i < 8; ++i) rt.spawn_root(chain(rt, 1), Owner::ds, Lane::q1);
  for (int i = 0; i < 8; ++i) rt.spawn_root(chain(rt, 1), Owner::program, Lane::q2);
  std::vector<StepInfo> infos;
  rt.add_step_observer([&](const StepInfo& s) { infos.push_back(s); });
  auto m = rt.run();
  CHECK(m.steps == 4);
  CHECK(m.quota_violations == 0);
  for (const auto& s : infos) {
    CHECK(s.executed_q1 == 2);
    CHECK(s.executed_q2 == 2);
  }
}

TEST_CASE("weak priority leaves processors idle rather than borrowing") {
  Runtime rt({.p = 4, .scheduler = SchedulerKind::weak_priority});
  for (int i = 0; i < 8; ++i) rt.spawn_root(chain(rt, 1), Owner::ds, Lane::q1);
  auto m = rt.run();
  CHECK(m.steps == 4);
  CHECK(m.step_classes.high_busy == 4);
}

TEST_CASE("spawned nodes do not run in the step that created them") {
  Runtime rt({.p = 8, .record_trace = true});
  rt.spawn_root(flat(rt, 3), Owner::program);
  rt.run();
  const auto& tr = rt.trace();
  REQUIRE(!tr.empty());
  CHECK(tr[0].step == 0);
  for (std::size_t i = 1; i < tr.size(); ++i) {
    CHECK(tr[i].step >= tr[i - 1].step);
    if (tr[i].step == tr[i - 1].step) CHECK(tr[i].node_id > tr[i - 1].node_id);
  }
  std::ostringstream os;
  rt.write_trace(os);
  CHECK(os.str().find("program") != std::string::npos);
}

TEST_CASE("owner switches split the counts") {
  Runtime rt({.p = 2});
  rt.spawn_root(switcher(rt), Owner::program);
  auto m = rt.run();
  CHECK(m.T1 == 3);
  CHECK(m.ds_work == 2);
  CHECK(m.ds_span == 2);
  CHECK(m.T_inf == 3);
}

TEST_CASE("configuration errors") {
  CHECK_THROWS_AS(Runtime({.p = 0}), UsageError);
  CHECK_THROWS_AS(Runtime({.p = 1, .scheduler = SchedulerKind::weak_priority}), UsageError);
}

TEST_CASE("shuffled scheduling keeps the same DAG and the same quotas") {
  for (std::uint64_t seed : {1u, 2u, 3u, 99u}) {
    Runtime g({.p = 4, .shuffle_seed = seed});
    g.spawn_root(tree(g, 6), Owner::ds);
    auto m = g.run();
    CHECK(m.ds_work == 127 + 63);  // leaves and inner forks, plus join nodes
    CHECK(m.ds_span == 13);
    CHECK(m.progress_violations == 0);

    Runtime w({.p = 4, .scheduler = SchedulerKind::weak_priority, .shuffle_seed = seed});
    w.spawn_root(tree(w, 5), Owner::ds, Lane::q1);
    w.spawn_root(tree(w, 5), Owner::program, Lane::q2);
    auto mw = w.run();
    CHECK(mw.quota_violations == 0);
    CHECK(mw.quota_checked_steps == mw.steps);
  }
}

TEST_CASE("retag changes the class of later nodes only") {
  Runtime rt({.p = 1});
  auto body = [](Runtime& r) -> Task<> {
    r.retag(Owner::buffer, Lane::q2);
    co_await r.tick();
    co_await r.tick();
  };
  rt.spawn_root(body(rt), Owner::program);
  auto m = rt.run();
  CHECK(m.T1 == 1);
  CHECK(m.buffer_work == 2);
}

TEST_CASE("completion parks only when the value is not there yet") {
  Runtime rt({.p = 2});
  Completion early, late;
  int finished = 0;
  auto wait = [](Runtime& r, Completion& c, int& f) -> Task<> {
    co_await wait_for(r, c, "result");
    ++f;
  };
  auto deliver = [](Runtime& r, Completion& c, int delay) -> Task<> {
    for (int i = 0; i < delay; ++i) co_await r.tick();
    c.complete(r);
  };
  early.done = true;
  rt.spawn_root(wait(rt, early, finished), Owner::program);
  rt.spawn_root(wait(rt, late, finished), Owner::program);
  rt.spawn_root(deliver(rt, late, 5), Owner::ds);
  rt.run();
  CHECK(finished == 2);
}
