#include <cmath>
#include <map>
#include <memory>

#include "doctest.h"
#include "wsm/pbuffer/pbuffer.hpp"
#include "wsm/runtime/activation.hpp"

using namespace wsm;
using rt::Owner;
using rt::Lane;
using rt::Task;

namespace {

struct Req {
  int id = -1;
  rt::Completion* done = nullptr;
};

// A consumer that flushes whenever the buffer has something and completes
// every request it pulls out.
struct Sink {
  rt::Runtime& rt;
  pbuf::ParallelBuffer<Req> buf;
  rt::ActivationGate gate;
  std::vector<std::vector<int>> batches;

  Sink(rt::Runtime& r, std::size_t p)
      : rt(r),
        buf(r, p, [this] { return gate.activate(); }),
        gate([this] { return !buf.empty(); }, [this] { return consume(); }) {}

  Task<bool> consume() {
    std::vector<Req> got;
    co_await buf.flush(got);
    std::vector<int> ids;
    for (auto& r : got) {
      ids.push_back(r.id);
      r.done->complete(rt);
    }
    batches.push_back(std::move(ids));
    co_return true;
  }
};

Task<> caller(rt::Runtime& rt, Sink& s, int id, rt::Completion& c, int think) {
  for (int i = 0; i < think; ++i) co_await rt.tick();
  std::size_t proc = rt.processor();
  rt.retag(Owner::buffer, Lane::q2);
  co_await rt.tick();
  co_await s.buf.submit(Req{id, &c}, proc);
  rt.retag(Owner::program, Lane::q2);
  co_await rt::wait_for(rt, c, "call");
}

// Submits without a consumer so the walk can be observed in isolation.
Task<> bare_submit(pbuf::ParallelBuffer<int>& b, std::size_t proc, int v) { co_await b.submit(v, proc); }

Task<> noop() { co_return; }

Task<> flush_into(pbuf::ParallelBuffer<int>& b, std::vector<int>& out) { co_await b.flush(out); }

}  // namespace

TEST_CASE("first submit walks the whole path, a second one stops at the set flag") {
  rt::Runtime rt({.p = 8});
  pbuf::ParallelBuffer<int> b(rt, 8, [] { return noop(); });
  rt.spawn_root(bare_submit(b, 0, 1), Owner::buffer);
  rt.run();
  CHECK(b.stats().last_walk == 3);
  CHECK(b.stats().activations == 1);
  rt.spawn_root(bare_submit(b, 1, 2), Owner::buffer);
  rt.run();
  CHECK(b.stats().last_walk == 1);
  CHECK(b.stats().activations == 1);
  rt.spawn_root(bare_submit(b, 6, 3), Owner::buffer);
  rt.run();
  CHECK(b.stats().last_walk == 3);  // stops at the root
  CHECK(b.stats().activations == 1);
  CHECK(b.size() == 3);
}

TEST_CASE("p simultaneous submits activate exactly once") {
  for (std::size_t p : {2u, 4u, 8u, 16u, 5u}) {
    rt::Runtime rt({.p = p});
    pbuf::ParallelBuffer<int> b(rt, p, [] { return noop(); });
    for (std::size_t i = 0; i < p; ++i) rt.spawn_root(bare_submit(b, i, static_cast<int>(i)), Owner::buffer);
    rt.run();
    CHECK(b.stats().activations == 1);
    CHECK(b.size() == p);
  }
}

TEST_CASE("flush keeps sub-buffer order left to right, FIFO inside") {
  rt::Runtime rt({.p = 4});
  pbuf::ParallelBuffer<int> b(rt, 4, [] { return noop(); });
  rt.spawn_root(bare_submit(b, 2, 10), Owner::buffer);
  rt.run();
  rt.spawn_root(bare_submit(b, 0, 20), Owner::buffer);
  rt.run();
  rt.spawn_root(bare_submit(b, 2, 30), Owner::buffer);
  rt.run();
  std::vector<int> out;
  rt.spawn_root(flush_into(b, out), Owner::ds);
  rt.run();
  CHECK(out == std::vector<int>{20, 10, 30});
  CHECK(b.empty());

  // flags were cleared, so the next submit walks the full path again
  rt.spawn_root(bare_submit(b, 3, 40), Owner::buffer);
  rt.run();
  CHECK(b.stats().last_walk == 2);
  CHECK(b.stats().activations == 2);

  std::vector<int> none;
  pbuf::ParallelBuffer<int> e(rt, 4, [] { return noop(); });
  rt.spawn_root(flush_into(e, none), Owner::ds);
  rt.run();
  CHECK(none.empty());
}

TEST_CASE("no op is lost or duplicated under adversarial interleavings") {
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    std::size_t p = 2 + seed % 7;
    rt::Runtime rt({.p = p, .shuffle_seed = seed});
    Sink s(rt, p);
    const int n = 200;
    std::vector<rt::Completion> done(n);
    for (int i = 0; i < n; ++i)
      rt.spawn_root(caller(rt, s, i, done[static_cast<std::size_t>(i)], static_cast<int>((i * 7919 + seed) % 13)),
                    Owner::program);
    rt.run();  // would throw on a stranded caller
    std::map<int, int> seen;
    for (auto& b : s.batches)
      for (int id : b) ++seen[id];
    REQUIRE(seen.size() == static_cast<std::size_t>(n));
    for (auto& [id, c] : seen) REQUIRE(c == 1);
    for (auto& c : done) REQUIRE(c.done);
    CHECK(s.buf.stats().flushes == s.batches.size());
  }
}

TEST_CASE("flush span is logarithmic in p and b") {
  const double C = 4.0;
  for (std::size_t p : {4u, 8u, 16u}) {
    for (std::size_t b : {std::size_t{1}, p, p * p, 4 * p * p}) {
      rt::Runtime rt({.p = p});
      pbuf::ParallelBuffer<int> buf(rt, p, [] { return noop(); });
      for (std::size_t i = 0; i < b; ++i) {
        rt.spawn_root(bare_submit(buf, (i * 5) % p, static_cast<int>(i)), Owner::buffer);
        rt.run();
      }
      rt.reset_metrics();
      std::vector<int> out;
      rt.spawn_root(flush_into(buf, out), Owner::ds);
      auto m = rt.run();
      REQUIRE(out.size() == b);
      double lp = std::log2(static_cast<double>(p)), lb = std::log2(static_cast<double>(b));
      CHECK(static_cast<double>(buf.stats().flush_spans.back()) <= C * (lp + lb + 1.0));
      CHECK(static_cast<double>(m.buffer_work) <= C * static_cast<double>(p + b));
    }
  }
}
