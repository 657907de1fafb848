#include "wsm/runtime/runtime.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>

namespace wsm::rt {

const char* to_string(Owner o) {
  switch (o) {
    case Owner::program: return "program";
    case Owner::buffer: return "buffer";
    case Owner::ds: return "ds";
  }
  return "?";
}

const char* to_string(Lane l) { return l == Lane::q1 ? "Q1" : "Q2"; }

const char* to_string(SchedulerKind s) {
  return s == SchedulerKind::greedy ? "greedy" : "weak_priority";
}

void PathWeight::merge(const PathWeight& o) noexcept {
  all = std::max(all, o.all);
  program = std::max(program, o.program);
  buffer = std::max(buffer, o.buffer);
  ds = std::max(ds, o.ds);
}

void PathWeight::add(Owner o) noexcept {
  ++all;
  switch (o) {
    case Owner::program: ++program; break;
    case Owner::buffer: ++buffer; break;
    case Owner::ds: ++ds; break;
  }
}

Runtime::Runtime(RuntimeConfig cfg) : cfg_(cfg) {
  if (cfg_.p == 0) throw UsageError("processor count must be positive");
  if (cfg_.scheduler == SchedulerKind::weak_priority && cfg_.p < 2)
    throw UsageError("weak-priority scheduling needs at least 2 processors");
  metrics_.p = cfg_.p;
  metrics_.scheduler = cfg_.scheduler;
  rng_.seed(cfg_.shuffle_seed);
}

Runtime::~Runtime() {
  for (Thread* t : live_) delete t;
}

void Runtime::reset_metrics() {
  metrics_ = ExecutionMetrics{};
  metrics_.p = cfg_.p;
  metrics_.scheduler = cfg_.scheduler;
  trace_.clear();
}

const PathWeight& Runtime::current_weight() const {
  if (!current_) throw UsageError("no node is executing");
  return current_->weight;
}

Thread* Runtime::new_thread(Task<> t, Owner owner, Lane lane, const PathWeight& w) {
  auto* th = new Thread;
  th->id = next_thread_id_++;
  th->owner = owner;
  th->lane = lane;
  th->weight = w;
  th->resume_point = t.handle();
  th->root = std::move(t);
  live_.insert(th);
  return th;
}

void Runtime::make_ready(Thread* t) {
  t->state = Thread::State::ready;
  t->blocked_on = nullptr;
  t->node_id = next_node_id_++;
  if (t->owner == Owner::buffer) ++ready_buffer_;
  (t->lane == Lane::q1 ? q1_ : q2_).push_back(t);
}

void Runtime::spawn_root(Task<> t, Owner owner, Lane lane) {
  if (!t.handle()) throw UsageError("empty task");
  make_ready(new_thread(std::move(t), owner, lane, PathWeight{}));
}

void Runtime::wake(Thread* t) {
  if (t->state != Thread::State::parked) throw UsageError("wake of a thread that is not parked");
  if (current_) t->weight.merge(current_->weight);
  make_ready(t);
}

void Runtime::retag(Owner owner, Lane lane) {
  if (!current_) throw UsageError("retag outside a node");
  current_->owner = owner;
  current_->lane = lane;
}

Task<> wait_for(Runtime& rt, Completion& c, const char* label) {
  if (c.done) {
    rt.current()->weight.merge(c.from);
    co_return;
  }
  c.waiter = rt.current();
  co_await rt.park(label);
}

void Runtime::TickAwaiter::await_suspend(std::coroutine_handle<> h) {
  Thread* t = rt.current_;
  t->resume_point = h;
  rt.make_ready(t);
}

void Runtime::ForkAwaiter::await_suspend(std::coroutine_handle<> h) {
  Thread* t = rt.current_;
  t->resume_point = h;
  t->state = Thread::State::joining;
  t->pending_children = 2;
  t->join_weight = PathWeight{};
  Thread* ca = rt.new_thread(std::move(a), t->owner, t->lane, t->weight);
  Thread* cb = rt.new_thread(std::move(b), t->owner, t->lane, t->weight);
  ca->join_parent = t;
  cb->join_parent = t;
  rt.make_ready(ca);
  rt.make_ready(cb);
}

void Runtime::SpawnAwaiter::await_suspend(std::coroutine_handle<> h) {
  Thread* t = rt.current_;
  t->resume_point = h;
  Thread* c = rt.new_thread(std::move(child), owner, lane, t->weight);
  rt.make_ready(c);
  if (park_self) {
    t->state = Thread::State::parked;
    t->blocked_on = "map call";
  } else {
    rt.make_ready(t);
  }
}

void Runtime::ParkAwaiter::await_suspend(std::coroutine_handle<> h) {
  Thread* t = rt.current_;
  t->resume_point = h;
  t->state = Thread::State::parked;
  t->blocked_on = label;
}

void Runtime::SwitchAwaiter::await_suspend(std::coroutine_handle<> h) {
  Thread* t = rt.current_;
  t->resume_point = h;
  t->owner = owner;
  t->lane = lane;
  rt.make_ready(t);
}

void Runtime::finish(Thread* t) {
  if (auto e = t->root.error()) {
    if (!error_) error_ = e;
  }
  if (Thread* parent = t->join_parent) {
    parent->join_weight.merge(t->weight);
    if (--parent->pending_children == 0) {
      parent->weight.merge(parent->join_weight);
      make_ready(parent);
    }
  }
  live_.erase(t);
  delete t;
}

void Runtime::execute(Thread* t, std::size_t slot) {
  if (t->owner == Owner::buffer) --ready_buffer_;
  t->state = Thread::State::running;
  t->weight.add(t->owner);
  auto& m = metrics_;
  ++m.total_nodes;
  m.total_span = std::max(m.total_span, t->weight.all);
  if (t->owner != Owner::program)
    m.structure_span = std::max(m.structure_span, t->weight.ds + t->weight.buffer);
  switch (t->owner) {
    case Owner::program:
      ++m.T1;
      m.T_inf = std::max(m.T_inf, t->weight.program);
      break;
    case Owner::buffer:
      ++m.buffer_work;
      m.buffer_span = std::max(m.buffer_span, t->weight.buffer);
      break;
    case Owner::ds:
      ++m.ds_work;
      m.ds_span = std::max(m.ds_span, t->weight.ds);
      break;
  }
  if (cfg_.record_trace) trace_.push_back({step_, t->node_id, t->owner, t->lane});
  current_ = t;
  processor_ = slot;
  t->resume_point.resume();
  current_ = nullptr;
  if (t->root.done()) finish(t);
}

void Runtime::take_random(std::deque<Thread*>& q, std::size_t count, std::vector<Thread*>& out) {
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng_() % (q.size() - i));
    std::swap(q[i], q[j]);
    out.push_back(q[i]);
  }
  q.erase(q.begin(), q.begin() + static_cast<std::ptrdiff_t>(count));
  // the rest keep no particular order; re-sort so FIFO stays meaningful
  std::sort(q.begin(), q.end(), [](const Thread* a, const Thread* b) { return a->node_id < b->node_id; });
}

void Runtime::select_greedy(std::vector<Thread*>& out) {
  if (cfg_.shuffle_seed != 0) {
    std::size_t total = q1_.size() + q2_.size();
    std::size_t take = std::min(total, cfg_.p);
    // split the budget between the queues by a random draw per pick
    std::size_t from_q1 = 0;
    for (std::size_t i = 0, a = q1_.size(), b = q2_.size(); i < take; ++i) {
      if (rng_() % (a + b) < a) --a, ++from_q1;
      else --b;
    }
    take_random(q1_, from_q1, out);
    take_random(q2_, take - from_q1, out);
    return;
  }
  // min(ready, p) nodes with the smallest node ids
  std::size_t budget = cfg_.p;
  while (budget > 0 && (!q1_.empty() || !q2_.empty())) {
    bool from_q1;
    if (q1_.empty()) from_q1 = false;
    else if (q2_.empty()) from_q1 = true;
    else from_q1 = q1_.front()->node_id < q2_.front()->node_id;
    auto& q = from_q1 ? q1_ : q2_;
    out.push_back(q.front());
    q.pop_front();
    --budget;
  }
}

void Runtime::select_weak(std::vector<Thread*>& out, std::size_t& q1_taken) {
  const std::size_t half = cfg_.p / 2;
  q1_taken = std::min(q1_.size(), half);
  if (cfg_.shuffle_seed != 0) {
    take_random(q1_, q1_taken, out);
    take_random(q2_, std::min(q2_.size(), half), out);
    return;
  }
  for (std::size_t i = 0; i < q1_taken; ++i) {
    out.push_back(q1_.front());
    q1_.pop_front();
  }
  std::size_t q2_taken = std::min(q2_.size(), half);
  for (std::size_t i = 0; i < q2_taken; ++i) {
    out.push_back(q2_.front());
    q2_.pop_front();
  }
}

ExecutionMetrics Runtime::run() {
  std::vector<Thread*> batch;
  batch.reserve(cfg_.p);
  while (!q1_.empty() || !q2_.empty()) {
    if (metrics_.steps >= cfg_.max_steps) throw std::runtime_error("step limit exceeded");
    StepInfo info{};
    info.step = step_;
    info.ready_q1 = q1_.size();
    info.ready_q2 = q2_.size();
    info.ready_buffer = ready_buffer_;
    const std::size_t ready = q1_.size() + q2_.size();
    const std::size_t half = cfg_.p / 2;

    if (q1_.size() >= half && half > 0) ++metrics_.step_classes.high_busy;
    else ++metrics_.step_classes.high_idle;
    if (filter_probe_) {
      if (filter_probe_() >= cfg_.p) ++metrics_.step_classes.filter_full;
      else ++metrics_.step_classes.filter_empty;
    }

    batch.clear();
    std::size_t q1_taken = 0;
    if (cfg_.scheduler == SchedulerKind::greedy) {
      select_greedy(batch);
      if (batch.size() != std::min(ready, cfg_.p)) ++metrics_.progress_violations;
      for (Thread* t : batch) q1_taken += t->lane == Lane::q1;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        execute(batch[i], i);
        if (error_) break;
      }
    } else {
      select_weak(batch, q1_taken);
      ++metrics_.quota_checked_steps;
      if (q1_taken != std::min(info.ready_q1, half) ||
          batch.size() - q1_taken != std::min(info.ready_q2, half))
        ++metrics_.quota_violations;
      // Q1 nodes occupy processors [0, p/2), Q2 nodes [p/2, p)
      std::sort(batch.begin(), batch.end(),
                [](const Thread* a, const Thread* b) { return a->node_id < b->node_id; });
      std::size_t next_q1 = 0, next_q2 = half;
      for (Thread* t : batch) {
        std::size_t slot = t->lane == Lane::q1 ? next_q1++ : next_q2++;
        execute(t, slot);
        if (error_) break;
      }
    }
    info.executed_q1 = q1_taken;
    info.executed_q2 = batch.size() - q1_taken;
    ++metrics_.steps;
    ++step_;
    if (error_) {
      auto e = error_;
      error_ = nullptr;
      std::rethrow_exception(e);
    }
    for (auto& obs : observers_) obs(info);
  }

  if (!live_.empty()) {
    std::vector<std::string> blocked;
    for (Thread* t : live_)
      if (t->state == Thread::State::parked)
        blocked.emplace_back(t->blocked_on ? t->blocked_on : "parked");
    std::sort(blocked.begin(), blocked.end());
    std::ostringstream os;
    os << "deadlock: " << live_.size() << " unfinished thread(s), blocked on";
    for (const auto& b : blocked) os << " [" << b << "]";
    throw DeadlockError(os.str(), std::move(blocked));
  }
  return metrics_;
}

void Runtime::write_trace(std::ostream& os) const {
  for (const auto& e : trace_)
    os << e.step << ' ' << e.node_id << ' ' << to_string(e.owner) << ' ' << to_string(e.lane) << '\n';
}

}  // namespace wsm::rt
