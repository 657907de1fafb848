#pragma once

// Deterministic fork/join simulator. Every resumption of a simulated thread is
// one unit-time node of the execution DAG; the scheduler executes a bounded
// number of ready nodes per step and tracks, for every node, the longest path
// (counted per node class) that ends at it.

#include <coroutine>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>
#include <deque>
#include <random>

#include "wsm/runtime/task.hpp"

namespace wsm::rt {

enum class Owner : std::uint8_t { program, buffer, ds };
enum class Lane : std::uint8_t { q1, q2 };
enum class SchedulerKind : std::uint8_t { greedy, weak_priority };

const char* to_string(Owner o);
const char* to_string(Lane l);
const char* to_string(SchedulerKind s);

// Longest-path node counts, one per node class, of paths ending at a node.
struct PathWeight {
  std::uint64_t all = 0;
  std::uint64_t program = 0;
  std::uint64_t buffer = 0;
  std::uint64_t ds = 0;

  void merge(const PathWeight& o) noexcept;
  void add(Owner o) noexcept;
};

struct StepClasses {
  std::uint64_t high_busy = 0;
  std::uint64_t high_idle = 0;
  std::uint64_t filter_full = 0;
  std::uint64_t filter_empty = 0;
};

struct ExecutionMetrics {
  std::size_t p = 0;
  SchedulerKind scheduler = SchedulerKind::greedy;
  std::uint64_t steps = 0;
  std::uint64_t T1 = 0;     // program nodes
  std::uint64_t T_inf = 0;  // most program nodes on one path
  std::uint64_t ds_work = 0;
  std::uint64_t ds_span = 0;
  std::uint64_t buffer_work = 0;
  std::uint64_t buffer_span = 0;
  std::uint64_t structure_span = 0;  // most ds and buffer nodes together on one path
  std::uint64_t total_nodes = 0;
  std::uint64_t total_span = 0;
  StepClasses step_classes;
  std::uint64_t quota_checked_steps = 0;
  std::uint64_t quota_violations = 0;
  std::uint64_t progress_violations = 0;
};

struct RuntimeConfig {
  std::size_t p = 4;
  SchedulerKind scheduler = SchedulerKind::greedy;
  bool record_trace = false;
  std::uint64_t max_steps = 2'000'000'000ULL;
  // Nonzero: each step picks its nodes at random (within the scheduler's
  // quotas) instead of by smallest node id.
  std::uint64_t shuffle_seed = 0;
};

struct TraceEntry {
  std::uint64_t step;
  std::uint64_t node_id;
  Owner owner;
  Lane lane;
};

struct StepInfo {
  std::uint64_t step;
  std::size_t ready_q1;
  std::size_t ready_q2;
  std::size_t ready_buffer;
  std::size_t executed_q1;
  std::size_t executed_q2;
};

class DeadlockError : public std::runtime_error {
 public:
  DeadlockError(std::string what, std::vector<std::string> blocked)
      : std::runtime_error(std::move(what)), blocked_(std::move(blocked)) {}
  const std::vector<std::string>& blocked() const noexcept { return blocked_; }

 private:
  std::vector<std::string> blocked_;
};

class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct Thread {
  enum class State : std::uint8_t { ready, running, parked, joining };

  std::uint64_t id = 0;
  std::uint64_t node_id = 0;
  Owner owner = Owner::program;
  Lane lane = Lane::q2;
  State state = State::ready;
  PathWeight weight;
  std::coroutine_handle<> resume_point;
  Task<> root;
  Thread* join_parent = nullptr;
  int pending_children = 0;
  PathWeight join_weight;
  const char* blocked_on = nullptr;
};

class Runtime {
 public:
  explicit Runtime(RuntimeConfig cfg);
  ~Runtime();
  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  void spawn_root(Task<> t, Owner owner, Lane lane = Lane::q2);

  // Steps the DAG until no ready node remains. Throws DeadlockError if parked
  // threads are left behind, or rethrows the first exception of any thread.
  ExecutionMetrics run();

  const ExecutionMetrics& metrics() const noexcept { return metrics_; }
  void reset_metrics();

  std::size_t p() const noexcept { return cfg_.p; }
  SchedulerKind scheduler() const noexcept { return cfg_.scheduler; }
  std::uint64_t step() const noexcept { return step_; }
  std::size_t processor() const noexcept { return processor_; }
  Thread* current() const noexcept { return current_; }
  const PathWeight& current_weight() const;

  // Makes a parked thread ready; the edge comes from the current node.
  void wake(Thread* t);

  // Later nodes of the current thread carry the new class; the current node
  // keeps its own.
  void retag(Owner owner, Lane lane);

  void set_filter_probe(std::function<std::size_t()> probe) { filter_probe_ = std::move(probe); }
  void add_step_observer(std::function<void(const StepInfo&)> obs) {
    observers_.push_back(std::move(obs));
  }
  const std::vector<TraceEntry>& trace() const noexcept { return trace_; }
  void write_trace(std::ostream& os) const;

  // ---- awaitables -------------------------------------------------------

  struct TickAwaiter {
    Runtime& rt;
    bool await_ready() const noexcept { return false; }
    void await_suspend(std::coroutine_handle<> h);
    void await_resume() const noexcept {}
  };
  // Ends the current node; the thread continues as a fresh ready node.
  TickAwaiter tick() { return TickAwaiter{*this}; }

  struct ForkAwaiter {
    Runtime& rt;
    Task<> a;
    Task<> b;
    bool await_ready() const noexcept { return false; }
    void await_suspend(std::coroutine_handle<> h);
    void await_resume() const noexcept {}
  };
  // Binary fork/join: both children inherit owner and lane; the caller resumes
  // as the join node once both have finished.
  ForkAwaiter fork(Task<> a, Task<> b) { return ForkAwaiter{*this, std::move(a), std::move(b)}; }

  struct SpawnAwaiter {
    Runtime& rt;
    Task<> child;
    Owner owner;
    Lane lane;
    bool park_self;
    bool await_ready() const noexcept { return false; }
    void await_suspend(std::coroutine_handle<> h);
    void await_resume() const noexcept {}
  };
  // Detached child; the caller continues as a new node.
  SpawnAwaiter spawn(Task<> child, Owner owner, Lane lane) {
    return SpawnAwaiter{*this, std::move(child), owner, lane, false};
  }
  // Detached child; the caller parks until someone wakes it.
  SpawnAwaiter spawn_and_park(Task<> child, Owner owner, Lane lane) {
    return SpawnAwaiter{*this, std::move(child), owner, lane, true};
  }

  struct ParkAwaiter {
    Runtime& rt;
    const char* label;
    bool await_ready() const noexcept { return false; }
    void await_suspend(std::coroutine_handle<> h);
    void await_resume() const noexcept {}
  };
  ParkAwaiter park(const char* label) { return ParkAwaiter{*this, label}; }

  struct SwitchAwaiter {
    Runtime& rt;
    Owner owner;
    Lane lane;
    bool await_ready() const noexcept { return false; }
    void await_suspend(std::coroutine_handle<> h);
    void await_resume() const noexcept {}
  };
  // Ends the current node; subsequent nodes of this thread carry the new class.
  SwitchAwaiter switch_to(Owner owner, Lane lane) { return SwitchAwaiter{*this, owner, lane}; }

 private:
  Thread* new_thread(Task<> t, Owner owner, Lane lane, const PathWeight& w);
  void make_ready(Thread* t);
  void execute(Thread* t, std::size_t slot);
  void finish(Thread* t);
  void select_greedy(std::vector<Thread*>& out);
  void select_weak(std::vector<Thread*>& out, std::size_t& q1_taken);
  void take_random(std::deque<Thread*>& q, std::size_t count, std::vector<Thread*>& out);

  RuntimeConfig cfg_;
  ExecutionMetrics metrics_;
  std::deque<Thread*> q1_;
  std::deque<Thread*> q2_;
  std::unordered_set<Thread*> live_;
  std::size_t ready_buffer_ = 0;
  std::uint64_t next_thread_id_ = 0;
  std::uint64_t next_node_id_ = 0;
  std::uint64_t step_ = 0;
  std::size_t processor_ = 0;
  Thread* current_ = nullptr;
  std::exception_ptr error_;
  std::function<std::size_t()> filter_probe_;
  std::vector<std::function<void(const StepInfo&)>> observers_;
  std::vector<TraceEntry> trace_;
  std::mt19937_64 rng_;
};

// One-shot result slot shared by a waiting thread and the thread that
// delivers. The waiter parks only if the value has not arrived yet.
struct Completion {
  bool done = false;
  Thread* waiter = nullptr;
  PathWeight from;  // the delivering path, for a waiter that arrives later

  void complete(Runtime& rt) {
    done = true;
    if (Thread* t = rt.current()) from = t->weight;
    if (Thread* w = waiter) {
      waiter = nullptr;
      rt.wake(w);
    }
  }
};

Task<> wait_for(Runtime& rt, Completion& c, const char* label);

}  // namespace wsm::rt
