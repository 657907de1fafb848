#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wsm/runtime/runtime.hpp"

namespace wsm::rt {

// Test-and-set flag. Never blocks.
class TryLock {
 public:
  bool try_lock() noexcept {
    if (held_) return false;
    held_ = true;
    return true;
  }
  void unlock() {
    if (!held_) throw UsageError("unlock of a flag that is not held");
    held_ = false;
  }
  bool held() const noexcept { return held_; }

 private:
  bool held_ = false;
};

// Bookkeeping of a blocking lock with keys 1..k. Waiters are identified by key
// only; the runtime wrapper maps keys back to parked threads.
class DedicatedLockCore {
 public:
  explicit DedicatedLockCore(int k);

  // True if the caller now holds the lock. Otherwise key is recorded as waiting.
  bool acquire(int key);
  // Returns the key that now holds the lock, or 0 if the lock became free.
  int release();

  int keys() const noexcept { return k_; }
  int count() const noexcept { return count_; }
  int holder() const noexcept { return holder_; }
  bool waiting(int key) const { return waiting_.at(static_cast<std::size_t>(key)); }

 private:
  int k_;
  int count_ = 0;
  int holder_ = 0;
  std::vector<bool> waiting_;
};

class DedicatedLock {
 public:
  DedicatedLock(Runtime& rt, int k, std::string name);

  // Completes once the caller holds the lock; yields the number of steps spent
  // parked (0 when entered immediately).
  Task<std::uint64_t> acquire(int key);
  // The next waiter, if any, resumes as a new node.
  void release();

  const DedicatedLockCore& core() const noexcept { return core_; }
  const std::string& name() const noexcept { return name_; }
  std::uint64_t contended_acquires() const noexcept { return contended_; }

 private:
  Runtime& rt_;
  DedicatedLockCore core_;
  std::string name_;
  std::vector<Thread*> parked_;
  std::uint64_t contended_ = 0;
};

}  // namespace wsm::rt
