#include "wsm/runtime/locks.hpp"

namespace wsm::rt {

DedicatedLockCore::DedicatedLockCore(int k) : k_(k), waiting_(static_cast<std::size_t>(k) + 1, false) {
  if (k < 1) throw UsageError("dedicated lock needs at least one key");
}

bool DedicatedLockCore::acquire(int key) {
  if (key < 1 || key > k_) throw UsageError("lock key out of range");
  if (count_ > 0 && (holder_ == key || waiting_[key]))
    throw UsageError("lock key " + std::to_string(key) + " used by two concurrent acquirers");
  if (count_++ == 0) {
    holder_ = key;
    return true;
  }
  waiting_[key] = true;
  return false;
}

int DedicatedLockCore::release() {
  if (count_ == 0) throw UsageError("release of a free lock");
  if (count_-- > 1) {
    int j = holder_;
    for (;;) {
      j = j % k_ + 1;
      if (waiting_[j]) {
        waiting_[j] = false;
        break;
      }
    }
    holder_ = j;
    return j;
  }
  holder_ = 0;
  return 0;
}

DedicatedLock::DedicatedLock(Runtime& rt, int k, std::string name)
    : rt_(rt), core_(k), name_(std::move(name)), parked_(static_cast<std::size_t>(k) + 1, nullptr) {}

Task<std::uint64_t> DedicatedLock::acquire(int key) {
  if (core_.acquire(key)) co_return 0;
  ++contended_;
  const std::uint64_t start = rt_.step();
  parked_[key] = rt_.current();
  co_await rt_.park(name_.c_str());
  co_return rt_.step() - start;
}

void DedicatedLock::release() {
  int next = core_.release();
  if (next == 0) return;
  Thread* t = parked_[next];
  parked_[next] = nullptr;
  rt_.wake(t);
}

}  // namespace wsm::rt
