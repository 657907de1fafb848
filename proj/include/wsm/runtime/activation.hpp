#pragma once

#include <cstdint>
#include <functional>

#include "wsm/runtime/locks.hpp"
#include "wsm/runtime/runtime.hpp"

namespace wsm::rt {

// Starts a process iff it is not already running and it is ready. The process
// returns true to ask for another readiness check once it has let go.
class ActivationGate {
 public:
  ActivationGate(std::function<bool()> ready, std::function<Task<bool>()> process)
      : ready_(std::move(ready)), process_(std::move(process)) {}

  Task<> activate() {
    for (;;) {
      if (!flag_.try_lock()) co_return;
      if (!ready_()) {
        flag_.unlock();
        co_return;
      }
      ++runs_;
      bool again = co_await process_();
      flag_.unlock();
      if (!again) co_return;
    }
  }

  bool active() const noexcept { return flag_.held(); }
  std::uint64_t runs() const noexcept { return runs_; }

 private:
  std::function<bool()> ready_;
  std::function<Task<bool>()> process_;
  TryLock flag_;
  std::uint64_t runs_ = 0;
};

}  // namespace wsm::rt
