#include "wsm/tree23/batch_tasks.hpp"

namespace wsm::tree23 {

rt::Task<> charge_flatten(rt::Runtime& rt, std::size_t items) {
  if (items == 0) co_return;
  co_await rt::charge_chains(rt, std::vector<std::uint32_t>(items, 1));
}

}  // namespace wsm::tree23
