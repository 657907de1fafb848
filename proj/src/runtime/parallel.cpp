#include "wsm/runtime/parallel.hpp"

namespace wsm::rt {

namespace {

Task<> for_range(Runtime& rt, std::size_t lo, std::size_t hi, const IndexBody* body) {
  if (hi - lo == 1) {
    co_await (*body)(lo);
    co_return;
  }
  std::size_t mid = lo + (hi - lo) / 2;
  co_await rt.fork(for_range(rt, lo, mid, body), for_range(rt, mid, hi, body));
}

Task<> chain_range(Runtime& rt, std::size_t lo, std::size_t hi, const std::vector<std::uint32_t>* lens) {
  if (hi - lo == 1) {
    for (std::uint32_t i = 1; i < (*lens)[lo]; ++i) co_await rt.tick();
    co_return;
  }
  std::size_t mid = lo + (hi - lo) / 2;
  co_await rt.fork(chain_range(rt, lo, mid, lens), chain_range(rt, mid, hi, lens));
}

}  // namespace

Task<> parallel_for(Runtime& rt, std::size_t n, IndexBody body) {
  if (n == 0) co_return;
  co_await for_range(rt, 0, n, &body);
}

Task<> charge_chains(Runtime& rt, std::vector<std::uint32_t> lens) {
  if (lens.empty()) co_return;
  co_await chain_range(rt, 0, lens.size(), &lens);
}

Task<> charge_chain(Runtime& rt, std::uint64_t len) {
  for (std::uint64_t i = 0; i < len; ++i) co_await rt.tick();
}

}  // namespace wsm::rt
