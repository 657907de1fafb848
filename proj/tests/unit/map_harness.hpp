#pragma once

#include <map>
#include <random>
#include <string>
#include <vector>

#include "wsm/core/bounds.hpp"
#include "wsm/maps/common.hpp"

namespace harness {

using namespace wsm;

// A program thread that issues its ops one after another.
template <class Map>
rt::Task<> client(rt::Runtime& rt, Map& m, std::vector<Operation> ops, std::map<std::uint64_t, OpResult>& got,
                  int think) {
  for (const auto& op : ops) {
    for (int i = 0; i < think; ++i) co_await rt.tick();
    OpResult r = co_await m.call(op);
    got[op.op_id] = r;
  }
}

// Random chains of operations over a small key universe.
inline std::vector<std::vector<Operation>> random_chains(std::mt19937_64& rng, std::size_t chains, std::size_t len,
                                                         Key universe, std::uint64_t& next_id) {
  std::vector<std::vector<Operation>> out(chains);
  for (auto& c : out) {
    for (std::size_t i = 0; i < len; ++i) {
      Operation op;
      op.op_id = next_id++;
      op.key = static_cast<Key>(rng() % static_cast<std::uint64_t>(universe));
      switch (rng() % 10) {
        case 0: case 1: case 2: op.kind = OpKind::insert; break;
        case 3: op.kind = OpKind::erase; break;
        case 4: op.kind = OpKind::update; break;
        default: op.kind = OpKind::search; break;
      }
      if (op.kind == OpKind::insert || op.kind == OpKind::update) op.payload = static_cast<Value>(rng() % 1000);
      c.push_back(op);
    }
  }
  return out;
}

// Empty string when the extracted linearization replays to exactly the
// results the callers saw.
inline std::string check_equivalence(const std::vector<maps::LinRecord>& lin,
                                     const std::map<std::uint64_t, OpResult>& got) {
  std::vector<Operation> ops;
  for (const auto& r : lin) ops.push_back(r.op);
  auto expect = oracle_replay(ops);
  std::map<std::uint64_t, int> seen;
  for (std::size_t i = 0; i < lin.size(); ++i) {
    if (++seen[lin[i].op.op_id] > 1) return "op " + std::to_string(lin[i].op.op_id) + " linearized twice";
    if (!(expect[i] == lin[i].result)) return "op " + std::to_string(lin[i].op.op_id) + " disagrees with replay";
    auto it = got.find(lin[i].op.op_id);
    if (it != got.end() && !(it->second == lin[i].result))
      return "op " + std::to_string(lin[i].op.op_id) + " returned something else than recorded";
  }
  for (const auto& [id, r] : got)
    if (!seen.count(id)) return "op " + std::to_string(id) + " missing from the linearization";
  return {};
}

}  // namespace harness
