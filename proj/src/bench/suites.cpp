#include "wsm/bench/suites.hpp"

#include <random>

namespace wsm::bench::suites {

namespace {

const OpMix kReadMostly{.search = 8, .insert = 1, .erase = 1, .update = 0};

WorkloadSpec sequential(Generator g, std::size_t N, std::uint64_t n, std::uint64_t seed) {
  WorkloadSpec s;
  s.generator = g;
  s.N = N;
  s.universe = n;
  s.preload = n;
  s.mix = g == Generator::adversarial_coldest ? OpMix{} : kReadMostly;
  s.seed = seed;
  s.p = 1;
  return s;
}

std::vector<WorkloadSpec> batched(std::size_t N, std::uint64_t n, std::vector<std::uint64_t> seeds) {
  std::vector<WorkloadSpec> out;
  for (std::size_t p : {4u, 8u})
    for (Generator g : {Generator::zipf, Generator::uniform, Generator::hot_set})
      for (std::size_t width : {2 * p, 8 * p})
        for (auto seed : seeds) {
          WorkloadSpec s;
          s.generator = g;
          s.hot_set = 64;
          s.N = N;
          s.universe = n;
          s.preload = n;
          s.mix = kReadMostly;
          s.width = width;
          s.think = 2;
          s.seed = seed;
          s.p = p;
          out.push_back(s);
        }
  return out;
}

}  // namespace

std::vector<WorkloadSpec> m0_calibration() {
  std::vector<WorkloadSpec> out;
  for (Generator g : {Generator::zipf, Generator::uniform, Generator::adversarial_coldest})
    for (std::uint64_t seed : {101u, 102u}) out.push_back(sequential(g, 2000, 1 << 12, seed));
  return out;
}

std::vector<WorkloadSpec> m0_acceptance() {
  std::vector<WorkloadSpec> out;
  for (Generator g : {Generator::zipf, Generator::uniform, Generator::adversarial_coldest})
    for (std::uint64_t seed : {1u, 2u, 3u}) out.push_back(sequential(g, 10000, 1 << 16, seed));
  return out;
}

std::vector<WorkloadSpec> batched_calibration() { return batched(2000, 1 << 12, {101}); }
std::vector<WorkloadSpec> batched_acceptance() { return batched(10000, 1 << 16, {1}); }

WorkloadSpec equivalence_workload(std::uint64_t seed) {
  WorkloadSpec s;
  s.generator = static_cast<Generator>(seed % 4);
  s.hot_set = 8;
  s.N = 200 + seed % 7 * 40;
  s.universe = 64 + seed % 5 * 100;
  s.preload = seed % 3 == 0 ? 0 : s.universe / 2;
  s.mix = {.search = 5, .insert = 3, .erase = 1, .update = 1};
  s.p = seed % 2 ? 4 : 8;
  s.width = s.p * (1 + seed % 3);
  s.think = seed % 4;
  s.seed = seed;
  return s;
}

WorkloadSpec m2_invariant_workload(std::uint64_t seed) {
  static constexpr std::size_t ps[] = {2, 4, 8};
  WorkloadSpec s;
  s.p = ps[seed % 3];
  s.generator = seed % 2 ? Generator::uniform : Generator::zipf;
  s.N = 400;
  // the first slab holds 22 items at p = 2 and 278 at p = 4 or 8
  s.preload = s.p == 2 ? 300 + seed % 5 * 40 : 320 + seed % 5 * 60;
  s.universe = s.preload + 80;
  s.mix = {.search = 5, .insert = 2, .erase = 2, .update = 1};
  s.width = 2 * s.p;
  s.think = seed % 3;
  s.seed = seed;
  return s;
}

Workload hot_chain(std::size_t p, std::uint64_t seed) {
  WorkloadSpec s;
  s.generator = Generator::uniform;
  s.N = 0;
  s.universe = 1 << 16;
  s.preload = 1 << 16;
  s.width = 2 * p;
  s.p = p;
  s.seed = seed;
  Workload w = generate(s);

  std::mt19937_64 rng(seed);
  std::uint64_t id = w.preload.size();
  w.chains.assign(2 * p, {});
  // keys 0..3 sit in the first two segments after the preload
  for (std::size_t i = 0; i < 64; ++i) w.chains[0].push_back({id++, OpKind::search, static_cast<Key>(i % 4), std::nullopt});
  for (std::size_t c = 1; c < w.chains.size(); ++c)
    for (std::size_t i = 0; i < 96; ++i)
      w.chains[c].push_back({id++, OpKind::search, static_cast<Key>(1024 + rng() % ((1 << 16) - 1024)), std::nullopt});

  w.dag = {};
  w.d = 0;
  std::size_t source = w.dag.add({});
  for (const auto& c : w.chains) {
    std::size_t last = source;
    for (const auto& op : c) last = w.dag.add({last}, op.op_id);
    w.d = std::max(w.d, c.size());
  }
  w.spec.N = id - w.preload.size();
  return w;
}

}  // namespace wsm::bench::suites
