#pragma once

// Workload suites. The calibration suites are smaller than the acceptance
// suites and use their own seeds, so frozen constants are checked on sizes
// they were not fitted to.

#include <vector>

#include "wsm/bench/workload.hpp"

namespace wsm::bench::suites {

std::vector<WorkloadSpec> m0_calibration();
std::vector<WorkloadSpec> m0_acceptance();

// Shared by M1 and M2 (p = 4 and 8).
std::vector<WorkloadSpec> batched_calibration();
std::vector<WorkloadSpec> batched_acceptance();

// Small seeded workloads for the equivalence sweep (seed 1..count).
WorkloadSpec equivalence_workload(std::uint64_t seed);

// Workloads that keep the final slab of M2 busy; p cycles through 2, 4, 8.
WorkloadSpec m2_invariant_workload(std::uint64_t seed);

// One chain of 64 searches over 4 hot keys plus background chains of cold
// searches, on a preloaded map of 2^16 keys. The hot chain is chain 0.
Workload hot_chain(std::size_t p, std::uint64_t seed);

}  // namespace wsm::bench::suites
