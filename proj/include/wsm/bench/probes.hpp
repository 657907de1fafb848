#pragma once

// Measurements of the building blocks, shared by calibration and acceptance.
// Each returns raw numbers; thresholds live with the caller.

#include <cstdint>
#include <string>
#include <vector>

namespace wsm::bench::probe {

struct SortCheck {
  std::size_t inputs = 0;
  std::size_t mismatches = 0;        // esort or pesort output differs from a reference stable sort
  double esort_ratio = 0;            // worst comparisons / (n*H + n), H in nats
  std::size_t below_lower_bound = 0; // distinct inputs sorted with fewer than n-1 comparisons
};

// Random inputs with sizes in [1, max_n], mixing uniform and skewed keys.
SortCheck sort_outputs(std::uint64_t seed, std::size_t inputs, std::size_t max_n);

// Span of pesort (deterministic pivots) on n distinct shuffled keys, over (log2 n)^2.
double pesort_span_ratio(std::size_t n, std::uint64_t seed);

// ppivot on `lists` shuffled lists of distinct keys with lengths in [min_k, max_k];
// counts pivots whose rank falls outside [k/4, 3k/4].
std::size_t ppivot_violations(std::uint64_t seed, std::size_t lists, std::size_t min_k, std::size_t max_k);

struct TreeCheck {
  std::size_t sequences = 0;
  std::size_t batches = 0;
  std::size_t audit_failures = 0;    // structural audit or disagreement with a std::map
  std::size_t reverse_failures = 0;  // reverse_index not returning the sorted originals
};

TreeCheck tree_sequences(std::uint64_t seed, std::size_t sequences);

// Least-squares slope of the charged span of a 16-search batch against log2 n,
// for n = 2^lo_exp .. 2^hi_exp.
double tree_span_slope(std::uint64_t seed, int lo_exp, int hi_exp);

// Each line is "k=K holder=H waiters=W order=..." for a mismatch against the golden trace.
std::vector<std::string> lock_golden_mismatches();

// Runs with shuffled scheduling; counts requests lost or delivered twice.
std::size_t pbuffer_lost_or_duplicated(std::uint64_t seed, std::size_t runs);

// Flush span of b buffered items on p sub-buffers, over log2 p + log2 b + 1.
double flush_span_ratio(std::size_t p, std::size_t b);

}  // namespace wsm::bench::probe
