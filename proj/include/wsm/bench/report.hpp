#pragma once

// End-to-end experiments: run a workload on one structure, extract the
// linearization, compute the working-set quantities and check every line.

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wsm/bench/workload.hpp"
#include "wsm/core/bounds.hpp"
#include "wsm/runtime/runtime.hpp"

namespace wsm::bench {

enum class Structure : std::uint8_t { m0, m1, m2, oracle };

const char* to_string(Structure s);
Structure parse_structure(const std::string& s);

// A measured quantity against its model. `limit` is the largest admissible
// measured/model ratio; exact lines use model 1 and limit 0 on a violation count.
struct Line {
  std::string name;
  double measured = 0;
  double model = 1;
  double limit = 0;
  bool asserted = true;
  bool pass = false;
  std::string note;

  double ratio() const { return model > 0 ? measured / model : 0; }
};

struct RunOptions {
  std::optional<rt::SchedulerKind> scheduler;  // default: weak priority for m2, greedy otherwise
  std::uint64_t shuffle_seed = 0;
  bool audit_rank = false;
  bool audit_segments = false;
};

struct Report {
  Structure structure = Structure::oracle;
  WorkloadSpec spec;
  BoundReport bounds;      // over the calls; preloads excluded
  std::size_t d = 0;
  double s_L = 0;
  std::size_t n_max = 0;   // largest map size in the linearization
  rt::ExecutionMetrics metrics;
  std::uint64_t seq_steps = 0;  // comparisons and links of the sequential map
  std::vector<double> chain_ds_per_call;  // ds nodes on each chain's path, per call
  std::uint64_t audit_points = 0;  // m2 audits run, and rank checks among them
  std::uint64_t rank_checks = 0;
  std::vector<Line> lines;
  std::vector<std::string> failures;  // audit messages and the first equivalence mismatch

  bool passed() const;
  const Line* line(const std::string& name) const;
};

Report run_experiment(const Workload& w, Structure s, RunOptions opts = {});
inline Report run_experiment(const WorkloadSpec& spec, Structure s, RunOptions opts = {}) {
  return run_experiment(generate(spec), s, opts);
}

nlohmann::json to_json(const Report& r);
// Recomputes every line's verdict from its numbers; returns the failing names.
std::vector<std::string> check_report(const nlohmann::json& j);

std::string format_table(const Report& r);

}  // namespace wsm::bench
