#pragma once

// Seeded workloads: a set of parallel chains of map calls over a key universe,
// optionally on top of a preloaded map.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wsm/core/types.hpp"

namespace wsm::bench {

enum class Generator : std::uint8_t { uniform, zipf, hot_set, adversarial_coldest };

const char* to_string(Generator g);
Generator parse_generator(const std::string& s);

struct OpMix {
  double search = 1.0;
  double insert = 0.0;
  double erase = 0.0;
  double update = 0.0;
};

struct WorkloadSpec {
  Generator generator = Generator::uniform;
  double zipf_s = 1.0;
  std::size_t hot_set = 4;
  std::size_t N = 1000;        // map calls, preload excluded
  std::uint64_t universe = 1024;
  OpMix mix;
  std::size_t width = 1;       // parallel chains; call i goes to chain i mod width
  std::size_t think = 0;       // program nodes before each call
  std::size_t preload = 0;     // keys inserted before the run, from the front of the key order
  std::uint64_t seed = 1;
  std::size_t p = 4;
};

nlohmann::json to_json(const WorkloadSpec& s);
// Missing fields keep their defaults; unknown fields and bad values throw UsageError.
WorkloadSpec workload_from_json(const nlohmann::json& j);

// The program DAG: a source, then one serial chain per lane of width. Nodes
// are stored in topological order.
struct DagNode {
  std::vector<std::size_t> preds;
  std::optional<std::uint64_t> op_id;  // a map call
};

struct ProgramDag {
  std::vector<DagNode> nodes;
  std::size_t add(std::vector<std::size_t> preds, std::optional<std::uint64_t> op = std::nullopt);
};

struct Workload {
  WorkloadSpec spec;
  std::vector<Operation> preload;            // distinct inserts, ids below those of the calls
  std::vector<std::vector<Operation>> chains;
  ProgramDag dag;
  std::size_t d = 0;  // most map calls on one DAG path
};

Workload generate(const WorkloadSpec& spec);

// Heaviest path when each map call weighs log2(rank)+1 and other nodes weigh
// nothing. Every call in the DAG needs a rank.
double weighted_span(const ProgramDag& dag, const std::vector<std::pair<std::uint64_t, std::uint64_t>>& ranks);

}  // namespace wsm::bench
