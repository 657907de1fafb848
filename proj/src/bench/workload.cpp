#include "wsm/bench/workload.hpp"

#include <algorithm>
#include <cmath>
#include <list>
#include <random>
#include <set>
#include <unordered_map>

namespace wsm::bench {

const char* to_string(Generator g) {
  switch (g) {
    case Generator::uniform: return "uniform";
    case Generator::zipf: return "zipf";
    case Generator::hot_set: return "hot-set";
    case Generator::adversarial_coldest: return "adversarial-coldest";
  }
  return "?";
}

Generator parse_generator(const std::string& s) {
  for (auto g : {Generator::uniform, Generator::zipf, Generator::hot_set, Generator::adversarial_coldest})
    if (s == to_string(g)) return g;
  throw UsageError("unknown generator: " + s);
}

nlohmann::json to_json(const WorkloadSpec& s) {
  return {{"generator", to_string(s.generator)},
          {"zipf_s", s.zipf_s},
          {"hot_set", s.hot_set},
          {"N", s.N},
          {"universe", s.universe},
          {"mix", {{"search", s.mix.search}, {"insert", s.mix.insert}, {"erase", s.mix.erase}, {"update", s.mix.update}}},
          {"width", s.width},
          {"think", s.think},
          {"preload", s.preload},
          {"seed", s.seed},
          {"p", s.p}};
}

namespace {

template <class T>
void take(const nlohmann::json& j, const char* name, T& out) {
  if (!j.contains(name)) return;
  try {
    out = j.at(name).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("workload field ") + name + ": " + e.what());
  }
}

void validate(const WorkloadSpec& s) {
  const auto& m = s.mix;
  for (double w : {m.search, m.insert, m.erase, m.update})
    if (!(w >= 0) || !std::isfinite(w)) throw UsageError("op mix weights must be finite and non-negative");
  if (m.search + m.insert + m.erase + m.update <= 0) throw UsageError("op mix is empty");
  if (s.universe == 0) throw UsageError("key universe is empty");
  if (s.preload > s.universe) throw UsageError("preload exceeds the key universe");
  if (s.width == 0) throw UsageError("width must be positive");
  if (s.p == 0) throw UsageError("p must be positive");
  if (s.generator == Generator::zipf && !(s.zipf_s > 0)) throw UsageError("zipf exponent must be positive");
  if (s.generator == Generator::hot_set && (s.hot_set == 0 || s.hot_set > s.universe))
    throw UsageError("hot set must be within the universe");
}

}  // namespace

WorkloadSpec workload_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {"generator", "zipf_s", "hot_set", "N", "universe", "mix",
                                              "width", "think", "preload", "seed", "p"};
  if (!j.is_object()) throw UsageError("workload must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw UsageError("unknown workload field: " + k);
  WorkloadSpec s;
  if (j.contains("generator")) s.generator = parse_generator(j.at("generator").get<std::string>());
  take(j, "zipf_s", s.zipf_s);
  take(j, "hot_set", s.hot_set);
  take(j, "N", s.N);
  take(j, "universe", s.universe);
  take(j, "width", s.width);
  take(j, "think", s.think);
  take(j, "preload", s.preload);
  take(j, "seed", s.seed);
  take(j, "p", s.p);
  if (j.contains("mix")) {
    const auto& m = j.at("mix");
    if (!m.is_object()) throw UsageError("mix must be an object");
    for (const auto& [k, v] : m.items())
      if (k != "search" && k != "insert" && k != "erase" && k != "update") throw UsageError("unknown op kind in mix: " + k);
    s.mix = OpMix{0, 0, 0, 0};
    take(m, "search", s.mix.search);
    take(m, "insert", s.mix.insert);
    take(m, "erase", s.mix.erase);
    take(m, "update", s.mix.update);
  }
  validate(s);
  return s;
}

std::size_t ProgramDag::add(std::vector<std::size_t> preds, std::optional<std::uint64_t> op) {
  for (auto q : preds)
    if (q >= nodes.size()) throw UsageError("DAG predecessor must come earlier");
  nodes.push_back({std::move(preds), op});
  return nodes.size() - 1;
}

namespace {

// Recency model for the coldest-key generator: present keys, least recently
// named first.
class Lru {
 public:
  void touch(Key k) {
    auto it = pos_.find(k);
    if (it != pos_.end()) order_.erase(it->second);
    order_.push_back(k);
    pos_[k] = std::prev(order_.end());
  }
  void drop(Key k) {
    auto it = pos_.find(k);
    if (it == pos_.end()) return;
    order_.erase(it->second);
    pos_.erase(it);
  }
  bool empty() const { return order_.empty(); }
  Key coldest() const { return order_.front(); }

 private:
  std::list<Key> order_;
  std::unordered_map<Key, std::list<Key>::iterator> pos_;
};

}  // namespace

Workload generate(const WorkloadSpec& spec) {
  validate(spec);
  Workload w;
  w.spec = spec;
  std::mt19937_64 rng(spec.seed);

  // popularity order for zipf and the hot set
  std::vector<Key> order(spec.universe);
  for (std::uint64_t i = 0; i < spec.universe; ++i) order[i] = static_cast<Key>(i);
  std::shuffle(order.begin(), order.end(), rng);

  std::uint64_t id = 0;
  Lru lru;
  for (std::size_t i = 0; i < spec.preload; ++i) {
    Key k = static_cast<Key>(i);
    w.preload.push_back({id++, OpKind::insert, k, static_cast<Value>(k)});
    lru.touch(k);
  }

  std::discrete_distribution<int> kind_dist({spec.mix.search, spec.mix.insert, spec.mix.erase, spec.mix.update});
  std::uniform_int_distribution<std::uint64_t> any_key(0, spec.universe - 1);
  std::optional<std::discrete_distribution<std::size_t>> zipf;
  if (spec.generator == Generator::zipf) {
    std::vector<double> weights(spec.universe);
    for (std::size_t i = 0; i < weights.size(); ++i) weights[i] = 1.0 / std::pow(static_cast<double>(i + 1), spec.zipf_s);
    zipf.emplace(weights.begin(), weights.end());
  }
  std::uniform_int_distribution<std::size_t> hot(0, spec.hot_set - 1);

  w.chains.assign(spec.width, {});
  for (std::size_t i = 0; i < spec.N; ++i) {
    static constexpr OpKind kinds[] = {OpKind::search, OpKind::insert, OpKind::erase, OpKind::update};
    Operation op;
    op.op_id = id++;
    op.kind = kinds[kind_dist(rng)];
    switch (spec.generator) {
      case Generator::uniform: op.key = static_cast<Key>(any_key(rng)); break;
      case Generator::zipf: op.key = order[(*zipf)(rng)]; break;
      case Generator::hot_set: op.key = order[hot(rng)]; break;
      case Generator::adversarial_coldest:
        op.key = lru.empty() ? static_cast<Key>(any_key(rng)) : lru.coldest();
        break;
    }
    if (op.kind == OpKind::insert || op.kind == OpKind::update) op.payload = static_cast<Value>(rng() % 1000000);
    if (op.kind == OpKind::erase) lru.drop(op.key);
    else if (op.kind == OpKind::insert || !lru.empty()) lru.touch(op.key);
    w.chains[i % spec.width].push_back(op);
  }

  std::size_t source = w.dag.add({});
  for (const auto& c : w.chains) {
    std::size_t last = source;
    for (const auto& op : c) {
      for (std::size_t t = 0; t < spec.think; ++t) last = w.dag.add({last});
      last = w.dag.add({last}, op.op_id);
    }
    w.d = std::max(w.d, c.size());
  }
  return w;
}

double weighted_span(const ProgramDag& dag, const std::vector<std::pair<std::uint64_t, std::uint64_t>>& ranks) {
  std::unordered_map<std::uint64_t, std::uint64_t> rank(ranks.begin(), ranks.end());
  std::vector<double> best(dag.nodes.size(), 0.0);
  double top = 0;
  for (std::size_t i = 0; i < dag.nodes.size(); ++i) {
    const auto& n = dag.nodes[i];
    double in = 0;
    for (auto q : n.preds) in = std::max(in, best[q]);
    if (n.op_id) {
      auto it = rank.find(*n.op_id);
      if (it == rank.end() || it->second == 0) throw UsageError("map call without an access rank");
      in += std::log2(static_cast<double>(it->second)) + 1.0;
    }
    best[i] = in;
    top = std::max(top, in);
  }
  return top;
}

}  // namespace wsm::bench
