#include "wsm/bench/report.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <unordered_map>

#include "wsm/bench/constants.hpp"
#include "wsm/maps/m1.hpp"
#include "wsm/maps/m2.hpp"
#include "wsm/runtime/metrics_json.hpp"
#include "wsm/seq/wsmap.hpp"

namespace wsm::bench {

const char* to_string(Structure s) {
  switch (s) {
    case Structure::m0: return "m0";
    case Structure::m1: return "m1";
    case Structure::m2: return "m2";
    case Structure::oracle: return "oracle";
  }
  return "?";
}

Structure parse_structure(const std::string& s) {
  for (auto x : {Structure::m0, Structure::m1, Structure::m2, Structure::oracle})
    if (s == to_string(x)) return x;
  throw UsageError("unknown structure: " + s);
}

bool Report::passed() const {
  return std::all_of(lines.begin(), lines.end(), [](const Line& l) { return !l.asserted || l.pass; });
}

const Line* Report::line(const std::string& name) const {
  for (const auto& l : lines)
    if (l.name == name) return &l;
  return nullptr;
}

namespace {

using Results = std::unordered_map<std::uint64_t, OpResult>;

double lg(double x) { return std::log2(std::max(x, 2.0)); }

Line exact(std::string name, double violations, std::string note = {}) {
  Line l{std::move(name), violations, 1, 0, true, violations <= 0, std::move(note)};
  return l;
}

Line bounded(std::string name, double measured, double model, double frozen_c, bool asserted = true) {
  Line l;
  l.name = std::move(name);
  l.measured = measured;
  l.model = model;
  l.limit = frozen::slack * frozen_c;
  l.asserted = asserted;
  l.pass = measured <= l.limit * model;
  if (frozen_c <= 0) l.note = "uncalibrated";
  else if (!asserted) l.note = "reported only";
  return l;
}

template <class Map>
rt::Task<> chain_client(rt::Runtime& rt, Map& m, const std::vector<Operation>& ops, Results& got, std::size_t think,
                        double& ds_per_call) {
  for (const auto& op : ops) {
    for (std::size_t i = 0; i < think; ++i) co_await rt.tick();
    got[op.op_id] = co_await m.call(op);
  }
  if (!ops.empty()) ds_per_call = static_cast<double>(rt.current_weight().ds) / static_cast<double>(ops.size());
}

// First mismatch between the callers' results, the recorded results and a
// replay of the linearization; empty when they all agree.
std::string check_equivalence(const std::vector<maps::LinRecord>& lin, const Results& got) {
  std::vector<Operation> ops;
  ops.reserve(lin.size());
  for (const auto& r : lin) ops.push_back(r.op);
  auto expect = oracle_replay(ops);
  std::unordered_map<std::uint64_t, int> seen;
  for (std::size_t i = 0; i < lin.size(); ++i) {
    const auto id = std::to_string(lin[i].op.op_id);
    if (++seen[lin[i].op.op_id] > 1) return "op " + id + " linearized twice";
    if (!(expect[i] == lin[i].result)) return "op " + id + " disagrees with the replay";
    auto it = got.find(lin[i].op.op_id);
    if (it != got.end() && !(it->second == lin[i].result)) return "op " + id + " returned something else than recorded";
  }
  for (const auto& [id, r] : got)
    if (!seen.count(id)) return "op " + std::to_string(id) + " missing from the linearization";
  return {};
}

// Fills the working-set quantities from a linearization that starts with the preloads.
void account(Report& rep, const Workload& w, const std::vector<Operation>& L) {
  auto ann = annotate(L);
  const std::uint64_t first_call = w.preload.size();
  std::vector<std::pair<std::uint64_t, std::uint64_t>> ranks;
  std::vector<Key> keys;
  BoundReport b;
  for (const auto& a : ann) {
    rep.n_max = std::max(rep.n_max, a.size_before + (a.op.kind == OpKind::insert ? 1 : 0));
    if (a.op.op_id < first_call) continue;
    ++b.N;
    b.W_L += std::log2(static_cast<double>(a.rank)) + 1.0;
    if (a.size_before < w.spec.p) ++b.e_L;
    ranks.emplace_back(a.op.op_id, a.rank);
    keys.push_back(a.op.key);
  }
  b.IW_L = insert_working_set_bound(keys);
  rep.bounds = b;
  rep.d = w.d;
  rep.s_L = weighted_span(w.dag, ranks);
}

void run_serial(Report& rep, const Workload& w) {
  std::vector<Operation> L = w.preload;
  std::vector<Operation> calls;
  for (const auto& c : w.chains) calls.insert(calls.end(), c.begin(), c.end());
  std::sort(calls.begin(), calls.end(), [](const Operation& a, const Operation& b) { return a.op_id < b.op_id; });
  L.insert(L.end(), calls.begin(), calls.end());
  auto expect = oracle_replay(L);
  account(rep, w, L);

  if (rep.structure == Structure::oracle) {
    rep.lines.push_back(exact("equivalence", 0));
    return;
  }
  seq::WorkingSetMap<Value> map;
  for (const auto& op : w.preload) map.insert_new(op.key, op.value());
  const std::uint64_t before = map.steps();
  std::size_t mismatches = 0, promotion = 0;
  for (std::size_t i = w.preload.size(); i < L.size(); ++i) {
    const Operation& op = L[i];
    OpResult r;
    if (op.kind == OpKind::search || op.kind == OpKind::update) {
      auto f = map.search(op.key);
      r.found = f.found;
      if (f.found) {
        r.value = *f.value;
        if (op.kind == OpKind::update) *f.value = op.value();
        // A hit in S[k] moves to the front of S[k-1]. Its old rank was at
        // least |S[0..k-1]|+1, which makes this check conservative.
        std::uint64_t below = 0;
        for (std::size_t j = 0; j + 1 < f.segment; ++j) below += map.segment_size(j);
        const std::uint64_t post = below + 1;
        const std::uint64_t q_low = below + (f.segment ? map.segment_size(f.segment - 1) : 0) + 1;
        if (static_cast<double>(post) > 2.0 * std::sqrt(static_cast<double>(q_low))) ++promotion;
      }
    } else {
      r = map.apply(op);
    }
    if (!(r == expect[i])) {
      if (!mismatches) rep.failures.push_back("m0: op " + std::to_string(op.op_id) + " disagrees with the replay");
      ++mismatches;
    }
  }
  rep.seq_steps = map.steps() - before;
  rep.lines.push_back(exact("equivalence", static_cast<double>(mismatches)));
  rep.lines.push_back(bounded("m0.work", static_cast<double>(rep.seq_steps), rep.bounds.W_L, frozen::m0_work));
  rep.lines.push_back(exact("m0.promotion", static_cast<double>(promotion)));
}

template <class Map, class Options>
void run_batched(Report& rep, const Workload& w, const RunOptions& opts, rt::SchedulerKind sched, Options mopts) {
  rt::Runtime rt({.p = w.spec.p, .scheduler = sched, .shuffle_seed = opts.shuffle_seed});
  Map m(rt, mopts);
  m.preload(w.preload);
  Results got;
  rep.chain_ds_per_call.assign(w.chains.size(), 0.0);
  for (std::size_t c = 0; c < w.chains.size(); ++c)
    rt.spawn_root(chain_client(rt, m, w.chains[c], got, w.spec.think, rep.chain_ds_per_call[c]), rt::Owner::program);
  rep.metrics = rt.run();

  std::vector<Operation> L;
  L.reserve(m.linearization().size());
  for (const auto& r : m.linearization()) L.push_back(r.op);
  account(rep, w, L);

  std::string eq = check_equivalence(m.linearization(), got);
  std::size_t calls = 0;
  for (const auto& c : w.chains) calls += c.size();
  if (eq.empty() && got.size() != calls) eq = "some calls never returned";
  if (!eq.empty()) rep.failures.push_back(eq);
  rep.lines.push_back(exact("equivalence", eq.empty() ? 0 : 1, eq));
  for (const auto& f : m.audit_failures()) rep.failures.push_back(f);
  rep.lines.push_back(exact("audits", static_cast<double>(m.audit_failures().size())));

  const double p = static_cast<double>(w.spec.p);
  const double work = static_cast<double>(rep.metrics.ds_work + rep.metrics.buffer_work);
  const double span = static_cast<double>(rep.metrics.structure_span);
  const double work_model = rep.bounds.W_L + static_cast<double>(rep.bounds.e_L) * lg(p);
  const bool weak = sched == rt::SchedulerKind::weak_priority;
  if constexpr (std::is_same_v<Map, maps::M1>) {
    std::vector<Operation> calls_only(L.begin() + static_cast<std::ptrdiff_t>(w.preload.size()), L.end());
    auto batches = m.batches();
    if (!batches.empty() && !w.preload.empty()) batches.erase(batches.begin());
    bool preserving = false;
    try {
      preserving = validate_batch_preserving(batches, calls_only);
    } catch (const UsageError& e) {
      rep.failures.push_back(e.what());
    }
    rep.lines.push_back(exact("batch_preserving", preserving ? 0 : 1));
    const double span_model = static_cast<double>(rep.bounds.N) / p +
                              static_cast<double>(rep.d) * (lg(p) * lg(p) + lg(static_cast<double>(rep.n_max)));
    rep.lines.push_back(bounded("m1.work", work, work_model, frozen::m1_work));
    rep.lines.push_back(bounded("m1.span", span, span_model, frozen::m1_span));
  } else {
    const double span_model = rep.bounds.W_L / p + static_cast<double>(rep.d) * lg(p) * lg(p) + rep.s_L;
    rep.lines.push_back(bounded("m2.work", work, work_model, frozen::m2_work, weak));
    rep.lines.push_back(bounded("m2.span", span, span_model, frozen::m2_span, weak));
    const auto& st = m.m2_stats();
    rep.audit_points = st.audits;
    rep.rank_checks = st.rank_checks;
    for (std::size_t k = 0; k < st.front_delay.size(); ++k) {
      std::uint64_t delay = st.front_delay[k];
      if (k == 0) delay = std::max(delay, st.interface_front_delay);
      if (delay == 0) continue;
      const double model = std::ldexp(1.0, static_cast<int>(m.first_slab() + k));
      rep.lines.push_back(bounded("m2.front_delay." + std::to_string(k), static_cast<double>(delay), model,
                                  frozen::m2_front_delay, weak));
    }
  }
  if (weak) rep.lines.push_back(exact("quota", static_cast<double>(rep.metrics.quota_violations)));
}

}  // namespace

Report run_experiment(const Workload& w, Structure s, RunOptions opts) {
  Report rep;
  rep.structure = s;
  rep.spec = w.spec;
  switch (s) {
    case Structure::m0:
    case Structure::oracle: run_serial(rep, w); break;
    case Structure::m1:
      run_batched<maps::M1>(rep, w, opts, opts.scheduler.value_or(rt::SchedulerKind::greedy),
                            maps::M1Options{.audit_segments = opts.audit_segments});
      break;
    case Structure::m2:
      run_batched<maps::M2>(rep, w, opts, opts.scheduler.value_or(rt::SchedulerKind::weak_priority),
                            maps::M2Options{.audit_rank = opts.audit_rank, .audit_segments = opts.audit_segments});
      break;
  }
  return rep;
}

}  // namespace wsm::bench

namespace wsm::bench {

nlohmann::json to_json(const Report& r) {
  nlohmann::json lines = nlohmann::json::array();
  for (const auto& l : r.lines)
    lines.push_back({{"name", l.name},
                     {"measured", l.measured},
                     {"model", l.model},
                     {"ratio", l.ratio()},
                     {"limit", l.limit},
                     {"asserted", l.asserted},
                     {"pass", l.pass},
                     {"note", l.note}});
  return {{"structure", to_string(r.structure)},
          {"workload", to_json(r.spec)},
          {"bounds", wsm::to_json(r.bounds)},
          {"d", r.d},
          {"s_L", r.s_L},
          {"n_max", r.n_max},
          {"metrics", rt::to_json(r.metrics)},
          {"seq_steps", r.seq_steps},
          {"chain_ds_per_call", r.chain_ds_per_call},
          {"audit_points", r.audit_points},
          {"rank_checks", r.rank_checks},
          {"lines", lines},
          {"failures", r.failures},
          {"passed", r.passed()}};
}

std::vector<std::string> check_report(const nlohmann::json& j) {
  std::vector<std::string> failed;
  if (!j.is_object() || !j.contains("lines") || !j.at("lines").is_array()) throw UsageError("report has no lines");
  for (const auto& l : j.at("lines")) {
    const auto name = l.at("name").get<std::string>();
    const double measured = l.at("measured").get<double>();
    const double model = l.at("model").get<double>();
    const double limit = l.at("limit").get<double>();
    if (!std::isfinite(measured) || !std::isfinite(model)) {
      failed.push_back(name + " (not finite)");
      continue;
    }
    if (l.at("asserted").get<bool>() && !(measured <= limit * model)) failed.push_back(name);
  }
  return failed;
}

std::string format_table(const Report& r) {
  std::ostringstream os;
  os << to_string(r.structure) << "  N=" << r.bounds.N << " d=" << r.d << " n_max=" << r.n_max << " W_L=" << std::fixed
     << std::setprecision(1) << r.bounds.W_L << " e_L=" << r.bounds.e_L << " s_L=" << r.s_L << "\n";
  for (const auto& l : r.lines) {
    os << "  " << std::left << std::setw(20) << l.name << std::right << std::setw(14) << std::setprecision(1)
       << l.measured << std::setw(14) << l.model << std::setw(9) << std::setprecision(3) << l.ratio() << "  limit "
       << std::setw(7) << l.limit << "  " << (l.asserted ? (l.pass ? "pass" : "FAIL") : "info");
    if (!l.note.empty()) os << "  (" << l.note << ")";
    os << "\n";
  }
  return os.str();
}

}  // namespace wsm::bench
