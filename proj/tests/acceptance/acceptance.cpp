// One pass/fail line per acceptance criterion. Bound lines compare against the
// frozen constants (include/wsm/bench/constants.hpp) times their slack.

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "wsm/bench/constants.hpp"
#include "wsm/bench/probes.hpp"
#include "wsm/bench/report.hpp"
#include "wsm/bench/suites.hpp"

using namespace wsm;
using namespace wsm::bench;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

// Every weak-priority run adds its step quota tally here.
struct QuotaTally {
  std::uint64_t steps = 0;
  std::uint64_t violations = 0;
  void add(const Report& r) {
    if (r.metrics.scheduler != rt::SchedulerKind::weak_priority) return;
    steps += r.metrics.quota_checked_steps;
    violations += r.metrics.quota_violations;
  }
} quota;

// Worst measured/model ratio of the named lines, and whether they all passed.
struct Worst {
  double ratio = 0;
  bool pass = true;
  std::string where;

  void add(const Report& r, const std::string& name) {
    for (const auto& l : r.lines) {
      if (l.name.rfind(name, 0) != 0) continue;
      if (l.ratio() > ratio) {
        ratio = l.ratio();
        where = l.name + " (" + to_string(r.spec.generator) + ", p=" + std::to_string(r.spec.p) +
                ", width=" + std::to_string(r.spec.width) + ", seed=" + std::to_string(r.spec.seed) + ")";
      }
      if (l.asserted && !l.pass) pass = false;
    }
  }
};

std::string fmt(double x, int digits = 2) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << x;
  return os.str();
}

Verdict equivalence() {
  Verdict v;
  std::size_t runs = 0, bad = 0, not_preserving = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto w = generate(suites::equivalence_workload(seed));
    for (auto s : {Structure::m0, Structure::m1, Structure::m2}) {
      auto r = run_experiment(w, s, {.scheduler = {}, .shuffle_seed = seed});
      quota.add(r);
      ++runs;
      if (!r.line("equivalence")->pass) ++bad;
      if (s == Structure::m1 && !r.line("batch_preserving")->pass) ++not_preserving;
    }
  }
  v.detail << runs << " runs (m0, m1, m2 x 100 seeds): " << bad << " replay mismatches, " << not_preserving
           << " m1 runs not batch-preserving";
  v.require(bad == 0, "replay mismatch");
  v.require(not_preserving == 0, "batch preservation");
  return v;
}

Verdict m0_bound() {
  Verdict v;
  Worst w;
  std::uint64_t promotion = 0;
  for (const auto& s : suites::m0_acceptance()) {
    auto r = run_experiment(s, Structure::m0);
    w.add(r, "m0.work");
    promotion += static_cast<std::uint64_t>(r.line("m0.promotion")->measured);
    v.require(r.line("equivalence")->pass, "m0 equivalence");
  }
  v.detail << "steps/W_L worst " << fmt(w.ratio) << " vs limit " << fmt(frozen::slack * frozen::m0_work) << " at "
           << w.where << "; promotion violations " << promotion;
  v.require(w.pass, "working-set bound");
  v.require(promotion == 0, "promotion bound");
  return v;
}

Verdict entropy_sort() {
  Verdict v;
  auto c = probe::sort_outputs(1, 1000, 400);
  const double esort_limit = frozen::slack * frozen::esort_comparisons;
  v.detail << c.inputs << " inputs, " << c.mismatches << " mismatches; esort cmp/(nH+n) worst " << fmt(c.esort_ratio)
           << " vs " << fmt(esort_limit) << ", " << c.below_lower_bound << " below n-1";
  v.require(c.mismatches == 0, "sorted output");
  v.require(c.esort_ratio <= esort_limit, "esort comparisons");
  v.require(c.below_lower_bound == 0, "esort lower bound");

  const double span_limit = frozen::slack * frozen::pesort_span;
  v.detail << "; pesort span/(lg n)^2 at n=2^6..2^14:";
  bool span_ok = true;
  for (int e = 6; e <= 14; ++e) {
    double r = probe::pesort_span_ratio(std::size_t{1} << e, 1);
    v.detail << " " << fmt(r, 1);
    span_ok = span_ok && r <= span_limit;
  }
  v.detail << " vs " << fmt(span_limit, 1);
  v.require(span_ok, "pesort span");

  const std::size_t pivots = probe::ppivot_violations(1, 10000, 16, 512);
  v.detail << "; ppivot outside middle quartiles " << pivots << "/10000";
  v.require(pivots == 0, "ppivot rank");
  return v;
}

Verdict batched_tree() {
  Verdict v;
  auto c = probe::tree_sequences(1, 1000);
  const double slope = probe::tree_span_slope(1, 4, 16);
  v.detail << c.sequences << " sequences, " << c.batches << " batches, " << c.audit_failures
           << " audit failures, " << c.reverse_failures << " reverse-index failures; span slope per log2 n "
           << fmt(slope) << " in [" << fmt(frozen::tree_span_slope_lo) << ", " << fmt(frozen::tree_span_slope_hi)
           << "]";
  v.require(c.audit_failures == 0, "structural audit");
  v.require(c.reverse_failures == 0, "reverse index");
  v.require(slope >= frozen::tree_span_slope_lo && slope <= frozen::tree_span_slope_hi, "span slope");
  return v;
}

Verdict m1_bounds() {
  Verdict v;
  Worst work, span;
  std::size_t runs = 0;
  for (const auto& s : suites::batched_acceptance()) {
    auto r = run_experiment(s, Structure::m1);
    ++runs;
    work.add(r, "m1.work");
    span.add(r, "m1.span");
    v.require(r.line("equivalence")->pass, "m1 equivalence");
  }
  v.detail << runs << " runs; work/(W_L+e_L lg p) worst " << fmt(work.ratio) << " vs "
           << fmt(frozen::slack * frozen::m1_work) << "; span/(N/p+d(lg^2 p+lg n)) worst " << fmt(span.ratio)
           << " vs " << fmt(frozen::slack * frozen::m1_span) << " at " << span.where;
  v.require(work.pass, "effective work");
  v.require(span.pass, "effective span");
  return v;
}

Verdict m2_invariants() {
  Verdict v;
  std::size_t failing = 0;
  std::uint64_t audits = 0, rank_checks = 0;
  Worst delay;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    auto r = run_experiment(suites::m2_invariant_workload(seed), Structure::m2,
                            {.scheduler = {}, .shuffle_seed = seed, .audit_rank = true, .audit_segments = seed % 10 == 0});
    quota.add(r);
    audits += r.audit_points;
    rank_checks += r.rank_checks;
    delay.add(r, "m2.front_delay.");
    if (!r.line("audits")->pass || !r.line("equivalence")->pass) {
      if (!failing && !r.failures.empty()) v.detail << "first failure: " << r.failures.front() << "; ";
      ++failing;
    }
  }
  v.detail << "100 seeds, " << audits << " audit points, " << rank_checks << " rank checks, " << failing
           << " seeds with a violation; front delay / 2^(m+k) worst " << fmt(delay.ratio) << " vs "
           << fmt(frozen::slack * frozen::m2_front_delay) << " at " << delay.where;
  v.require(failing == 0, "balance, filter, distinctness or rank invariant");
  v.require(audits > 0 && rank_checks > 0, "audits ran");
  v.require(delay.pass, "front access delay");
  return v;
}

Verdict m2_bounds() {
  Verdict v;
  Worst work, span, delay;
  std::size_t runs = 0;
  for (const auto& s : suites::batched_acceptance()) {
    auto r = run_experiment(s, Structure::m2);
    quota.add(r);
    ++runs;
    work.add(r, "m2.work");
    span.add(r, "m2.span");
    v.require(r.line("equivalence")->pass, "m2 equivalence");
    v.require(r.line("audits")->pass, "m2 audits");
  }
  v.detail << runs << " weak-priority runs; work/(W_L+e_L lg p) worst " << fmt(work.ratio) << " vs "
           << fmt(frozen::slack * frozen::m2_work) << "; span/(W_L/p+d lg^2 p+s_L) worst " << fmt(span.ratio)
           << " vs " << fmt(frozen::slack * frozen::m2_span) << " at " << span.where;
  v.require(work.pass, "effective work");
  v.require(span.pass, "effective span");

  // plain greedy: equivalence asserted, bounds only reported
  Worst greedy_span;
  std::size_t greedy_bad = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto r = run_experiment(suites::equivalence_workload(seed), Structure::m2,
                            {.scheduler = rt::SchedulerKind::greedy, .shuffle_seed = seed});
    greedy_span.add(r, "m2.span");
    if (!r.line("equivalence")->pass) ++greedy_bad;
  }
  v.detail << "; greedy: " << greedy_bad << "/10 mismatches, span ratio " << fmt(greedy_span.ratio) << " (reported)";
  v.require(greedy_bad == 0, "greedy equivalence");
  return v;
}

Verdict span_separation() {
  Verdict v;
  bool ok = true;
  v.detail << "ds path per hot call, m2/m1:";
  for (std::size_t p : {4u, 8u}) {
    const auto w = suites::hot_chain(p, 1);
    auto r1 = run_experiment(w, Structure::m1);
    auto r2 = run_experiment(w, Structure::m2);
    quota.add(r2);
    v.require(r1.line("equivalence")->pass && r2.line("equivalence")->pass, "equivalence");
    const double s1 = r1.chain_ds_per_call[0], s2 = r2.chain_ds_per_call[0];
    v.detail << " p=" << p << ": " << fmt(s2, 1) << "/" << fmt(s1, 1) << " = " << fmt(s2 / s1);
    ok = ok && s2 <= 0.7 * s1;
  }
  v.detail << " (need <= 0.70)";
  v.require(ok, "separation");
  return v;
}

Verdict locks_and_quota() {
  Verdict v;
  auto bad = probe::lock_golden_mismatches();
  v.detail << "golden traces k=2,3, all waiter subsets and arrival orders: " << bad.size() << " mismatches";
  if (!bad.empty()) v.detail << " (" << bad.front() << ")";
  v.require(bad.empty(), "golden traces");
  v.detail << "; weak-priority quota violations " << quota.violations << " over " << quota.steps << " steps";
  v.require(quota.steps > 0, "weak-priority runs recorded");
  v.require(quota.violations == 0, "quota");
  return v;
}

Verdict parallel_buffer() {
  Verdict v;
  const std::size_t lost = probe::pbuffer_lost_or_duplicated(1, 200);
  double worst = 0;
  for (std::size_t p : {4u, 8u, 16u})
    for (std::size_t b : {std::size_t{1}, p, p * p, 4 * p * p}) worst = std::max(worst, probe::flush_span_ratio(p, b));
  v.detail << "200 shuffled runs, " << lost << " lost or duplicated; flush span/(lg p+lg b+1) worst " << fmt(worst)
           << " vs " << fmt(frozen::slack * frozen::flush_span);
  v.require(lost == 0, "lost or duplicated");
  v.require(worst <= frozen::slack * frozen::flush_span, "flush span");
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> only;
  app.add_option("--criterion", only, "run only these criteria (1-10)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> run;
  };
  // criterion 9 reads the quota tally of the weak-priority runs before it
  const std::vector<Criterion> all = {
      {1, "semantic equivalence", equivalence},     {2, "M0 working-set bound", m0_bound},
      {3, "entropy sort", entropy_sort},            {4, "batched 2-3 tree", batched_tree},
      {5, "M1 bounds", m1_bounds},                  {6, "M2 invariants", m2_invariants},
      {7, "M2 bounds", m2_bounds},                  {8, "span separation", span_separation},
      {9, "locks and weak-priority quota", locks_and_quota}, {10, "parallel buffer", parallel_buffer},
  };
  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v = c.run();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (v.pass ? "PASS" : "FAIL") << "  " << std::setw(2) << c.id << "  " << c.name << ": "
              << v.detail.str() << "  (" << fmt(secs, 1) << " s)" << std::endl;
    if (!v.pass) ++failed;
  }
  return failed ? 1 : 0;
}
