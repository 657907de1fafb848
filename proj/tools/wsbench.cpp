#include <fstream>
#include <iostream>

#include <iomanip>
#include <map>

#include "CLI11.hpp"
#include "wsm/bench/probes.hpp"
#include "wsm/bench/report.hpp"
#include "wsm/bench/suites.hpp"

using namespace wsm;
using namespace wsm::bench;

namespace {

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  return nlohmann::json::parse(in);
}

double worst(double current, const Report& r, const std::string& line) {
  const Line* l = r.line(line);
  return l ? std::max(current, l->ratio()) : current;
}

double worst_front_delay(double current, const Report& r) {
  for (const auto& l : r.lines)
    if (l.name.rfind("m2.front_delay.", 0) == 0) current = std::max(current, l.ratio());
  return current;
}

// Measures every frozen constant on the calibration suites.
std::map<std::string, double> calibrate() {
  std::map<std::string, double> c;
  for (const auto& s : suites::m0_calibration()) c["m0_work"] = worst(c["m0_work"], run_experiment(s, Structure::m0), "m0.work");
  for (const auto& s : suites::batched_calibration()) {
    auto r1 = run_experiment(s, Structure::m1);
    c["m1_work"] = worst(c["m1_work"], r1, "m1.work");
    c["m1_span"] = worst(c["m1_span"], r1, "m1.span");
    auto r2 = run_experiment(s, Structure::m2);
    c["m2_work"] = worst(c["m2_work"], r2, "m2.work");
    c["m2_span"] = worst(c["m2_span"], r2, "m2.span");
    c["m2_front_delay"] = worst_front_delay(c["m2_front_delay"], r2);
  }
  for (std::uint64_t seed = 1001; seed <= 1012; ++seed)
    c["m2_front_delay"] = worst_front_delay(c["m2_front_delay"], run_experiment(suites::m2_invariant_workload(seed), Structure::m2));
  c["esort_comparisons"] = probe::sort_outputs(101, 200, 300).esort_ratio;
  for (std::size_t n : {64u, 128u, 256u}) c["pesort_span"] = std::max(c["pesort_span"], probe::pesort_span_ratio(n, 101));
  const double slope = probe::tree_span_slope(101, 4, 10);
  c["tree_span_slope_lo"] = slope / 1.5;
  c["tree_span_slope_hi"] = slope * 1.5;
  for (std::size_t p : {4u, 8u})
    for (std::size_t b : {std::size_t{1}, p, p * p}) c["flush_span"] = std::max(c["flush_span"], probe::flush_span_ratio(p, b));
  return c;
}

void write_constants(std::ostream& os, const std::map<std::string, double>& c) {
  os << "#pragma once\n\n"
     << "// Frozen constants. Regenerate with `wsbench calibrate --out include/wsm/bench/constants.hpp`.\n\n"
     << "namespace wsm::bench::frozen {\n\n"
     << "inline constexpr double slack = 1.5;\n\n";
  os << std::setprecision(6);
  for (const auto& [name, v] : c) os << "inline constexpr double " << name << " = " << v << ";\n";
  os << "\n}  // namespace wsm::bench::frozen\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"working-set map experiments"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run one workload on one structure and write a report");
  std::string structure, workload_path, out_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> p;
  std::string scheduler;
  std::uint64_t shuffle = 0;
  bool audit_rank = false, table = false;
  run->add_option("--structure", structure, "m0, m1, m2 or oracle")
      ->required()
      ->check(CLI::IsMember({"m0", "m1", "m2", "oracle"}));
  run->add_option("--workload", workload_path, "workload spec (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "overrides the workload seed");
  run->add_option("--p", p, "overrides the workload processor count")->check(CLI::PositiveNumber);
  run->add_option("--out", out_path, "report path; stdout when omitted");
  run->add_option("--scheduler", scheduler, "greedy or weak")->check(CLI::IsMember({"greedy", "weak"}));
  run->add_option("--shuffle", shuffle, "seed for random choice among ready nodes (0: FIFO)");
  run->add_flag("--audit-rank", audit_rank, "check the rank invariant after every m2 run");
  run->add_flag("--table", table, "also print a summary table to stderr");

  auto* check = app.add_subcommand("check", "re-check a report; exit status 1 on any failed line");
  std::string report_path;
  check->add_option("--report", report_path, "report path")->required()->check(CLI::ExistingFile);

  auto* cal = app.add_subcommand("calibrate", "measure the frozen constants on the calibration suites");
  std::string constants_path;
  cal->add_option("--out", constants_path, "constants header to write; stdout when omitted");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      WorkloadSpec spec = workload_from_json(read_json(workload_path));
      if (seed) spec.seed = *seed;
      if (p) spec.p = *p;
      RunOptions opts;
      if (scheduler == "greedy") opts.scheduler = rt::SchedulerKind::greedy;
      if (scheduler == "weak") opts.scheduler = rt::SchedulerKind::weak_priority;
      opts.shuffle_seed = shuffle;
      opts.audit_rank = audit_rank;
      Report r = run_experiment(spec, parse_structure(structure), opts);
      const std::string text = to_json(r).dump(2);
      if (out_path.empty()) {
        std::cout << text << "\n";
      } else {
        std::ofstream out(out_path);
        if (!out) throw UsageError("cannot write " + out_path);
        out << text << "\n";
      }
      if (table) std::cerr << format_table(r);
      return r.passed() ? 0 : 1;
    }
    if (*cal) {
      auto c = calibrate();
      if (constants_path.empty()) {
        write_constants(std::cout, c);
      } else {
        std::ofstream out(constants_path);
        if (!out) throw UsageError("cannot write " + constants_path);
        write_constants(out, c);
      }
      return 0;
    }
    if (*check) {
      auto failed = check_report(read_json(report_path));
      for (const auto& f : failed) std::cout << "FAIL " << f << "\n";
      if (failed.empty()) std::cout << "all lines pass\n";
      return failed.empty() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
