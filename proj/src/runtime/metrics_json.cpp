#include "wsm/runtime/metrics_json.hpp"

namespace wsm::rt {

nlohmann::json to_json(const ExecutionMetrics& m) {
  nlohmann::json j;
  j["p"] = m.p;
  j["scheduler"] = to_string(m.scheduler);
  j["T1"] = m.T1;
  j["T_inf"] = m.T_inf;
  j["per_structure"] = {
      {"ds", {{"work", m.ds_work}, {"span", m.ds_span}}},
      {"buffer", {{"work", m.buffer_work}, {"span", m.buffer_span}}},
  };
  j["effective"] = {{"work", m.ds_work + m.buffer_work}, {"span", m.structure_span}};
  j["total"] = {{"nodes", m.total_nodes}, {"span", m.total_span}};
  j["steps"] = {
      {"total", m.steps},
      {"high_busy", m.step_classes.high_busy},
      {"high_idle", m.step_classes.high_idle},
      {"filter_full", m.step_classes.filter_full},
      {"filter_empty", m.step_classes.filter_empty},
      {"quota_checked", m.quota_checked_steps},
      {"quota_violations", m.quota_violations},
      {"progress_violations", m.progress_violations},
  };
  return j;
}

}  // namespace wsm::rt
