#pragma once

#include "json.hpp"
#include "wsm/runtime/runtime.hpp"

namespace wsm::rt {

nlohmann::json to_json(const ExecutionMetrics& m);

}  // namespace wsm::rt
