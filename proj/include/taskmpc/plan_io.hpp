#pragma once

#include "taskmpc/plan.hpp"

#include <nlohmann/json_fwd.hpp>

#include <string>

namespace taskmpc {

// Plan document schema
// --------------------
// {
//   "subtasks": [
//     {
//       "index": 1,
//       "reward": {"template": "QuadraticTracking",
//                  "args": {"target_ref": "box_position", "state_index": 0, "scale": 1.0}},
//       "constraints": [
//         {"template": "ForceLimit", "args": {"threshold_ref": "force_limit"},
//          "latent": false}
//       ],
//       "params": {"box_position": {"value": 1.0, "lower": 1.0, "upper": 1.0}},
//       "window": 30,
//       "terminal": {"kind": "StateWithinTolerance",
//                    "args": {"state_index": 0, "target_ref": "box_position", "tol": 0.02}}
//     }, ...
//   ],
//   "whole_task_done": {"kind": "WindowElapsed", "args": {}}
// }
//
// "scale" defaults to 1, "latent" to false. Constraints may carry an optional
// "provenance" string. Plan-level StateWithinTolerance takes a literal
// "target". Unknown keys are rejected at every level.

TaskPlan plan_from_json(const nlohmann::json& doc);
TaskPlan plan_from_text(const std::string& text);     // parses JSON, then the schema
TaskPlan load_plan_file(const std::string& path);     // source = Fixture

nlohmann::json plan_to_json(const TaskPlan& plan);
std::string plan_to_text(const TaskPlan& plan);       // pretty-printed, deterministic

}  // namespace taskmpc
