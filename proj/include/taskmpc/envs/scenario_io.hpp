#pragma once

#include "taskmpc/envs/robot_arm.hpp"
#include "taskmpc/envs/vehicle.hpp"

#include <nlohmann/json_fwd.hpp>

#include <string>

namespace taskmpc::envs {

// Static description of the robot-arm pushing scenario: world constants plus
// the task instruction handed to the planner.
struct RobotScenario {
  std::string name;
  std::string instruction;
  double arm_start = 0.0;
  double box_position = 1.0;  // station of the box face the arm first touches
  double target_speed = 0.5;
  double box_mass = 1.0;
  double friction_coeff = 0.2;
  double gravity = 9.81;
  double dt = 0.1;
  double control_bound = 1.0;
};

// Initial world for a robot scenario (arm at rest at arm_start, box at rest
// at box_position).
RobotArmWorld make_world(const RobotScenario& scenario);

// Scenario file schemas (strict: unknown keys are rejected, all fields
// type-checked)
// ----------------------------------------------------------------------
// Robot arm:
// {
//   "kind": "robot_arm",
//   "name": "...", "instruction": "...",
//   "arm_start": 0.0, "box_position": 1.0, "target_speed": 0.5,
//   "box_mass": 1.0, "friction_coeff": 0.2, "gravity": 9.81,
//   "dt": 0.1, "control_bound": 1.0
// }
// All numeric fields are optional and default to the values above.
//
// Vehicle:
// {
//   "kind": "vehicle",
//   "name": "...", "instruction": "...",
//   "start_position": 0.0, "start_velocity": 0.0,
//   "mass": 1500.0, "drag": 200.0, "force_bound": 5000.0, "dt": 0.1,
//   "target_position": 50.0, "target_tolerance": 0.5, "episode_steps": 600,
//   "entry_window": [40, 55], "crossing_steps": 30,
//   "risk_object": "children",
//   "objects": [
//     {"id": "bus", "class": "SchoolBus", "station": 34.0, "lateral_offset": 2.5},
//     {"id": "children", "class": "Child", "station": 34.0, "lateral_offset": 3.0}
//   ]
// }
// "kind", "name", "instruction", "entry_window", "risk_object", and "objects"
// are required; world constants default as above. "risk_object" must name a
// declared object.

RobotScenario robot_scenario_from_json(const nlohmann::json& doc);
VehicleScenario vehicle_scenario_from_json(const nlohmann::json& doc);

RobotScenario load_robot_scenario(const std::string& path);
VehicleScenario load_vehicle_scenario(const std::string& path);

}  // namespace taskmpc::envs
