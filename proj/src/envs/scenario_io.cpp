#include "taskmpc/envs/scenario_io.hpp"

#include "../json_strict.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace taskmpc::envs {

using nlohmann::json;

namespace {

constexpr const char* kSchema = "scenario";

double number_or(const json& obj, const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  return jsonu::get_number(kSchema, obj, key, "scenario");
}

int int_or(const json& obj, const std::string& key, int fallback) {
  if (!obj.contains(key)) return fallback;
  return jsonu::get_int(kSchema, obj, key, "scenario");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open scenario file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string require_kind(const json& doc) {
  if (!doc.is_object()) jsonu::fail(kSchema, "document must be an object", doc);
  return jsonu::get_string(kSchema, doc, "kind", "scenario");
}

}  // namespace

RobotArmWorld make_world(const RobotScenario& scenario) {
  RobotArmWorld w;
  w.arm_pos = scenario.arm_start;
  w.arm_vel = 0.0;
  w.box_pos = scenario.box_position;
  w.box_vel = 0.0;
  w.box_mass = scenario.box_mass;
  w.friction_coeff = scenario.friction_coeff;
  w.gravity = scenario.gravity;
  w.dt = scenario.dt;
  w.control_bound = scenario.control_bound;
  return w;
}

RobotScenario robot_scenario_from_json(const json& doc) {
  if (require_kind(doc) != "robot_arm") jsonu::fail(kSchema, "'kind' must be \"robot_arm\"", doc);
  jsonu::reject_unknown(kSchema, doc,
                        {"kind", "name", "instruction", "arm_start", "box_position",
                         "target_speed", "box_mass", "friction_coeff", "gravity", "dt",
                         "control_bound"},
                        "robot scenario");
  RobotScenario s;
  s.name = jsonu::get_string(kSchema, doc, "name", "robot scenario");
  s.instruction = jsonu::get_string(kSchema, doc, "instruction", "robot scenario");
  s.arm_start = number_or(doc, "arm_start", s.arm_start);
  s.box_position = number_or(doc, "box_position", s.box_position);
  s.target_speed = number_or(doc, "target_speed", s.target_speed);
  s.box_mass = number_or(doc, "box_mass", s.box_mass);
  s.friction_coeff = number_or(doc, "friction_coeff", s.friction_coeff);
  s.gravity = number_or(doc, "gravity", s.gravity);
  s.dt = number_or(doc, "dt", s.dt);
  s.control_bound = number_or(doc, "control_bound", s.control_bound);
  if (s.dt <= 0 || s.box_mass <= 0 || s.control_bound <= 0)
    jsonu::fail(kSchema, "dt, box_mass, and control_bound must be positive", doc);
  return s;
}

VehicleScenario vehicle_scenario_from_json(const json& doc) {
  if (require_kind(doc) != "vehicle") jsonu::fail(kSchema, "'kind' must be \"vehicle\"", doc);
  jsonu::reject_unknown(kSchema, doc,
                        {"kind", "name", "instruction", "start_position", "start_velocity",
                         "mass", "drag", "force_bound", "dt", "target_position",
                         "target_tolerance", "episode_steps", "entry_window", "crossing_steps",
                         "risk_object", "objects"},
                        "vehicle scenario");
  VehicleScenario s;
  s.name = jsonu::get_string(kSchema, doc, "name", "vehicle scenario");
  s.instruction = jsonu::get_string(kSchema, doc, "instruction", "vehicle scenario");
  s.start_position = number_or(doc, "start_position", s.start_position);
  s.start_velocity = number_or(doc, "start_velocity", s.start_velocity);
  s.mass = number_or(doc, "mass", s.mass);
  s.drag = number_or(doc, "drag", s.drag);
  s.force_bound = number_or(doc, "force_bound", s.force_bound);
  s.dt = number_or(doc, "dt", s.dt);
  s.target_position = number_or(doc, "target_position", s.target_position);
  s.target_tolerance = number_or(doc, "target_tolerance", s.target_tolerance);
  s.episode_steps = int_or(doc, "episode_steps", s.episode_steps);
  s.crossing_steps = int_or(doc, "crossing_steps", s.crossing_steps);

  if (!doc.contains("entry_window") || !doc["entry_window"].is_array() ||
      doc["entry_window"].size() != 2 || !doc["entry_window"][0].is_number_integer() ||
      !doc["entry_window"][1].is_number_integer())
    jsonu::fail(kSchema, "'entry_window' must be a [lo, hi] integer pair", doc);
  s.entry_window_lo = doc["entry_window"][0].get<int>();
  s.entry_window_hi = doc["entry_window"][1].get<int>();
  if (s.entry_window_lo < 0 || s.entry_window_hi < s.entry_window_lo)
    jsonu::fail(kSchema, "'entry_window' must satisfy 0 <= lo <= hi", doc);

  s.risk_object = jsonu::get_string(kSchema, doc, "risk_object", "vehicle scenario");

  if (!doc.contains("objects") || !doc["objects"].is_array())
    jsonu::fail(kSchema, "vehicle scenario needs an 'objects' array", doc);
  for (const json& oj : doc["objects"]) {
    if (!oj.is_object()) jsonu::fail(kSchema, "object entry must be an object", oj);
    jsonu::reject_unknown(kSchema, oj, {"id", "class", "station", "lateral_offset"},
                          "scene object");
    SceneObject o;
    o.id = jsonu::get_string(kSchema, oj, "id", "scene object");
    o.cls = object_class_from_string(jsonu::get_string(kSchema, oj, "class", "scene object"));
    o.station = jsonu::get_number(kSchema, oj, "station", "scene object");
    o.lateral_offset = number_or(oj, "lateral_offset", 0.0);
    for (const SceneObject& prev : s.objects)
      if (prev.id == o.id) jsonu::fail(kSchema, "duplicate object id '" + o.id + "'", doc);
    s.objects.push_back(std::move(o));
  }

  bool risk_known = false;
  for (const SceneObject& o : s.objects) risk_known = risk_known || o.id == s.risk_object;
  if (!risk_known)
    jsonu::fail(kSchema, "'risk_object' does not name a declared object: " + s.risk_object, doc);

  if (s.dt <= 0 || s.mass <= 0 || s.force_bound <= 0 || s.episode_steps <= 0 ||
      s.crossing_steps <= 0 || s.target_tolerance <= 0)
    jsonu::fail(kSchema, "world constants must be positive", doc);
  return s;
}

RobotScenario load_robot_scenario(const std::string& path) {
  return robot_scenario_from_json(jsonu::parse_document(kSchema, read_file(path)));
}

VehicleScenario load_vehicle_scenario(const std::string& path) {
  return vehicle_scenario_from_json(jsonu::parse_document(kSchema, read_file(path)));
}

}  // namespace taskmpc::envs
