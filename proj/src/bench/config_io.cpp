#include "taskmpc/bench/bench.hpp"

#include "../json_strict.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace taskmpc::bench {

using nlohmann::json;

namespace {

constexpr const char* kSchema = "case config";

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Paths inside a config are relative to the config file itself, so a config
// directory can be moved or invoked from any working directory.
std::string resolve(const std::string& value, const std::filesystem::path& base) {
  std::filesystem::path p(value);
  if (p.is_absolute()) return p.string();
  return (base / p).lexically_normal().string();
}

double number_or(const json& obj, const std::string& key, double fallback,
                 const std::string& where) {
  if (!obj.contains(key)) return fallback;
  return jsonu::get_number(kSchema, obj, key, where);
}

int int_or(const json& obj, const std::string& key, int fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  return jsonu::get_int(kSchema, obj, key, where);
}

uint64_t u64_or(const json& obj, const std::string& key, uint64_t fallback,
                const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer() && !obj[key].is_number_unsigned())
    jsonu::fail(kSchema, "missing or non-integer '" + key + "' in " + where, obj);
  return obj[key].get<uint64_t>();
}

std::string string_or(const json& obj, const std::string& key, const std::string& fallback,
                      const std::string& where) {
  if (!obj.contains(key)) return fallback;
  return jsonu::get_string(kSchema, obj, key, where);
}

void overlay_mpc(const json& doc, MpcConfig& mpc) {
  if (!doc.contains("mpc")) return;
  const json& j = doc["mpc"];
  if (!j.is_object()) jsonu::fail(kSchema, "'mpc' must be an object", doc);
  jsonu::reject_unknown(kSchema, j,
                        {"horizon", "iterations", "penalty_weight", "penalty_growth",
                         "penalty_stages", "constraint_tolerance", "grid_points"},
                        "mpc");
  mpc.horizon = int_or(j, "horizon", mpc.horizon, "mpc");
  mpc.iterations = int_or(j, "iterations", mpc.iterations, "mpc");
  mpc.penalty_weight = number_or(j, "penalty_weight", mpc.penalty_weight, "mpc");
  mpc.penalty_growth = number_or(j, "penalty_growth", mpc.penalty_growth, "mpc");
  mpc.penalty_stages = int_or(j, "penalty_stages", mpc.penalty_stages, "mpc");
  mpc.constraint_tolerance =
      number_or(j, "constraint_tolerance", mpc.constraint_tolerance, "mpc");
  mpc.grid_points = int_or(j, "grid_points", mpc.grid_points, "mpc");
}

void overlay_schedule(const json& doc, adapt::LearningSchedule& s) {
  if (!doc.contains("schedule")) return;
  const json& j = doc["schedule"];
  if (!j.is_object()) jsonu::fail(kSchema, "'schedule' must be an object", doc);
  jsonu::reject_unknown(kSchema, j,
                        {"eta0", "gamma", "inner_epochs", "fd_epsilon", "stop_epsilon",
                         "max_outer", "rollouts_per_eval", "base_seed", "global_step_index"},
                        "schedule");
  s.eta0 = number_or(j, "eta0", s.eta0, "schedule");
  s.gamma = number_or(j, "gamma", s.gamma, "schedule");
  s.inner_epochs = int_or(j, "inner_epochs", s.inner_epochs, "schedule");
  s.fd_epsilon = number_or(j, "fd_epsilon", s.fd_epsilon, "schedule");
  s.stop_epsilon = number_or(j, "stop_epsilon", s.stop_epsilon, "schedule");
  s.max_outer = int_or(j, "max_outer", s.max_outer, "schedule");
  s.rollouts_per_eval = int_or(j, "rollouts_per_eval", s.rollouts_per_eval, "schedule");
  s.base_seed = u64_or(j, "base_seed", s.base_seed, "schedule");
  if (j.contains("global_step_index")) {
    if (!j["global_step_index"].is_boolean())
      jsonu::fail(kSchema, "'global_step_index' must be a boolean", j);
    s.global_step_index = j["global_step_index"].get<bool>();
  }
}

}  // namespace

RobotCaseConfig load_robot_case_config(const std::string& path) {
  const json doc = jsonu::parse_document(kSchema, read_file(path));
  if (!doc.is_object()) jsonu::fail(kSchema, "document must be an object", doc);
  jsonu::reject_unknown(
      kSchema, doc,
      {"scenario_file", "fixtures_root", "force_param", "schedule", "mpc", "oracle"},
      "robot case config");
  const std::filesystem::path base = std::filesystem::path(path).parent_path();

  RobotCaseConfig cfg = default_robot_config();
  if (doc.contains("scenario_file")) {
    cfg.scenario = envs::load_robot_scenario(
        resolve(jsonu::get_string(kSchema, doc, "scenario_file", "robot case config"), base));
  }
  cfg.fixtures_root = resolve(string_or(doc, "fixtures_root", "fixtures", "robot case config"),
                              base);
  cfg.force_param = string_or(doc, "force_param", cfg.force_param, "robot case config");
  overlay_schedule(doc, cfg.schedule);
  overlay_mpc(doc, cfg.mpc);

  if (doc.contains("oracle")) {
    const json& j = doc["oracle"];
    if (!j.is_object()) jsonu::fail(kSchema, "'oracle' must be an object", doc);
    jsonu::reject_unknown(kSchema, j, {"lo", "hi", "step", "band_factor"}, "oracle");
    cfg.oracle_lo = number_or(j, "lo", cfg.oracle_lo, "oracle");
    cfg.oracle_hi = number_or(j, "hi", cfg.oracle_hi, "oracle");
    cfg.oracle_step = number_or(j, "step", cfg.oracle_step, "oracle");
    cfg.band_factor = number_or(j, "band_factor", cfg.band_factor, "oracle");
  }
  return cfg;
}

VehicleCaseConfig load_vehicle_case_config(const std::string& path) {
  const json doc = jsonu::parse_document(kSchema, read_file(path));
  if (!doc.is_object()) jsonu::fail(kSchema, "document must be an object", doc);
  jsonu::reject_unknown(kSchema, doc,
                        {"scenario_files", "fixtures_root", "seeds", "seed_base", "mpc",
                         "conservative"},
                        "vehicle case config");
  const std::filesystem::path base = std::filesystem::path(path).parent_path();

  VehicleCaseConfig cfg;
  if (!doc.contains("scenario_files") || !doc["scenario_files"].is_array())
    jsonu::fail(kSchema, "'scenario_files' must be an array of paths", doc);
  for (const json& entry : doc["scenario_files"]) {
    if (!entry.is_string()) jsonu::fail(kSchema, "scenario file entries must be strings", doc);
    cfg.scenarios.push_back(
        envs::load_vehicle_scenario(resolve(entry.get<std::string>(), base)));
  }
  if (cfg.scenarios.size() != 3)
    jsonu::fail(kSchema, "'scenario_files' must list exactly three scenarios", doc);

  cfg.fixtures_root =
      resolve(string_or(doc, "fixtures_root", cfg.fixtures_root, "vehicle case config"), base);
  cfg.seeds = int_or(doc, "seeds", cfg.seeds, "vehicle case config");
  cfg.seed_base = u64_or(doc, "seed_base", cfg.seed_base, "vehicle case config");
  overlay_mpc(doc, cfg.mpc);

  if (doc.contains("conservative")) {
    const json& j = doc["conservative"];
    if (!j.is_object()) jsonu::fail(kSchema, "'conservative' must be an object", doc);
    jsonu::reject_unknown(kSchema, j, {"speed_limit", "min_distance"}, "conservative");
    cfg.conservative_speed_limit =
        number_or(j, "speed_limit", cfg.conservative_speed_limit, "conservative");
    cfg.conservative_min_distance =
        number_or(j, "min_distance", cfg.conservative_min_distance, "conservative");
  }
  return cfg;
}

}  // namespace taskmpc::bench
