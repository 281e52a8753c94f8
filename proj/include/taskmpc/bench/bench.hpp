#pragma once

#include "taskmpc/adapt/adapt.hpp"
#include "taskmpc/envs/scenario_io.hpp"
#include "taskmpc/mpc/mpc.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace taskmpc::bench {

using mpc::MpcConfig;

// ---------------------------------------------------------------------------
// Executable case studies: the robot-arm push (method variants against a
// parameter-sweep oracle) and the latent-risk driving battery (constraint
// strategies over seeded scenario batteries), plus the delimited-text result
// writers for both.
// ---------------------------------------------------------------------------

// --- Strategies (driving case) ---------------------------------------------

enum class Strategy { Typical, Conservative, Proposed };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

// Inputs the Conservative transform needs beyond the plan itself: the
// worst-case thresholds and the scene's object roster.
struct StrategyContext {
  double conservative_speed_limit = 2.0;   // m/s, applied to every subtask
  double conservative_min_distance = 4.0;  // m, applied per scene object
  std::vector<std::string> scene_object_ids;
};

// Rewrites the latent-flagged constraints of a plan:
//   Typical      — drops every latent constraint (only apparent risks remain);
//   Proposed     — keeps latent constraints whose provenance object was
//                  assessed High or Medium, drops the rest;
//   Conservative — drops them all, then imposes the worst case: one speed cap
//                  per subtask plus one standoff distance per scene object,
//                  tagged provenance "strategy:conservative".
// Non-latent constraints are never touched.
TaskPlan apply_strategy(Strategy s, const TaskPlan& plan,
                        const llm::LatentRiskAssessment& assessment,
                        const StrategyContext& ctx = {});

// --- Robot-arm case ----------------------------------------------------------

struct RobotCaseConfig {
  envs::RobotScenario scenario;
  // Reasoning backend override. When null, each variant gets its own scripted
  // backend rooted at <fixtures_root>/robot_<variant>.
  llm::Backend* backend = nullptr;
  std::string fixtures_root = "fixtures";  // per-variant subdir robot_<variant>
  adapt::LearningSchedule schedule;
  MpcConfig mpc;
  // Pooled name of the contact-force ceiling being adapted.
  std::string force_param = "s2.force_limit";
  // 1-D sweep defining the reference optimum of the loss over that parameter.
  double oracle_lo = 0.5;
  double oracle_hi = 8.0;
  double oracle_step = 0.25;
  double band_factor = 1.1;  // "near-optimal" = loss <= band_factor * best
};

// Built-in desk-scale configuration (also the defaults for the JSON loader).
RobotCaseConfig default_robot_config();
RobotCaseConfig load_robot_case_config(const std::string& path);

struct OracleSweepPoint {
  double theta = 0.0;
  double loss = 0.0;
};

struct RobotCaseResult {
  adapt::Variant variant = adapt::Variant::Full;
  std::vector<adapt::AdaptationRecord> records;  // learning curve
  std::vector<std::string> theta_names;
  std::vector<OracleSweepPoint> oracle;
  double oracle_best_theta = 0.0;
  double oracle_best_loss = 0.0;
  double band_threshold = 0.0;
  int evals_to_band = -1;  // loss evaluations spent when the band was entered;
                           // -1 when the run never entered it
  double final_loss = 0.0;
  bool non_convergence = false;
  int total_evals = 0;
  // Aggregates for the safety assertions: minimum realized margin over all
  // successful subtasks of every rollout, and whether every trajectory
  // satisfied len(controls) == sum of realized windows.
  double worst_successful_margin = std::numeric_limits<double>::infinity();
  bool window_identity = true;
};

// Velocity-tracking error of the final (push) subtask: the sum over its
// declared window of (target - box speed entering the step)^2, with missing
// steps scored as if the box never moved.
double push_tracking_loss(const TaskPlan& plan, const Trajectory& traj, double target_speed);

RobotCaseResult run_robot_case(const RobotCaseConfig& cfg, adapt::Variant variant);

// --- Driving case ------------------------------------------------------------

struct VehicleCaseConfig {
  std::vector<envs::VehicleScenario> scenarios;  // exactly three
  // Reasoning backend override; null means a scripted backend at fixtures_root.
  llm::Backend* backend = nullptr;
  std::string fixtures_root = "fixtures/vehicle";
  int seeds = 20;
  uint64_t seed_base = 1;
  MpcConfig mpc;  // control bounds are taken from each scenario's force bound
  double conservative_speed_limit = 2.0;
  double conservative_min_distance = 4.0;
};

VehicleCaseConfig load_vehicle_case_config(const std::string& path);

struct ScenarioMetrics {
  std::string scenario;
  std::vector<uint64_t> seeds;
  std::vector<double> min_distances;  // +inf when the risk object never entered
  std::vector<int> times;             // steps to reach the target position
  double mean_min_distance = std::numeric_limits<double>::infinity();  // over finite entries
  double mean_time = 0.0;
};

struct VehicleCaseResult {
  Strategy strategy = Strategy::Typical;
  std::vector<ScenarioMetrics> scenarios;  // config order
  // Scenario means averaged across scenarios: distances over scenarios with a
  // finite mean, times over all of them.
  double avg_min_distance = std::numeric_limits<double>::infinity();
  double avg_time = 0.0;
  double worst_successful_margin = std::numeric_limits<double>::infinity();
  bool window_identity = true;
};

VehicleCaseResult run_vehicle_case(const VehicleCaseConfig& cfg, Strategy strategy);

// --- Result files ------------------------------------------------------------
// Delimited text only, deterministic content, no timestamps:
//   robot:   learning_curve_<variant>.csv, oracle_sweep.csv, robot_summary.csv
//   vehicle: vehicle_<strategy>.csv (per-seed rows), vehicle_summary.csv

void write_robot_results(const std::string& out_dir,
                         const std::vector<RobotCaseResult>& results);
void write_vehicle_results(const std::string& out_dir,
                           const std::vector<VehicleCaseResult>& results);

}  // namespace taskmpc::bench
