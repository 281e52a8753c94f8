#include "taskmpc/bench/bench.hpp"
#include "taskmpc/llm/backend.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace taskmpc::bench {

using mpc::PlanRunResult;
using mpc::SubtaskOutcome;
using mpc::run_plan;
using mpc::validate_config;

namespace {

void validate_robot_config(const RobotCaseConfig& cfg) {
  adapt::validate_schedule(cfg.schedule);
  if (!(cfg.oracle_step > 0.0)) throw Error("robot case: oracle_step must be positive");
  if (!(cfg.oracle_lo <= cfg.oracle_hi)) throw Error("robot case: oracle range is empty");
  if (!(cfg.band_factor >= 1.0)) throw Error("robot case: band_factor must be at least 1");
  if (cfg.force_param.empty()) throw Error("robot case: force_param must be named");
}

MpcConfig scenario_mpc(const RobotCaseConfig& cfg) {
  MpcConfig mpc = cfg.mpc;
  mpc.control_lo = Eigen::VectorXd::Constant(1, -cfg.scenario.control_bound);
  mpc.control_hi = Eigen::VectorXd::Constant(1, cfg.scenario.control_bound);
  validate_config(mpc);
  return mpc;
}

}  // namespace

RobotCaseConfig default_robot_config() {
  RobotCaseConfig cfg;
  cfg.scenario.name = "robot_push";
  cfg.scenario.instruction = "push the box while maintaining a stable speed of 0.5 m/s";
  cfg.scenario.arm_start = 0.0;
  cfg.scenario.box_position = 0.5;
  cfg.scenario.target_speed = 0.5;
  cfg.scenario.box_mass = 1.0;
  cfg.scenario.friction_coeff = 0.2;
  cfg.scenario.gravity = 9.81;
  cfg.scenario.dt = 0.1;
  cfg.scenario.control_bound = 1.0;

  cfg.schedule.eta0 = 2.5;
  cfg.schedule.gamma = 0.03;
  cfg.schedule.inner_epochs = 6;
  cfg.schedule.fd_epsilon = 1e-3;
  cfg.schedule.stop_epsilon = 1e-2;
  cfg.schedule.max_outer = 10;
  cfg.schedule.rollouts_per_eval = 1;  // the arm world is deterministic
  cfg.schedule.base_seed = 0;
  return cfg;
}

double push_tracking_loss(const TaskPlan& plan, const Trajectory& traj, double target_speed) {
  if (plan.subtasks.empty()) throw Error("push_tracking_loss: plan has no subtasks");
  const SubtaskSpec& last = plan.subtasks.back();

  const SubtaskBoundary* bound = nullptr;
  for (const SubtaskBoundary& b : traj.subtask_boundaries)
    if (b.index == last.index) bound = &b;

  double loss = 0.0;
  int covered = 0;
  if (bound != nullptr) {
    for (int t = bound->start; t < bound->end; ++t) {
      // Speed the box carried into step t: the previous step's observation,
      // or rest at the start of the episode.
      const double v =
          t == 0 ? 0.0 : traj.step_obs.at(static_cast<size_t>(t - 1)).box_velocity.value_or(0.0);
      loss += (target_speed - v) * (target_speed - v);
      ++covered;
    }
  }
  // Steps the episode never reached score as a box at rest.
  loss += std::max(0, last.window - covered) * target_speed * target_speed;
  return loss;
}

RobotCaseResult run_robot_case(const RobotCaseConfig& cfg, adapt::Variant variant) {
  validate_robot_config(cfg);
  const MpcConfig mpc = scenario_mpc(cfg);

  RobotCaseResult res;
  res.variant = variant;

  const adapt::RolloutFn rollout = [&cfg, &mpc, &res](const TaskPlan& plan,
                                                      uint64_t) -> adapt::EvalOutcome {
    envs::RobotArmWorld world = envs::make_world(cfg.scenario);
    const ValidatedPlan vp = validate_plan(plan);
    PlanRunResult run = run_plan(world, vp, mpc);

    adapt::EvalOutcome out;
    out.plan_completed = run.whole_task_done;
    int realized = 0;
    for (const SubtaskOutcome& o : run.outcomes) {
      realized += o.realized_window;
      out.worst_margin = std::min(out.worst_margin, o.worst_margin);
      if (o.success)
        res.worst_successful_margin = std::min(res.worst_successful_margin, o.worst_margin);
    }
    if (static_cast<int>(run.trajectory.controls.size()) != realized) res.window_identity = false;
    out.loss = push_tracking_loss(plan, run.trajectory, cfg.scenario.target_speed);
    out.trajectory = std::move(run.trajectory);
    return out;
  };

  std::optional<llm::ScriptedBackend> scripted;
  llm::Backend* backend = cfg.backend;
  if (backend == nullptr)
    backend = &scripted.emplace(cfg.fixtures_root + "/robot_" + adapt::to_string(variant));
  adapt::FrameworkSetup setup;
  setup.backend = backend;
  setup.scenario = cfg.scenario.name;
  setup.instruction = cfg.scenario.instruction;
  setup.rollout = rollout;

  adapt::FrameworkResult fw = adapt::run_framework(setup, cfg.schedule, variant);
  res.records = std::move(fw.records);
  res.final_loss = fw.loss;
  res.non_convergence = fw.non_convergence;
  res.total_evals = fw.total_evals;
  for (const Param& p : fw.theta.entries()) res.theta_names.push_back(p.name);

  // Reference sweep: the same loss estimate over a 1-D grid of the adapted
  // parameter, holding everything else at its seeded value.
  const TaskPlan plan0 =
      llm::generate_plan(*backend, setup.scenario, setup.instruction, setup.scene, setup.solution)
          .plan();
  const ParamVector theta0 = pool_params(plan0);
  if (!theta0.contains(cfg.force_param))
    throw Error("robot case: plan does not expose parameter '" + cfg.force_param + "'");

  for (int k = 0;; ++k) {
    const double g = cfg.oracle_lo + cfg.oracle_step * k;
    if (g > cfg.oracle_hi + cfg.oracle_step * 0.5) break;
    ParamVector theta = theta0;
    theta.set_value(cfg.force_param, g);
    theta.clip();
    const double value =
        adapt::expected_loss(rollout, scatter_params(plan0, theta), cfg.schedule).value;
    res.oracle.push_back({theta.at(cfg.force_param).value, value});
  }
  if (res.oracle.empty()) throw Error("robot case: empty oracle sweep");

  const auto best = std::min_element(
      res.oracle.begin(), res.oracle.end(),
      [](const OracleSweepPoint& a, const OracleSweepPoint& b) { return a.loss < b.loss; });
  res.oracle_best_theta = best->theta;
  res.oracle_best_loss = best->loss;
  res.band_threshold = cfg.band_factor * best->loss;

  for (const adapt::AdaptationRecord& r : res.records) {
    if (r.loss <= res.band_threshold) {
      res.evals_to_band = r.evals_so_far;
      break;
    }
  }
  return res;
}

}  // namespace taskmpc::bench
