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

VehicleCaseResult run_vehicle_case(const VehicleCaseConfig& cfg, Strategy strategy) {
  if (cfg.scenarios.size() != 3)
    throw Error("vehicle case: expected exactly three scenarios, got " +
                std::to_string(cfg.scenarios.size()));
  if (cfg.seeds < 1) throw Error("vehicle case: seed battery must not be empty");

  VehicleCaseResult res;
  res.strategy = strategy;
  std::optional<llm::ScriptedBackend> scripted;
  llm::Backend* backend = cfg.backend;
  if (backend == nullptr) backend = &scripted.emplace(cfg.fixtures_root);

  double distance_sum = 0.0;
  int distance_scenarios = 0;
  double time_sum = 0.0;

  for (const envs::VehicleScenario& sc : cfg.scenarios) {
    const envs::SceneDescription scene = envs::observe_scene(sc);
    const llm::LatentRiskAssessment assessment =
        llm::query_latent_objects(*backend, sc.name, sc.instruction, scene.text);
    const llm::RiskHandlingSolution solution =
        llm::propose_risk_handling(*backend, sc.name, sc.instruction, scene.text, assessment);
    const TaskPlan base =
        llm::generate_plan(*backend, sc.name, sc.instruction, scene.text, solution).plan();

    StrategyContext ctx;
    ctx.conservative_speed_limit = cfg.conservative_speed_limit;
    ctx.conservative_min_distance = cfg.conservative_min_distance;
    for (const envs::SceneObject& o : sc.objects) ctx.scene_object_ids.push_back(o.id);
    const ValidatedPlan plan = validate_plan(apply_strategy(strategy, base, assessment, ctx));
    ctx.scene_object_ids.clear();

    MpcConfig mpc = cfg.mpc;
    mpc.control_lo = Eigen::VectorXd::Constant(1, -sc.force_bound);
    mpc.control_hi = Eigen::VectorXd::Constant(1, sc.force_bound);
    validate_config(mpc);

    ScenarioMetrics metrics;
    metrics.scenario = sc.name;
    double finite_sum = 0.0;
    int finite_count = 0;
    double scenario_time = 0.0;

    for (int k = 0; k < cfg.seeds; ++k) {
      const uint64_t seed = cfg.seed_base + static_cast<uint64_t>(k);
      envs::VehicleWorld world = envs::VehicleWorld::make(sc, seed);
      const std::vector<envs::SceneObject> realized = world.objects;

      const PlanRunResult run = run_plan(world, plan, mpc);
      int realized_steps = 0;
      for (const SubtaskOutcome& o : run.outcomes) {
        realized_steps += o.realized_window;
        if (o.success)
          res.worst_successful_margin = std::min(res.worst_successful_margin, o.worst_margin);
      }
      if (static_cast<int>(run.trajectory.controls.size()) != realized_steps)
        res.window_identity = false;

      const double dist = envs::min_distance(run.trajectory, sc.risk_object, realized);
      const int steps = envs::time_to_travel(run.trajectory, sc.target_position,
                                             sc.target_tolerance, sc.episode_steps);
      metrics.seeds.push_back(seed);
      metrics.min_distances.push_back(dist);
      metrics.times.push_back(steps);
      if (std::isfinite(dist)) {
        finite_sum += dist;
        ++finite_count;
      }
      scenario_time += steps;
    }

    metrics.mean_min_distance = finite_count > 0
                                    ? finite_sum / finite_count
                                    : std::numeric_limits<double>::infinity();
    metrics.mean_time = scenario_time / cfg.seeds;
    if (finite_count > 0) {
      distance_sum += metrics.mean_min_distance;
      ++distance_scenarios;
    }
    time_sum += metrics.mean_time;
    res.scenarios.push_back(std::move(metrics));
  }

  res.avg_min_distance = distance_scenarios > 0
                             ? distance_sum / distance_scenarios
                             : std::numeric_limits<double>::infinity();
  res.avg_time = time_sum / static_cast<double>(cfg.scenarios.size());
  return res;
}

}  // namespace taskmpc::bench
