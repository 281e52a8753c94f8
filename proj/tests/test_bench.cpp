#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "taskmpc/bench/bench.hpp"
#include "taskmpc/util/format.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace taskmpc;
using namespace taskmpc::bench;
namespace fs = std::filesystem;

namespace {

// Scratch directory, removed when the test ends.
struct TempDir {
  fs::path root;

  TempDir() {
    root = fs::temp_directory_path() /
           ("taskmpc_bench_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(root);
  }
  ~TempDir() { fs::remove_all(root); }

  static int& counter() {
    static int n = 0;
    return n;
  }

  fs::path write(const std::string& name, const std::string& text) const {
    const fs::path path = root / name;
    std::ofstream out(path, std::ios::binary);
    out << text;
    return path;
  }
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(bool(in));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Param bounded(const std::string& name, double value, double lo, double hi) {
  Param p;
  p.name = name;
  p.value = value;
  p.lower = lo;
  p.upper = hi;
  return p;
}

ConstraintSpec speed_limit(const std::string& ref, bool latent, const std::string& provenance) {
  ConstraintSpec c;
  c.kind = ConstraintKind::SpeedLimit;
  c.threshold_ref = ref;
  c.latent = latent;
  c.provenance = provenance;
  return c;
}

ConstraintSpec min_distance(const std::string& object, const std::string& ref,
                            const std::string& provenance) {
  ConstraintSpec c;
  c.kind = ConstraintKind::MinDistance;
  c.object_id = object;
  c.threshold_ref = ref;
  c.latent = true;
  c.provenance = provenance;
  return c;
}

// Two-subtask plan with a mix of apparent and latent constraints, all
// parameter references resolvable so strategy outputs stay validatable.
TaskPlan mixed_plan() {
  TaskPlan plan;

  SubtaskSpec s1;
  s1.index = 1;
  s1.reward.kind = RewardKind::VelocityTracking;
  s1.reward.target_ref = "cruise";
  s1.params.insert(bounded("cruise", 1.8, 1.8, 1.8));
  s1.params.insert(bounded("cap", 5.0, 5.0, 5.0));
  s1.params.insert(bounded("zone_speed", 2.0, 2.0, 2.0));
  s1.params.insert(bounded("gap", 3.0, 3.0, 3.0));
  s1.params.insert(bounded("gap2", 3.0, 3.0, 3.0));
  s1.params.insert(bounded("odd", 2.5, 2.5, 2.5));
  s1.constraints.push_back(speed_limit("cap", false, ""));
  s1.constraints.push_back(speed_limit("zone_speed", true, "hint:children"));
  s1.constraints.push_back(min_distance("children", "gap", "hint:children"));
  s1.constraints.push_back(min_distance("teens", "gap2", "hint:teens"));
  s1.constraints.push_back(speed_limit("odd", true, ""));
  s1.window = 10;
  s1.terminal.kind = TerminalKind::WindowElapsed;

  SubtaskSpec s2;
  s2.index = 2;
  s2.reward.kind = RewardKind::QuadraticTracking;
  s2.reward.target_ref = "goal";
  s2.reward.state_index = 0;
  s2.params.insert(bounded("goal", 50.0, 50.0, 50.0));
  s2.window = 10;
  s2.terminal.kind = TerminalKind::WindowElapsed;

  plan.subtasks = {s1, s2};
  plan.whole_task_done.kind = TerminalKind::WindowElapsed;
  return plan;
}

llm::LatentRiskAssessment assess(
    const std::vector<std::pair<std::string, llm::ProbabilityLabel>>& entries) {
  llm::LatentRiskAssessment a;
  for (const auto& [object, label] : entries) {
    llm::RiskObjectEntry e;
    e.object = object;
    e.label = label;
    a.objects.push_back(e);
  }
  return a;
}

int count_latent(const SubtaskSpec& sub) {
  int n = 0;
  for (const ConstraintSpec& c : sub.constraints)
    if (c.latent) ++n;
  return n;
}

}  // namespace

TEST_CASE("strategy names round-trip") {
  for (Strategy s : {Strategy::Typical, Strategy::Conservative, Strategy::Proposed})
    CHECK(strategy_from_string(to_string(s)) == s);
  CHECK(to_string(Strategy::Typical) == "typical");
  CHECK(to_string(Strategy::Conservative) == "conservative");
  CHECK(to_string(Strategy::Proposed) == "proposed");
  CHECK_THROWS_AS(strategy_from_string("bold"), Error);
}

TEST_CASE("typical strategy strips every latent constraint") {
  const TaskPlan plan = mixed_plan();
  const TaskPlan typical = apply_strategy(Strategy::Typical, plan, assess({}));

  REQUIRE(typical.subtasks.size() == 2);
  REQUIRE(typical.subtasks[0].constraints.size() == 1);
  CHECK(typical.subtasks[0].constraints[0].threshold_ref == "cap");
  CHECK_FALSE(typical.subtasks[0].constraints[0].latent);
  CHECK(typical.subtasks[1].constraints.empty());

  // Parameters are left alone even when their constraint disappears.
  CHECK(typical.subtasks[0].params == plan.subtasks[0].params);

  // Idempotent: a second application changes nothing.
  const TaskPlan again = apply_strategy(Strategy::Typical, typical, assess({}));
  CHECK(again.subtasks[0].constraints.size() == 1);
  CHECK(again.subtasks[1].constraints.empty());

  CHECK_NOTHROW(validate_plan(typical));
}

TEST_CASE("proposed strategy keeps only actionable hinted constraints") {
  const TaskPlan plan = mixed_plan();

  SUBCASE("high keeps the object's hints, low drops them") {
    const auto a = assess({{"children", llm::ProbabilityLabel::High},
                           {"teens", llm::ProbabilityLabel::Low}});
    const TaskPlan out = apply_strategy(Strategy::Proposed, plan, a);
    REQUIRE(out.subtasks[0].constraints.size() == 3);
    CHECK(out.subtasks[0].constraints[0].threshold_ref == "cap");   // apparent, kept
    CHECK(out.subtasks[0].constraints[1].threshold_ref == "zone_speed");
    CHECK(out.subtasks[0].constraints[2].object_id == "children");
    CHECK_NOTHROW(validate_plan(out));
  }

  SUBCASE("medium is actionable too") {
    const auto a = assess({{"teens", llm::ProbabilityLabel::Medium}});
    const TaskPlan out = apply_strategy(Strategy::Proposed, plan, a);
    REQUIRE(out.subtasks[0].constraints.size() == 2);
    CHECK(out.subtasks[0].constraints[1].object_id == "teens");
  }

  SUBCASE("hints about unassessed objects and unattributed latents are dropped") {
    const auto a = assess({{"somebody_else", llm::ProbabilityLabel::High}});
    const TaskPlan out = apply_strategy(Strategy::Proposed, plan, a);
    REQUIRE(out.subtasks[0].constraints.size() == 1);
    CHECK(out.subtasks[0].constraints[0].threshold_ref == "cap");
  }
}

TEST_CASE("conservative strategy imposes blanket caps per subtask and object") {
  const TaskPlan plan = mixed_plan();
  StrategyContext ctx;
  ctx.conservative_speed_limit = 2.5;
  ctx.conservative_min_distance = 3.5;
  ctx.scene_object_ids = {"bus", "children"};

  const TaskPlan out = apply_strategy(Strategy::Conservative, plan, assess({}), ctx);
  REQUIRE(out.subtasks.size() == 2);

  // Original latent constraints are gone; each subtask gains one speed cap
  // plus one standoff per scene object.
  REQUIRE(out.subtasks[0].constraints.size() == 1 + 3);  // "cap" survives
  REQUIRE(out.subtasks[1].constraints.size() == 3);
  for (const SubtaskSpec& sub : out.subtasks) {
    CHECK(count_latent(sub) == 3);
    int speed = 0, dist = 0;
    for (const ConstraintSpec& c : sub.constraints) {
      if (!c.latent) continue;
      CHECK(c.provenance == "strategy:conservative");
      if (c.kind == ConstraintKind::SpeedLimit) {
        ++speed;
        CHECK(c.threshold_ref == "conservative_speed");
      } else {
        REQUIRE(c.kind == ConstraintKind::MinDistance);
        ++dist;
        CHECK(c.threshold_ref == "conservative_distance");
      }
    }
    CHECK(speed == 1);
    CHECK(dist == 2);

    // The thresholds arrive as pinned parameters carrying the context values.
    const Param& ps = sub.params.at("conservative_speed");
    CHECK(ps.value == 2.5);
    CHECK(ps.lower == 2.5);
    CHECK(ps.upper == 2.5);
    const Param& pd = sub.params.at("conservative_distance");
    CHECK(pd.value == 3.5);
    CHECK(pd.lower == pd.upper);
  }
  CHECK_NOTHROW(validate_plan(out));

  // Object order in the standoffs follows the context roster.
  CHECK(out.subtasks[1].constraints[1].object_id == "bus");
  CHECK(out.subtasks[1].constraints[2].object_id == "children");
}

TEST_CASE("conservative strategy refuses to shadow existing parameter names") {
  TaskPlan plan = mixed_plan();
  plan.subtasks[1].params.insert(bounded("conservative_speed", 9.0, 0.0, 10.0));
  CHECK_THROWS_AS(apply_strategy(Strategy::Conservative, plan, assess({})), Error);
}

TEST_CASE("push tracking loss scores the final subtask's window") {
  TaskPlan plan;
  SubtaskSpec s;
  s.index = 1;
  s.window = 3;
  plan.subtasks.push_back(s);

  Trajectory traj;
  traj.step_obs.resize(3);
  const double target = 0.5;

  SUBCASE("covered steps use the box speed entering each step") {
    traj.step_obs[0].box_velocity = 0.3;
    traj.subtask_boundaries.push_back({1, 0, 2, true});
    // t=0 enters at rest (0.25), t=1 enters at 0.3 (0.04), one step missing
    // scores a resting box (0.25).
    CHECK(push_tracking_loss(plan, traj, target) == doctest::Approx(0.54).epsilon(1e-12));
  }

  SUBCASE("full coverage has no top-up") {
    traj.step_obs[0].box_velocity = 0.5;
    traj.step_obs[1].box_velocity = 0.5;
    traj.subtask_boundaries.push_back({1, 0, 3, true});
    CHECK(push_tracking_loss(plan, traj, target) == doctest::Approx(0.25).epsilon(1e-12));
  }

  SUBCASE("a subtask the episode never reached scores a box at rest") {
    CHECK(push_tracking_loss(plan, traj, target) == doctest::Approx(0.75).epsilon(1e-12));
  }

  SUBCASE("missing box observations count as rest") {
    traj.step_obs[1].box_velocity.reset();
    traj.step_obs[2].box_velocity = 0.5;
    traj.subtask_boundaries.push_back({1, 2, 4, true});
    // t=2 reads obs[1] (absent -> 0), t=3 reads obs[2] (0.5), one missing step.
    CHECK(push_tracking_loss(plan, traj, target) == doctest::Approx(0.5).epsilon(1e-12));
  }

  SUBCASE("empty plan is rejected") {
    CHECK_THROWS_AS(push_tracking_loss(TaskPlan{}, traj, target), Error);
  }
}

TEST_CASE("robot case config loads with overlays and resolved paths") {
  const RobotCaseConfig cfg = load_robot_case_config("configs/robot_case.json");
  CHECK(cfg.scenario.name == "robot_push");
  CHECK(cfg.scenario.box_position == 0.5);
  CHECK(cfg.scenario.target_speed == 0.5);
  // "../fixtures" relative to configs/ normalizes to the repository root.
  CHECK(cfg.fixtures_root == "fixtures");
  CHECK(cfg.force_param == "s2.force_limit");
  CHECK(cfg.schedule.eta0 == 2.5);
  CHECK(cfg.schedule.max_outer == 10);
  CHECK(cfg.schedule.rollouts_per_eval == 1);
  CHECK(cfg.mpc.horizon == 5);
  CHECK(cfg.mpc.penalty_stages == 4);
  CHECK(cfg.oracle_lo == 0.5);
  CHECK(cfg.oracle_hi == 8.0);
  CHECK(cfg.band_factor == 1.1);
}

TEST_CASE("vehicle case config loads exactly three scenarios") {
  const VehicleCaseConfig cfg = load_vehicle_case_config("configs/vehicle_case.json");
  REQUIRE(cfg.scenarios.size() == 3);
  CHECK(cfg.scenarios[0].name == "school_bus");
  CHECK(cfg.scenarios[1].name == "roadside_teens");
  CHECK(cfg.scenarios[2].name == "adult_walkers");
  CHECK(cfg.fixtures_root == "fixtures/vehicle");
  CHECK(cfg.seeds == 20);
  CHECK(cfg.seed_base == 1);
  CHECK(cfg.conservative_speed_limit == 2.0);
  CHECK(cfg.conservative_min_distance == 4.0);
  CHECK(cfg.scenarios[0].risk_object == "children");
  CHECK(cfg.scenarios[0].entry_window_lo == 95);
  CHECK(cfg.scenarios[0].entry_window_hi == 125);
}

TEST_CASE("case config loader rejects unknown keys and bad shapes") {
  TempDir dir;
  const std::string bus = fs::absolute("configs/vehicle_bus.json").string();

  SUBCASE("unknown top-level key") {
    const auto p = dir.write("r.json", R"({"bogus": 1})");
    CHECK_THROWS_AS(load_robot_case_config(p.string()), ParseError);
  }
  SUBCASE("unknown mpc key") {
    const auto p = dir.write("r.json", R"({"mpc": {"bogus": 1}})");
    CHECK_THROWS_AS(load_robot_case_config(p.string()), ParseError);
  }
  SUBCASE("unknown oracle key") {
    const auto p = dir.write("r.json", R"({"oracle": {"low": 1}})");
    CHECK_THROWS_AS(load_robot_case_config(p.string()), ParseError);
  }
  SUBCASE("missing scenario battery") {
    const auto p = dir.write("v.json", R"({"seeds": 4})");
    CHECK_THROWS_AS(load_vehicle_case_config(p.string()), ParseError);
  }
  SUBCASE("wrong battery size") {
    nlohmann::json doc;
    doc["scenario_files"] = {bus, bus};
    const auto p = dir.write("v.json", doc.dump());
    CHECK_THROWS_AS(load_vehicle_case_config(p.string()), ParseError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_robot_case_config((dir.root / "nope.json").string()), Error);
  }
  SUBCASE("relative scenario paths resolve against the config file") {
    // The config lives in a temp dir; a repo-relative path would only work if
    // resolution used the process working directory, so this must fail.
    const auto p = dir.write("v.json",
                             R"({"scenario_files": ["configs/vehicle_bus.json",)"
                             R"( "configs/vehicle_teenager.json", "configs/vehicle_adult.json"]})");
    CHECK_THROWS_AS(load_vehicle_case_config(p.string()), Error);
  }
}

TEST_CASE("robot result files are deterministic delimited text") {
  TempDir dir;

  RobotCaseResult r;
  r.variant = adapt::Variant::Full;
  adapt::AdaptationRecord rec;
  rec.outer_step = 0;
  rec.inner_step = -1;
  rec.global_n = 0;
  rec.theta = Eigen::VectorXd::Zero(2);
  rec.theta << 1.0, 2.0;
  rec.loss = 0.5;
  rec.grad_norm = 0.1;
  rec.eta = 2.5;
  rec.evals_so_far = 3;
  r.records.push_back(rec);
  r.theta_names = {"a", "b"};
  r.oracle = {{0.5, 5.0}, {0.75, 4.0}};
  r.oracle_best_theta = 0.75;
  r.oracle_best_loss = 4.0;
  r.band_threshold = 4.4;
  r.evals_to_band = 3;
  r.final_loss = 0.5;
  r.non_convergence = false;
  r.total_evals = 3;
  r.worst_successful_margin = 0.25;
  r.window_identity = true;

  write_robot_results((dir.root / "out").string(), {r});

  CHECK(slurp(dir.root / "out" / "oracle_sweep.csv") ==
        "theta,loss\n0.5,5\n0.75,4\n");
  CHECK(slurp(dir.root / "out" / "robot_summary.csv") ==
        "variant,evals_to_band,final_loss,band_threshold,oracle_best_theta,"
        "oracle_best_loss,non_convergence,total_evals,worst_successful_margin,"
        "window_identity\n"
        "full,3,0.5,4.4,0.75,4,false,3,0.25,true\n");
  CHECK(fs::exists(dir.root / "out" / "learning_curve_full.csv"));

  // Byte-identical on a second write.
  const std::string first = slurp(dir.root / "out" / "robot_summary.csv");
  write_robot_results((dir.root / "out").string(), {r});
  CHECK(slurp(dir.root / "out" / "robot_summary.csv") == first);
}

TEST_CASE("vehicle result files spell out per-seed rows and averages") {
  TempDir dir;
  const double inf = std::numeric_limits<double>::infinity();

  VehicleCaseResult r;
  r.strategy = Strategy::Proposed;
  ScenarioMetrics m1;
  m1.scenario = "alpha";
  m1.seeds = {1, 2};
  m1.min_distances = {inf, 2.5};
  m1.times = {600, 100};
  m1.mean_min_distance = 2.5;  // finite entries only
  m1.mean_time = 350.0;
  ScenarioMetrics m2;
  m2.scenario = "beta";
  m2.seeds = {1, 2};
  m2.min_distances = {inf, inf};
  m2.times = {50, 60};
  m2.mean_min_distance = inf;
  m2.mean_time = 55.0;
  r.scenarios = {m1, m2};
  r.avg_min_distance = 2.5;  // scenarios with a finite mean only
  r.avg_time = 202.5;

  write_vehicle_results((dir.root / "out").string(), {r});

  CHECK(slurp(dir.root / "out" / "vehicle_proposed.csv") ==
        "scenario,seed,min_distance,time_to_travel\n"
        "alpha,1,inf,600\n"
        "alpha,2,2.5,100\n"
        "beta,1,inf,50\n"
        "beta,2,inf,60\n");
  CHECK(slurp(dir.root / "out" / "vehicle_summary.csv") ==
        "strategy,scenario,mean_min_distance,mean_time_to_travel\n"
        "proposed,alpha,2.5,350\n"
        "proposed,beta,inf,55\n"
        "proposed,average,2.5,202.5\n");
}

TEST_CASE("robot case runs end to end against its sweep oracle") {
  const RobotCaseConfig cfg = load_robot_case_config("configs/robot_case.json");
  const RobotCaseResult res = run_robot_case(cfg, adapt::Variant::Full);

  REQUIRE_FALSE(res.records.empty());
  REQUIRE_FALSE(res.oracle.empty());
  CHECK(res.oracle.size() == 31);  // 0.5 .. 8.0 by 0.25
  CHECK(res.oracle_best_loss > 0.0);
  CHECK(res.band_threshold >= res.oracle_best_loss);

  // The full variant reaches the near-optimal band and stays feasible.
  CHECK(res.evals_to_band > 0);
  CHECK(res.final_loss <= res.band_threshold);
  CHECK(res.worst_successful_margin >= -cfg.mpc.constraint_tolerance);
  CHECK(res.window_identity);
  CHECK(res.total_evals >= res.evals_to_band);

  bool has_force = false;
  for (const std::string& name : res.theta_names) has_force |= (name == cfg.force_param);
  CHECK(has_force);
}

TEST_CASE("vehicle case runs end to end and orders strategies") {
  VehicleCaseConfig cfg = load_vehicle_case_config("configs/vehicle_case.json");
  cfg.seeds = 2;  // desk-scale smoke; the full battery runs in the benchmarks

  const VehicleCaseResult typical = run_vehicle_case(cfg, Strategy::Typical);
  const VehicleCaseResult proposed = run_vehicle_case(cfg, Strategy::Proposed);

  for (const VehicleCaseResult* r : {&typical, &proposed}) {
    REQUIRE(r->scenarios.size() == 3);
    CHECK(r->window_identity);
    for (const ScenarioMetrics& m : r->scenarios) {
      REQUIRE(m.seeds.size() == 2);
      REQUIRE(m.min_distances.size() == 2);
      REQUIRE(m.times.size() == 2);
      for (int t : m.times) {
        CHECK(t > 0);
        CHECK(t < cfg.scenarios[0].episode_steps);  // the stop is reached
      }
    }
  }

  // Latent-aware planning trades travel time for clearance on the risky
  // scenarios and leaves the benign one untouched.
  CHECK(proposed.avg_time > typical.avg_time);
  CHECK(proposed.scenarios[2].mean_time == typical.scenarios[2].mean_time);
  CHECK(proposed.worst_successful_margin >= -cfg.mpc.constraint_tolerance);
}
