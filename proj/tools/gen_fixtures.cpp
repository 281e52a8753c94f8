// Mints the scripted-backend response fixtures for both case studies, then
// verifies them by replaying the full reasoning pipeline against the freshly
// written tree. Any drift between how prompts are built here and how the
// pipeline builds them shows up as a FixtureMiss at mint time, not later.
//
// Usage: gen_fixtures [configs_dir] [fixtures_dir]   (defaults: configs fixtures)

#include "taskmpc/adapt/adapt.hpp"
#include "taskmpc/bench/bench.hpp"
#include "taskmpc/envs/scenario_io.hpp"
#include "taskmpc/envs/vehicle.hpp"
#include "taskmpc/llm/backend.hpp"
#include "taskmpc/llm/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

using nlohmann::json;
using namespace taskmpc;

namespace {

namespace fs = std::filesystem;

int g_written = 0;

void write_fixture(const std::string& root, llm::Role role,
                   const std::map<std::string, std::string>& slots,
                   const std::string& response) {
  const llm::RenderedPrompt prompt = llm::render_prompt(role, slots);
  fs::create_directories(fs::path(root) / llm::to_string(role));
  llm::ScriptedBackend probe(root);
  const std::string path = probe.fixture_path(prompt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write fixture " + path);
  out << response;
  std::cout << "wrote " << path << "\n";
  ++g_written;
}

// --- response builders -------------------------------------------------------

json subtask_shell(int index, int window) {
  json s;
  s["index"] = index;
  s["constraints"] = json::array();
  s["params"] = json::object();
  s["window"] = window;
  return s;
}

json velocity_reward(const std::string& target_ref) {
  json r;
  r["template"] = "VelocityTracking";
  r["args"] = json{{"target_ref", target_ref}};
  return r;
}

json position_reward(const std::string& target_ref) {
  json r;
  r["template"] = "QuadraticTracking";
  r["args"] = json{{"target_ref", target_ref}, {"state_index", 0}};
  return r;
}

json pinned_param(double value) {
  return json{{"value", value}, {"lower", value}, {"upper", value}};
}

json position_terminal(const std::string& target_ref, double tol) {
  json t;
  t["kind"] = "StateWithinTolerance";
  t["args"] = json{{"state_index", 0}, {"target_ref", target_ref}, {"tol", tol}};
  return t;
}

std::string robot_plan_text() {
  json s1 = subtask_shell(1, 30);
  s1["reward"] = position_reward("approach");
  s1["params"]["approach"] = pinned_param(0.48);
  s1["terminal"] = position_terminal("approach", 0.02);

  json s2 = subtask_shell(2, 20);
  s2["reward"] = velocity_reward("target_speed");
  s2["params"]["target_speed"] = pinned_param(0.5);
  s2["params"]["force_limit"] = json{{"value", 3.0}, {"lower", 0.5}, {"upper", 8.0}};
  s2["constraints"].push_back(json{
      {"template", "ForceLimit"}, {"args", json{{"threshold_ref", "force_limit"}}},
      {"latent", false}});
  s2["terminal"] = json{{"kind", "WindowElapsed"}, {"args", json::object()}};

  json doc;
  doc["subtasks"] = json::array({s1, s2});
  doc["whole_task_done"] = json{{"kind", "WindowElapsed"}, {"args", json::object()}};
  return doc.dump(2) + "\n";
}

// Three-leg driving plan: cruise to the zone entrance, traverse the zone,
// roll into the stop. The latent zone constraints are present only when the
// scenario's risk handling produced hints for them.
std::string vehicle_plan_text(double cruise_end, double zone_end, bool latent,
                              const std::string& object_id, const std::string& gap_param) {
  json s1 = subtask_shell(1, 150);
  s1["reward"] = velocity_reward("cruise_speed");
  s1["params"]["cruise_speed"] = pinned_param(1.8);
  s1["params"]["leg1_end"] = pinned_param(cruise_end);
  s1["terminal"] = position_terminal("leg1_end", 1.0);

  json s2 = subtask_shell(2, 250);
  s2["reward"] = velocity_reward("zone_target");
  s2["params"]["zone_target"] = pinned_param(7.0);
  s2["params"]["leg2_end"] = pinned_param(zone_end);
  s2["terminal"] = position_terminal("leg2_end", 1.0);
  if (latent) {
    s2["params"]["zone_speed"] = pinned_param(2.0);
    s2["params"][gap_param] = pinned_param(3.0);
    s2["constraints"].push_back(json{{"template", "SpeedLimit"},
                                     {"args", json{{"threshold_ref", "zone_speed"}}},
                                     {"latent", true}});
    s2["constraints"].push_back(
        json{{"template", "MinDistance"},
             {"args", json{{"object_id", object_id}, {"threshold_ref", gap_param}}},
             {"latent", true}});
  }

  json s3 = subtask_shell(3, 120);
  s3["reward"] = velocity_reward("approach_speed");
  s3["params"]["approach_speed"] = pinned_param(3.0);
  s3["params"]["goal"] = pinned_param(50.0);
  s3["terminal"] = position_terminal("goal", 0.5);

  json doc;
  doc["subtasks"] = json::array({s1, s2, s3});
  doc["whole_task_done"] =
      json{{"kind", "StateWithinTolerance"},
           {"args", json{{"state_index", 0}, {"target", 50.0}, {"tol", 0.5}}}};
  return doc.dump(2) + "\n";
}

std::string correction_text_json(const std::string& text, bool no_change,
                                 const std::map<std::string, double>& seeds) {
  json doc;
  doc["text"] = text;
  doc["no_change"] = no_change;
  doc["target_subtasks"] = json::array();
  doc["theta_seeds"] = json::object();
  for (const auto& [name, value] : seeds) doc["theta_seeds"][name] = value;
  return doc.dump(2) + "\n";
}

std::string assessment_text(const std::vector<llm::RiskObjectEntry>& entries) {
  llm::LatentRiskAssessment a;
  a.objects = entries;
  return llm::assessment_to_text(a);
}

// --- robot case --------------------------------------------------------------

std::map<std::string, std::string> robot_coder_slots(const envs::RobotScenario& sc) {
  return {{"correction", ""},
          {"instruction", sc.instruction},
          {"scenario", sc.name},
          {"scene", ""},
          {"solution", ""}};
}

void mint_robot(const std::string& out_dir, const envs::RobotScenario& sc) {
  const std::string plan = robot_plan_text();
  const std::vector<std::string> roots = {out_dir + "/robot_full", out_dir + "/robot_sgd_only",
                                          out_dir + "/robot_llm_only"};
  for (const std::string& root : roots) {
    fs::create_directories(root);
    write_fixture(root, llm::Role::Coder, robot_coder_slots(sc), plan);
  }

  auto correction_slots = [&sc](int outer) -> std::map<std::string, std::string> {
    return {{"context", "outer_step=" + std::to_string(outer)},
            {"feedback", ""},
            {"scenario", sc.name}};
  };

  // Full: one decisive reseed of the contact-force ceiling, then no further
  // change. The plateau past the reseed makes the inner loop converge.
  write_fixture(roots[0], llm::Role::Correction, correction_slots(0),
                correction_text_json(
                    "raise the contact-force ceiling so the push reaches the "
                    "commanded speed in a single step",
                    false, {{"s2.force_limit", 7.5}}));
  for (int outer = 1; outer < 10; ++outer)
    write_fixture(roots[0], llm::Role::Correction, correction_slots(outer),
                  correction_text_json("the push already tracks the commanded speed", true, {}));

  // Reasoning-only: plausible-looking ceilings that hop around the seed
  // without ever committing to a decisively higher one.
  const double hops[10] = {3.5, 4.0, 4.5, 3.8, 4.2, 3.6, 4.4, 3.9, 4.1, 4.3};
  for (int outer = 0; outer < 10; ++outer)
    write_fixture(roots[2], llm::Role::Correction, correction_slots(outer),
                  correction_text_json("nudge the contact-force ceiling", false,
                                       {{"s2.force_limit", hops[outer]}}));
}

void verify_robot(const std::string& out_dir, const envs::RobotScenario& sc) {
  for (const std::string variant : {"full", "sgd_only", "llm_only"}) {
    llm::ScriptedBackend backend(out_dir + "/robot_" + variant);
    const ValidatedPlan plan =
        llm::generate_plan(backend, sc.name, sc.instruction, "", llm::RiskHandlingSolution{});
    const ParamVector theta = pool_params(plan.plan());
    if (!theta.contains("s2.force_limit"))
      throw Error("verify: robot plan does not pool s2.force_limit");
    if (variant == std::string("sgd_only")) continue;
    for (int outer = 0; outer < 10; ++outer) {
      const llm::CorrectionCommand cmd = llm::request_correction(
          backend, sc.name, "outer_step=" + std::to_string(outer),
          llm::FeedbackText{"replayed for verification"});
      if (variant == std::string("llm_only") && cmd.theta_seeds.count("s2.force_limit") == 0)
        throw Error("verify: reasoning-only correction lacks a theta seed");
    }
  }
  std::cout << "verified robot fixtures\n";
}

// --- driving case ------------------------------------------------------------

struct VehicleSpec {
  envs::VehicleScenario scenario;
  std::vector<llm::RiskObjectEntry> assessment;
  bool actionable = false;     // High/Medium entry present
  std::string gap_param;       // MinDistance parameter name
  std::string handling_text;
  double cruise_end = 0.0;
  double zone_end = 0.0;
};

llm::RiskObjectEntry entry(const std::string& object, llm::ProbabilityLabel label,
                           const std::string& rationale) {
  llm::RiskObjectEntry e;
  e.object = object;
  e.label = label;
  e.rationale = rationale;
  return e;
}

llm::RiskHandlingSolution handling_solution(const VehicleSpec& spec) {
  llm::RiskHandlingSolution sol;
  if (!spec.actionable) return sol;
  sol.text = spec.handling_text;
  llm::ConstraintHint speed;
  speed.kind = ConstraintKind::SpeedLimit;
  speed.object_id = spec.scenario.risk_object;
  speed.param_name = "zone_speed";
  speed.value = speed.lower = speed.upper = 2.0;
  speed.provenance = "hint:" + spec.scenario.risk_object;
  llm::ConstraintHint gap;
  gap.kind = ConstraintKind::MinDistance;
  gap.object_id = spec.scenario.risk_object;
  gap.param_name = spec.gap_param;
  gap.value = gap.lower = gap.upper = 3.0;
  gap.provenance = speed.provenance;
  sol.hints = {speed, gap};
  return sol;
}

void mint_vehicle_scenario(const std::string& root, const VehicleSpec& spec) {
  const envs::VehicleScenario& sc = spec.scenario;
  const std::string scene = envs::observe_scene(sc).text;

  write_fixture(root, llm::Role::LatentObject,
                {{"instruction", sc.instruction}, {"scenario", sc.name}, {"scene", scene}},
                assessment_text(spec.assessment));

  const llm::RiskHandlingSolution sol = handling_solution(spec);
  if (spec.actionable) {
    llm::LatentRiskAssessment a;
    a.objects = spec.assessment;
    write_fixture(root, llm::Role::RiskHandling,
                  {{"assessment", llm::assessment_to_text(a)},
                   {"instruction", sc.instruction},
                   {"scenario", sc.name},
                   {"scene", scene}},
                  llm::solution_to_text(sol));
  }

  write_fixture(root, llm::Role::Coder,
                {{"correction", ""},
                 {"instruction", sc.instruction},
                 {"scenario", sc.name},
                 {"scene", scene},
                 {"solution", sol.empty() ? "" : llm::solution_to_text(sol)}},
                vehicle_plan_text(spec.cruise_end, spec.zone_end, spec.actionable,
                                  sc.risk_object, spec.gap_param));
}

void verify_vehicle(const std::string& root, const std::vector<VehicleSpec>& specs) {
  llm::ScriptedBackend backend(root);
  for (const VehicleSpec& spec : specs) {
    const envs::VehicleScenario& sc = spec.scenario;
    const std::string scene = envs::observe_scene(sc).text;
    const llm::LatentRiskAssessment assessment =
        llm::query_latent_objects(backend, sc.name, sc.instruction, scene);
    const llm::RiskHandlingSolution solution =
        llm::propose_risk_handling(backend, sc.name, sc.instruction, scene, assessment);
    if (solution.empty() != !spec.actionable)
      throw Error("verify: handling solution presence mismatch for " + sc.name);
    const ValidatedPlan plan =
        llm::generate_plan(backend, sc.name, sc.instruction, scene, solution);
    int latent = 0;
    for (const SubtaskSpec& s : plan.plan().subtasks)
      for (const ConstraintSpec& c : s.constraints)
        if (c.latent) ++latent;
    if (latent != (spec.actionable ? 2 : 0))
      throw Error("verify: unexpected latent constraint count for " + sc.name);

    bench::StrategyContext ctx;
    for (const envs::SceneObject& o : sc.objects) ctx.scene_object_ids.push_back(o.id);
    for (const bench::Strategy s :
         {bench::Strategy::Typical, bench::Strategy::Conservative, bench::Strategy::Proposed})
      validate_plan(bench::apply_strategy(s, plan.plan(), assessment, ctx));
  }
  std::cout << "verified driving fixtures\n";
}

}  // namespace

int main(int argc, char** argv) {
  try {
    const std::string configs = argc > 1 ? argv[1] : "configs";
    const std::string out = argc > 2 ? argv[2] : "fixtures";

    const envs::RobotScenario robot =
        envs::load_robot_scenario(configs + "/robot_scenario.json");
    mint_robot(out, robot);
    verify_robot(out, robot);

    VehicleSpec bus;
    bus.scenario = envs::load_vehicle_scenario(configs + "/vehicle_bus.json");
    bus.assessment = {
        entry("children", llm::ProbabilityLabel::High,
              "a stopped school bus often hides children about to cross"),
        entry("bus", llm::ProbabilityLabel::Low, "the bus itself is parked on the shoulder")};
    bus.actionable = true;
    bus.gap_param = "child_gap";
    bus.handling_text =
        "slow to walking pace through the bus zone and keep clear of any child that steps out";
    bus.cruise_end = 19.0;
    bus.zone_end = 40.0;

    VehicleSpec teens;
    teens.scenario = envs::load_vehicle_scenario(configs + "/vehicle_teenager.json");
    teens.assessment = {entry("teenagers", llm::ProbabilityLabel::Medium,
                              "teenagers near the roadside may step into the lane")};
    teens.actionable = true;
    teens.gap_param = "teen_gap";
    teens.handling_text =
        "pass the group at walking pace and leave room in case someone steps out";
    teens.cruise_end = 15.0;
    teens.zone_end = 36.0;

    VehicleSpec adults;
    adults.scenario = envs::load_vehicle_scenario(configs + "/vehicle_adult.json");
    adults.assessment = {entry("adults", llm::ProbabilityLabel::Low,
                               "adults walking alongside generally stay off the roadway")};
    adults.actionable = false;
    adults.cruise_end = 19.0;
    adults.zone_end = 40.0;

    const std::string vehicle_root = out + "/vehicle";
    fs::create_directories(vehicle_root);
    for (const VehicleSpec* spec : {&bus, &teens, &adults}) mint_vehicle_scenario(vehicle_root, *spec);
    verify_vehicle(vehicle_root, {bus, teens, adults});

    std::cout << g_written << " fixtures written under " << out << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "gen_fixtures: " << e.what() << "\n";
    return 1;
  }
}
