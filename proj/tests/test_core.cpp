#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "taskmpc/plan.hpp"
#include "taskmpc/plan_io.hpp"
#include "taskmpc/util/rng.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <string>
#include <vector>

using namespace taskmpc;

namespace {

State make_state(double a, double b) {
  State x(2);
  x << a, b;
  return x;
}

Control make_control(double u) {
  Control c(1);
  c << u;
  return c;
}

Param param(const std::string& name, double value, double lo, double hi) {
  return Param{name, value, lo, hi};
}

// Two-subtask reach-then-push plan used throughout: subtask 1 drives the arm
// to the box face, subtask 2 pushes at a target speed under a force limit.
TaskPlan make_push_plan() {
  TaskPlan plan;

  SubtaskSpec reach;
  reach.index = 1;
  reach.reward = {RewardKind::QuadraticTracking, "box_position", 0, 1.0};
  reach.params.insert(param("box_position", 1.0, 1.0, 1.0));
  reach.window = 30;
  reach.terminal = {TerminalKind::StateWithinTolerance, 0, "box_position", {}, 0.02};

  SubtaskSpec push;
  push.index = 2;
  push.reward = {RewardKind::VelocityTracking, "target_speed", 0, 1.0};
  ConstraintSpec fl;
  fl.kind = ConstraintKind::ForceLimit;
  fl.threshold_ref = "force_limit";
  push.constraints.push_back(fl);
  push.params.insert(param("target_speed", 0.5, 0.5, 0.5));
  push.params.insert(param("force_limit", 3.0, 0.5, 8.0));
  push.window = 50;
  push.terminal = {TerminalKind::WindowElapsed, 0, {}, {}, 0.0};

  plan.subtasks = {reach, push};
  plan.whole_task_done = {TerminalKind::WindowElapsed, 0, {}, {}, 0.0};
  return plan;
}

}  // namespace

TEST_CASE("ParamVector keeps entries sorted and rejects unknown names") {
  ParamVector v;
  v.insert(param("zeta", 1.0, 0.0, 2.0));
  v.insert(param("alpha", 5.0, 0.0, 10.0));
  REQUIRE(v.size() == 2);
  CHECK(v[0].name == "alpha");
  CHECK(v[1].name == "zeta");
  CHECK(v.at("zeta").value == 1.0);
  CHECK(!v.contains("beta"));
  CHECK_THROWS_AS(v.at("beta"), UnresolvedParamRef);
  CHECK_THROWS_AS(v.set_value("beta", 0.0), UnresolvedParamRef);

  // Re-inserting an existing name replaces it instead of duplicating.
  v.insert(param("alpha", 7.0, 0.0, 10.0));
  REQUIRE(v.size() == 2);
  CHECK(v.at("alpha").value == 7.0);

  Eigen::VectorXd raw(2);
  raw << 12.0, -3.0;
  v.set_values(raw);
  v.clip();
  CHECK(v.at("alpha").value == 10.0);
  CHECK(v.at("zeta").value == 0.0);
  CHECK_THROWS_AS(v.set_values(Eigen::VectorXd::Zero(3)), DimensionMismatch);
}

TEST_CASE("validate_plan accepts a well-formed plan") {
  ValidatedPlan vp = validate_plan(make_push_plan());
  CHECK(vp.size() == 2);
  CHECK(vp.subtask(1).reward.kind == RewardKind::VelocityTracking);
}

TEST_CASE("validate_plan reports every violation at once") {
  TaskPlan plan = make_push_plan();
  plan.subtasks[1].constraints[0].threshold_ref = "theta_f";  // does not resolve
  plan.subtasks[1].index = 3;                                 // indices {1, 3}
  plan.subtasks[0].window = 0;                                // non-positive window
  try {
    validate_plan(plan);
    FAIL("expected PlanValidationError");
  } catch (const PlanValidationError& e) {
    REQUIRE(e.violations.size() == 3);
    bool saw_ref = false, saw_index = false, saw_window = false;
    for (const std::string& s : e.violations) {
      saw_ref = saw_ref || s.find("theta_f") != std::string::npos;
      saw_index = saw_index || s.find("contiguous") != std::string::npos;
      saw_window = saw_window || s.find("window") != std::string::npos;
    }
    CHECK(saw_ref);
    CHECK(saw_index);
    CHECK(saw_window);
  }
}

TEST_CASE("validate_plan rejects empty plans, bad bounds, and misplaced object ids") {
  CHECK_THROWS_AS(validate_plan(TaskPlan{}), PlanValidationError);

  TaskPlan plan = make_push_plan();
  plan.subtasks[1].params.insert(param("force_limit", 9.0, 0.5, 8.0));  // value > upper
  CHECK_THROWS_AS(validate_plan(plan), PlanValidationError);

  plan = make_push_plan();
  ConstraintSpec md;
  md.kind = ConstraintKind::MinDistance;
  md.threshold_ref = "force_limit";
  // no object_id
  plan.subtasks[1].constraints.push_back(md);
  CHECK_THROWS_AS(validate_plan(plan), PlanValidationError);

  plan = make_push_plan();
  plan.subtasks[1].constraints[0].object_id = "box";  // ForceLimit takes none
  CHECK_THROWS_AS(validate_plan(plan), PlanValidationError);

  plan = make_push_plan();
  plan.whole_task_done =
      TerminalCondition{TerminalKind::StateWithinTolerance, 0, std::string("box_position"), {}, 0.1};
  CHECK_THROWS_AS(validate_plan(plan), PlanValidationError);
}

TEST_CASE("eval_reward matches hand-computed tracking values") {
  ParamVector params;
  params.insert(param("target", 2.0, 0.0, 5.0));

  RewardSpec quad{RewardKind::QuadraticTracking, "target", 0, 1.0};
  CHECK(eval_reward(quad, params, make_state(2.0, 0.0), make_control(0.0)) == 0.0);
  CHECK(eval_reward(quad, params, make_state(1.5, 0.0), make_control(0.0)) ==
        doctest::Approx(-0.25).epsilon(1e-12));

  ParamVector vparams;
  vparams.insert(param("target_speed", 0.5, 0.0, 2.0));
  RewardSpec vel{RewardKind::VelocityTracking, "target_speed", 0, 1.0};
  CHECK(eval_reward(vel, vparams, make_state(0.0, 0.5), make_control(0.0)) == 0.0);

  // Scale multiplies the squared error linearly.
  quad.scale = 3.0;
  CHECK(eval_reward(quad, params, make_state(1.5, 0.0), make_control(0.0)) ==
        doctest::Approx(-0.75).epsilon(1e-12));

  CHECK_THROWS_AS(eval_reward(quad, params, State::Zero(0), make_control(0.0)),
                  DimensionMismatch);
  RewardSpec bad_ref{RewardKind::QuadraticTracking, "nope", 0, 1.0};
  CHECK_THROWS_AS(eval_reward(bad_ref, params, make_state(0.0, 0.0), make_control(0.0)),
                  UnresolvedParamRef);
}

TEST_CASE("eval_reward is Lipschitz in the tracked parameter") {
  // |R(t) - R(t + d)| <= L |d| with L = scale * (2 max|t - x_j| + span) over
  // the parameter box; direct consequence of the quadratic template.
  const double lo = 0.0, hi = 5.0, xj = 1.25, scale = 2.0;
  const double span = hi - lo;
  const double L = scale * (2.0 * std::max(std::abs(lo - xj), std::abs(hi - xj)) + span);
  Rng rng(7);
  for (int k = 0; k < 200; ++k) {
    const double t = rng.uniform(lo, hi);
    const double d = rng.uniform(-0.1, 0.1);
    const double t2 = std::clamp(t + d, lo, hi);
    ParamVector a, b;
    a.insert(param("target", t, lo, hi));
    b.insert(param("target", t2, lo, hi));
    RewardSpec spec{RewardKind::QuadraticTracking, "target", 0, scale};
    const double ra = eval_reward(spec, a, make_state(xj, 0.0), make_control(0.0));
    const double rb = eval_reward(spec, b, make_state(xj, 0.0), make_control(0.0));
    CHECK(std::abs(ra - rb) <= L * std::abs(t2 - t) + 1e-12);
  }
}

TEST_CASE("eval_constraints margins match the template formulas") {
  ParamVector params;
  params.insert(param("force_limit", 10.0, 0.0, 20.0));
  params.insert(param("keep_out", 5.0, 0.0, 10.0));
  params.insert(param("speed_cap", 2.0, 0.0, 5.0));

  ConstraintSpec fl;
  fl.kind = ConstraintKind::ForceLimit;
  fl.threshold_ref = "force_limit";
  ConstraintSpec md;
  md.kind = ConstraintKind::MinDistance;
  md.threshold_ref = "keep_out";
  md.object_id = "children";
  ConstraintSpec sl;
  sl.kind = ConstraintKind::SpeedLimit;
  sl.threshold_ref = "speed_cap";

  Observables obs;
  obs.contact_force = 4.0;
  obs.known_objects = {"children"};
  obs.distances["children"] = 3.0;

  const State x = make_state(0.0, 1.5);
  const Control u = make_control(0.0);
  Eigen::VectorXd m = eval_constraints({fl, md, sl}, params, x, u, obs);
  REQUIRE(m.size() == 3);
  CHECK(m[0] == doctest::Approx(6.0).epsilon(1e-12));   // 10 - |4|
  CHECK(m[1] == doctest::Approx(-2.0).epsilon(1e-12));  // 3 - 5, violated
  CHECK(m[2] == doctest::Approx(0.5).epsilon(1e-12));   // 2 - |1.5|

  // Boundary case: force exactly at the limit.
  obs.contact_force = 10.0;
  CHECK(eval_constraints({fl}, params, x, u, obs)[0] == 0.0);

  // Sign oracle: every margin equals the inline re-evaluation of its formula.
  Rng rng(13);
  for (int k = 0; k < 100; ++k) {
    Observables o2;
    o2.contact_force = rng.uniform(-15.0, 15.0);
    o2.known_objects = {"children"};
    o2.distances["children"] = rng.uniform(0.0, 12.0);
    const State xs = make_state(rng.uniform(-1.0, 1.0), rng.uniform(-4.0, 4.0));
    Eigen::VectorXd got = eval_constraints({fl, md, sl}, params, xs, u, o2);
    CHECK(got[0] == 10.0 - std::abs(*o2.contact_force));
    CHECK(got[1] == o2.distances["children"] - 5.0);
    CHECK(got[2] == 2.0 - std::abs(xs[1]));
  }
}

TEST_CASE("eval_constraints distinguishes absent objects from unknown ones") {
  ParamVector params;
  params.insert(param("keep_out", 5.0, 0.0, 10.0));
  ConstraintSpec md;
  md.kind = ConstraintKind::MinDistance;
  md.threshold_ref = "keep_out";
  md.object_id = "children";

  Observables obs;
  obs.known_objects = {"children"};
  // Known but not on the path: vacuously satisfied, finite sentinel margin.
  Eigen::VectorXd m =
      eval_constraints({md}, params, make_state(0, 0), make_control(0), obs);
  CHECK(m[0] == kInactiveMargin);

  Observables unknown;
  CHECK_THROWS_AS(eval_constraints({md}, params, make_state(0, 0), make_control(0), unknown),
                  MissingObservable);

  ConstraintSpec fl;
  fl.kind = ConstraintKind::ForceLimit;
  fl.threshold_ref = "keep_out";
  CHECK_THROWS_AS(eval_constraints({fl}, params, make_state(0, 0), make_control(0), unknown),
                  MissingObservable);
}

TEST_CASE("check_terminal handles tolerance and window conditions") {
  ParamVector params;
  params.insert(param("goal", 1.0, 0.0, 2.0));

  TerminalCondition within{TerminalKind::StateWithinTolerance, 0, std::string("goal"), {}, 0.05};
  CHECK(check_terminal(within, make_state(1.02, 9.0), 0, 100, &params));
  CHECK(!check_terminal(within, make_state(1.10, 9.0), 0, 100, &params));

  TerminalCondition literal{TerminalKind::StateWithinTolerance, 0, {}, 50.0, 0.5};
  CHECK(check_terminal(literal, make_state(49.8, 0.0), 0, 100, nullptr));
  CHECK(!check_terminal(literal, make_state(48.0, 0.0), 0, 100, nullptr));

  TerminalCondition window{TerminalKind::WindowElapsed, 0, {}, {}, 0.0};
  const int omega = 30;
  CHECK(check_terminal(window, make_state(0, 0), omega, omega, nullptr));
  CHECK(!check_terminal(window, make_state(0, 0), omega - 1, omega, nullptr));
  // Monotone: once elapsed, stays elapsed.
  for (int e = 0; e < 2 * omega; ++e) {
    if (check_terminal(window, make_state(0, 0), e, omega, nullptr))
      CHECK(check_terminal(window, make_state(0, 0), e + 1, omega, nullptr));
  }

  TerminalCondition dangling{TerminalKind::StateWithinTolerance, 0, std::string("goal"), {}, 0.1};
  CHECK_THROWS_AS(check_terminal(dangling, make_state(1.0, 0.0), 0, 10, nullptr),
                  UnresolvedParamRef);
}

TEST_CASE("pool_params qualifies names and scatter_params round-trips") {
  TaskPlan plan;
  SubtaskSpec s1;
  s1.index = 1;
  s1.reward = {RewardKind::QuadraticTracking, "a", 0, 1.0};
  s1.params.insert(param("a", 1.0, 0.0, 10.0));
  s1.window = 5;
  s1.terminal = {TerminalKind::WindowElapsed, 0, {}, {}, 0.0};
  SubtaskSpec s2 = s1;
  s2.index = 2;
  s2.reward.target_ref = "b";
  s2.params = ParamVector{};
  s2.params.insert(param("b", 2.0, 0.0, 10.0));
  plan.subtasks = {s1, s2};
  plan.whole_task_done = {TerminalKind::WindowElapsed, 0, {}, {}, 0.0};
  validate_plan(plan);

  ParamVector pooled = pool_params(plan);
  REQUIRE(pooled.size() == 2);
  CHECK(pooled[0].name == "s1.a");
  CHECK(pooled[0].value == 1.0);
  CHECK(pooled[1].name == "s2.b");
  CHECK(pooled[1].value == 2.0);

  pooled.set_value("s2.b", 3.0);
  TaskPlan updated = scatter_params(plan, pooled);
  CHECK(updated.subtasks[0].params.at("a").value == 1.0);
  CHECK(updated.subtasks[1].params.at("b").value == 3.0);

  // Layout violations are rejected, not silently reordered.
  ParamVector wrong_name;
  wrong_name.insert(param("s1.a", 1.0, 0.0, 10.0));
  wrong_name.insert(param("s2.c", 2.0, 0.0, 10.0));
  CHECK_THROWS_AS(scatter_params(plan, wrong_name), DimensionMismatch);
  ParamVector too_short;
  too_short.insert(param("s1.a", 1.0, 0.0, 10.0));
  CHECK_THROWS_AS(scatter_params(plan, too_short), DimensionMismatch);
}

TEST_CASE("scatter of pool is the identity over randomized plans") {
  Rng rng(42);
  const char* names[] = {"a", "b", "gain", "limit", "target"};
  for (int trial = 0; trial < 50; ++trial) {
    TaskPlan plan;
    const int n = rng.uniform_int(1, 4);
    for (int i = 1; i <= n; ++i) {
      SubtaskSpec s;
      s.index = i;
      const int nparams = rng.uniform_int(1, 4);
      for (int p = 0; p < nparams; ++p) {
        const double lo = rng.uniform(-5.0, 0.0);
        const double hi = lo + rng.uniform(0.5, 5.0);
        s.params.insert(param(names[rng.uniform_int(0, 4)], rng.uniform(lo, hi), lo, hi));
      }
      s.reward = {RewardKind::QuadraticTracking, s.params[0].name, 0, 1.0};
      s.window = rng.uniform_int(1, 40);
      s.terminal = {TerminalKind::WindowElapsed, 0, {}, {}, 0.0};
      plan.subtasks.push_back(std::move(s));
    }
    plan.whole_task_done = {TerminalKind::WindowElapsed, 0, {}, {}, 0.0};
    validate_plan(plan);

    TaskPlan back = scatter_params(plan, pool_params(plan));
    CHECK(plan_to_json(back) == plan_to_json(plan));
  }
}

TEST_CASE("plan documents round-trip through text") {
  TaskPlan plan = make_push_plan();
  plan.subtasks[1].constraints[0].latent = true;
  plan.subtasks[1].constraints[0].provenance = "hint:children";

  const std::string text = plan_to_text(plan);
  TaskPlan parsed = plan_from_text(text);
  CHECK(plan_to_json(parsed) == plan_to_json(plan));
  CHECK(parsed.subtasks[1].constraints[0].latent);
  CHECK(parsed.subtasks[1].constraints[0].provenance == "hint:children");
  validate_plan(parsed);
}

TEST_CASE("plan parser applies schema defaults") {
  nlohmann::json doc = plan_to_json(make_push_plan());
  doc["subtasks"][0]["reward"]["args"].erase("scale");
  doc["subtasks"][1]["constraints"][0].erase("latent");
  TaskPlan plan = plan_from_json(doc);
  CHECK(plan.subtasks[0].reward.scale == 1.0);
  CHECK(!plan.subtasks[1].constraints[0].latent);
}

TEST_CASE("plan parser rejects malformed documents") {
  const std::string garbled = "push harder please";
  try {
    plan_from_text(garbled);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.raw == garbled);  // raw text retained for audit
  }

  nlohmann::json good = plan_to_json(make_push_plan());

  auto expect_reject = [](nlohmann::json doc) {
    CHECK_THROWS_AS(plan_from_json(doc), ParseError);
  };

  nlohmann::json doc = good;
  doc["notes"] = "extra";  // unknown top-level key
  expect_reject(doc);

  doc = good;
  doc["subtasks"][0]["priority"] = 3;  // unknown subtask key
  expect_reject(doc);

  doc = good;
  doc["subtasks"][0]["reward"]["args"]["exponent"] = 4;  // unknown reward arg
  expect_reject(doc);

  doc = good;
  doc["subtasks"][1]["constraints"][0]["template"] = "TorqueLimit";  // unknown template
  expect_reject(doc);

  doc = good;
  doc["subtasks"][0]["window"] = "thirty";  // wrong type
  expect_reject(doc);

  doc = good;
  doc["subtasks"][0]["terminal"]["args"]["target"] = 1.0;  // ref and literal together
  expect_reject(doc);

  doc = good;
  doc["whole_task_done"] =
      {{"kind", "StateWithinTolerance"},
       {"args", {{"state_index", 0}, {"target_ref", "goal"}, {"tol", 0.1}}}};
  expect_reject(doc);  // plan-level condition may not use parameter references

  doc = good;
  doc.erase("whole_task_done");
  expect_reject(doc);
}
