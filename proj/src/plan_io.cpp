#include "taskmpc/plan_io.hpp"

#include "json_strict.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace taskmpc {

using nlohmann::json;

namespace {

// Thin wrappers binding the shared strict-JSON helpers to this schema's name.
[[noreturn]] void fail(const std::string& msg, const json& ctx) { jsonu::fail("plan", msg, ctx); }

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
  jsonu::reject_unknown("plan", obj, allowed, where);
}

double get_number(const json& obj, const std::string& key, const std::string& where) {
  return jsonu::get_number("plan", obj, key, where);
}

int get_int(const json& obj, const std::string& key, const std::string& where) {
  return jsonu::get_int("plan", obj, key, where);
}

std::string get_string(const json& obj, const std::string& key, const std::string& where) {
  return jsonu::get_string("plan", obj, key, where);
}

RewardSpec parse_reward(const json& j) {
  if (!j.is_object()) fail("reward must be an object", j);
  reject_unknown(j, {"template", "args"}, "reward");
  RewardSpec spec;
  const std::string tmpl = get_string(j, "template", "reward");
  if (!j.contains("args") || !j["args"].is_object()) fail("reward needs an 'args' object", j);
  const json& a = j["args"];
  if (tmpl == "QuadraticTracking") {
    spec.kind = RewardKind::QuadraticTracking;
    reject_unknown(a, {"target_ref", "state_index", "scale"}, "QuadraticTracking args");
    spec.target_ref = get_string(a, "target_ref", "reward args");
    spec.state_index = get_int(a, "state_index", "reward args");
  } else if (tmpl == "VelocityTracking") {
    spec.kind = RewardKind::VelocityTracking;
    reject_unknown(a, {"target_ref", "scale"}, "VelocityTracking args");
    spec.target_ref = get_string(a, "target_ref", "reward args");
  } else {
    fail("unknown reward template '" + tmpl + "'", j);
  }
  spec.scale = a.contains("scale") ? get_number(a, "scale", "reward args") : 1.0;
  return spec;
}

ConstraintSpec parse_constraint(const json& j) {
  if (!j.is_object()) fail("constraint must be an object", j);
  reject_unknown(j, {"template", "args", "latent", "provenance"}, "constraint");
  ConstraintSpec spec;
  const std::string tmpl = get_string(j, "template", "constraint");
  if (!j.contains("args") || !j["args"].is_object()) fail("constraint needs an 'args' object", j);
  const json& a = j["args"];
  if (tmpl == "ForceLimit") {
    spec.kind = ConstraintKind::ForceLimit;
    reject_unknown(a, {"threshold_ref"}, "ForceLimit args");
  } else if (tmpl == "MinDistance") {
    spec.kind = ConstraintKind::MinDistance;
    reject_unknown(a, {"object_id", "threshold_ref"}, "MinDistance args");
    spec.object_id = get_string(a, "object_id", "MinDistance args");
  } else if (tmpl == "SpeedLimit") {
    spec.kind = ConstraintKind::SpeedLimit;
    reject_unknown(a, {"threshold_ref"}, "SpeedLimit args");
  } else {
    fail("unknown constraint template '" + tmpl + "'", j);
  }
  spec.threshold_ref = get_string(a, "threshold_ref", "constraint args");
  if (j.contains("latent")) {
    if (!j["latent"].is_boolean()) fail("'latent' must be a boolean", j);
    spec.latent = j["latent"].get<bool>();
  }
  if (j.contains("provenance")) spec.provenance = get_string(j, "provenance", "constraint");
  return spec;
}

TerminalCondition parse_terminal(const json& j, bool plan_level) {
  if (!j.is_object()) fail("terminal must be an object", j);
  reject_unknown(j, {"kind", "args"}, "terminal");
  TerminalCondition cond;
  const std::string kind = get_string(j, "kind", "terminal");
  const json a = j.contains("args") ? j["args"] : json::object();
  if (!a.is_object()) fail("terminal 'args' must be an object", j);
  if (kind == "WindowElapsed") {
    cond.kind = TerminalKind::WindowElapsed;
    reject_unknown(a, {}, "WindowElapsed args");
  } else if (kind == "StateWithinTolerance") {
    cond.kind = TerminalKind::StateWithinTolerance;
    reject_unknown(a, {"state_index", "target_ref", "target", "tol"}, "StateWithinTolerance args");
    cond.state_index = get_int(a, "state_index", "terminal args");
    cond.tol = get_number(a, "tol", "terminal args");
    if (a.contains("target_ref") && a.contains("target"))
      fail("terminal takes either 'target_ref' or 'target', not both", j);
    if (a.contains("target_ref")) {
      cond.target_ref = get_string(a, "target_ref", "terminal args");
    } else if (a.contains("target")) {
      cond.target_literal = get_number(a, "target", "terminal args");
    } else {
      fail("StateWithinTolerance needs 'target_ref' or 'target'", j);
    }
    if (plan_level && cond.target_ref)
      fail("whole_task_done may not use 'target_ref'", j);
  } else {
    fail("unknown terminal kind '" + kind + "'", j);
  }
  return cond;
}

ParamVector parse_params(const json& j) {
  if (!j.is_object()) fail("'params' must be an object", j);
  ParamVector out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const json& pj = it.value();
    if (!pj.is_object()) fail("parameter '" + it.key() + "' must be an object", j);
    reject_unknown(pj, {"value", "lower", "upper"}, "parameter '" + it.key() + "'");
    Param p;
    p.name = it.key();
    p.value = get_number(pj, "value", "parameter '" + it.key() + "'");
    p.lower = get_number(pj, "lower", "parameter '" + it.key() + "'");
    p.upper = get_number(pj, "upper", "parameter '" + it.key() + "'");
    out.insert(std::move(p));
  }
  return out;
}

SubtaskSpec parse_subtask(const json& j) {
  if (!j.is_object()) fail("subtask must be an object", j);
  reject_unknown(j, {"index", "reward", "constraints", "params", "window", "terminal"}, "subtask");
  SubtaskSpec s;
  s.index = get_int(j, "index", "subtask");
  if (!j.contains("reward")) fail("subtask needs a 'reward'", j);
  s.reward = parse_reward(j["reward"]);
  if (j.contains("constraints")) {
    if (!j["constraints"].is_array()) fail("'constraints' must be an array", j);
    for (const json& c : j["constraints"]) s.constraints.push_back(parse_constraint(c));
  }
  s.params = j.contains("params") ? parse_params(j["params"]) : ParamVector{};
  s.window = get_int(j, "window", "subtask");
  if (!j.contains("terminal")) fail("subtask needs a 'terminal'", j);
  s.terminal = parse_terminal(j["terminal"], /*plan_level=*/false);
  return s;
}

}  // namespace

TaskPlan plan_from_json(const json& doc) {
  if (!doc.is_object()) fail("plan document must be an object", doc);
  reject_unknown(doc, {"subtasks", "whole_task_done"}, "plan");
  if (!doc.contains("subtasks") || !doc["subtasks"].is_array())
    fail("plan needs a 'subtasks' array", doc);
  if (!doc.contains("whole_task_done")) fail("plan needs 'whole_task_done'", doc);

  TaskPlan plan;
  for (const json& s : doc["subtasks"]) plan.subtasks.push_back(parse_subtask(s));
  plan.whole_task_done = parse_terminal(doc["whole_task_done"], /*plan_level=*/true);
  plan.source = PlanSource::Fixture;
  return plan;
}

TaskPlan plan_from_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("plan is not valid JSON: ") + e.what(), text);
  }
  return plan_from_json(doc);
}

TaskPlan load_plan_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open plan file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  TaskPlan plan = plan_from_text(ss.str());
  // Latent flags in hand-written files have no hint to trace to; record the
  // file itself as their origin.
  for (auto& s : plan.subtasks)
    for (auto& c : s.constraints)
      if (c.latent && c.provenance.empty()) c.provenance = "file";
  return plan;
}

nlohmann::json plan_to_json(const TaskPlan& plan) {
  auto terminal_json = [](const TerminalCondition& cond) {
    json t;
    if (cond.kind == TerminalKind::WindowElapsed) {
      t["kind"] = "WindowElapsed";
      t["args"] = json::object();
    } else {
      t["kind"] = "StateWithinTolerance";
      json a;
      a["state_index"] = cond.state_index;
      if (cond.target_ref) a["target_ref"] = *cond.target_ref;
      if (cond.target_literal) a["target"] = *cond.target_literal;
      a["tol"] = cond.tol;
      t["args"] = a;
    }
    return t;
  };

  json doc;
  doc["subtasks"] = json::array();
  for (const SubtaskSpec& s : plan.subtasks) {
    json sj;
    sj["index"] = s.index;

    json r;
    json ra;
    ra["target_ref"] = s.reward.target_ref;
    if (s.reward.kind == RewardKind::QuadraticTracking) {
      r["template"] = "QuadraticTracking";
      ra["state_index"] = s.reward.state_index;
    } else {
      r["template"] = "VelocityTracking";
    }
    ra["scale"] = s.reward.scale;
    r["args"] = ra;
    sj["reward"] = r;

    sj["constraints"] = json::array();
    for (const ConstraintSpec& c : s.constraints) {
      json cj;
      json ca;
      switch (c.kind) {
        case ConstraintKind::ForceLimit:
          cj["template"] = "ForceLimit";
          break;
        case ConstraintKind::MinDistance:
          cj["template"] = "MinDistance";
          ca["object_id"] = c.object_id;
          break;
        case ConstraintKind::SpeedLimit:
          cj["template"] = "SpeedLimit";
          break;
      }
      ca["threshold_ref"] = c.threshold_ref;
      cj["args"] = ca;
      cj["latent"] = c.latent;
      if (!c.provenance.empty()) cj["provenance"] = c.provenance;
      sj["constraints"].push_back(cj);
    }

    json pj = json::object();
    for (const Param& p : s.params.entries()) {
      pj[p.name] = {{"value", p.value}, {"lower", p.lower}, {"upper", p.upper}};
    }
    sj["params"] = pj;
    sj["window"] = s.window;
    sj["terminal"] = terminal_json(s.terminal);
    doc["subtasks"].push_back(sj);
  }
  doc["whole_task_done"] = terminal_json(plan.whole_task_done);
  return doc;
}

std::string plan_to_text(const TaskPlan& plan) { return plan_to_json(plan).dump(2) + "\n"; }

}  // namespace taskmpc
