#include "taskmpc/llm/pipeline.hpp"

#include "taskmpc/plan_io.hpp"
#include "taskmpc/util/format.hpp"

#include "../json_strict.hpp"

#include <nlohmann/json.hpp>

namespace taskmpc::llm {

using nlohmann::json;

namespace {

constexpr const char* kSchema = "llm response";

void require_nonempty(const std::string& value, const char* what) {
  if (value.empty()) throw Error(std::string("llm pipeline: ") + what + " must be nonempty");
}

std::string constraint_kind_name(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::ForceLimit: return "ForceLimit";
    case ConstraintKind::MinDistance: return "MinDistance";
    case ConstraintKind::SpeedLimit: return "SpeedLimit";
  }
  throw Error("unknown constraint kind");
}

}  // namespace

LatentRiskAssessment assessment_from_text(const std::string& text) {
  const json j = jsonu::parse_document(kSchema, text);
  if (!j.is_object()) throw ParseError("assessment must be a JSON object", text);
  jsonu::reject_unknown(kSchema, j, {"objects"}, "assessment");
  if (!j.contains("objects") || !j["objects"].is_array())
    throw ParseError("assessment needs an 'objects' array", text);

  LatentRiskAssessment out;
  for (const json& e : j["objects"]) {
    if (!e.is_object()) throw ParseError("assessment entry must be an object", text);
    jsonu::reject_unknown(kSchema, e, {"object", "probability", "rationale"},
                          "assessment entry");
    RiskObjectEntry entry;
    entry.object = jsonu::get_string(kSchema, e, "object", "assessment entry");
    entry.label =
        probability_label_from_string(jsonu::get_string(kSchema, e, "probability",
                                                        "assessment entry"));
    if (e.contains("rationale"))
      entry.rationale = jsonu::get_string(kSchema, e, "rationale", "assessment entry");
    if (entry.object.empty()) throw ParseError("assessment entry has an empty object id", text);
    out.objects.push_back(std::move(entry));
  }
  return out;
}

std::string assessment_to_text(const LatentRiskAssessment& a) {
  json j;
  j["objects"] = json::array();
  for (const RiskObjectEntry& e : a.objects) {
    json ej;
    ej["object"] = e.object;
    ej["probability"] = to_string(e.label);
    ej["rationale"] = e.rationale;
    j["objects"].push_back(std::move(ej));
  }
  return j.dump(2) + "\n";
}

RiskHandlingSolution solution_from_text(const std::string& text) {
  const json j = jsonu::parse_document(kSchema, text);
  if (!j.is_object()) throw ParseError("solution must be a JSON object", text);
  jsonu::reject_unknown(kSchema, j, {"text", "hints"}, "solution");
  RiskHandlingSolution out;
  out.text = jsonu::get_string(kSchema, j, "text", "solution");

  if (j.contains("hints")) {
    if (!j["hints"].is_array()) throw ParseError("solution 'hints' must be an array", text);
    for (const json& h : j["hints"]) {
      if (!h.is_object()) throw ParseError("hint must be an object", text);
      jsonu::reject_unknown(kSchema, h, {"template", "object", "param", "value", "lower", "upper"},
                            "hint");
      ConstraintHint hint;
      const std::string tmpl = jsonu::get_string(kSchema, h, "template", "hint");
      if (tmpl == "SpeedLimit") {
        hint.kind = ConstraintKind::SpeedLimit;
      } else if (tmpl == "MinDistance") {
        hint.kind = ConstraintKind::MinDistance;
      } else {
        throw ParseError("hint template must be SpeedLimit or MinDistance, got '" + tmpl + "'",
                         text);
      }
      hint.object_id = jsonu::get_string(kSchema, h, "object", "hint");
      hint.param_name = jsonu::get_string(kSchema, h, "param", "hint");
      hint.value = jsonu::get_number(kSchema, h, "value", "hint");
      hint.lower = jsonu::get_number(kSchema, h, "lower", "hint");
      hint.upper = jsonu::get_number(kSchema, h, "upper", "hint");
      if (hint.object_id.empty()) throw ParseError("hint has an empty object id", text);
      if (hint.param_name.empty()) throw ParseError("hint has an empty param name", text);
      if (!(hint.lower <= hint.value && hint.value <= hint.upper))
        throw ParseError("hint value " + fmt_double(hint.value) + " outside its box [" +
                             fmt_double(hint.lower) + ", " + fmt_double(hint.upper) + "]",
                         text);
      hint.provenance = "hint:" + hint.object_id;
      out.hints.push_back(std::move(hint));
    }
  }
  return out;
}

std::string solution_to_text(const RiskHandlingSolution& s) {
  json j;
  j["text"] = s.text;
  j["hints"] = json::array();
  for (const ConstraintHint& h : s.hints) {
    json hj;
    hj["template"] = constraint_kind_name(h.kind);
    hj["object"] = h.object_id;
    hj["param"] = h.param_name;
    hj["value"] = h.value;
    hj["lower"] = h.lower;
    hj["upper"] = h.upper;
    j["hints"].push_back(std::move(hj));
  }
  return j.dump(2) + "\n";
}

CorrectionCommand correction_from_text(const std::string& text) {
  const json j = jsonu::parse_document(kSchema, text);
  if (!j.is_object()) throw ParseError("correction must be a JSON object", text);
  jsonu::reject_unknown(kSchema, j, {"text", "no_change", "target_subtasks", "theta_seeds"},
                        "correction");
  CorrectionCommand out;
  out.text = jsonu::get_string(kSchema, j, "text", "correction");
  if (j.contains("no_change")) {
    if (!j["no_change"].is_boolean()) throw ParseError("'no_change' must be a boolean", text);
    out.no_change = j["no_change"].get<bool>();
  }
  if (j.contains("target_subtasks")) {
    if (!j["target_subtasks"].is_array())
      throw ParseError("'target_subtasks' must be an array", text);
    for (const json& e : j["target_subtasks"]) {
      if (!e.is_number_integer())
        throw ParseError("'target_subtasks' entries must be integers", text);
      const int idx = e.get<int>();
      if (idx < 1) throw ParseError("subtask indices are 1-based and positive", text);
      out.target_subtasks.push_back(idx);
    }
  }
  if (j.contains("theta_seeds")) {
    if (!j["theta_seeds"].is_object()) throw ParseError("'theta_seeds' must be an object", text);
    for (auto it = j["theta_seeds"].begin(); it != j["theta_seeds"].end(); ++it) {
      if (!it.value().is_number())
        throw ParseError("theta seed '" + it.key() + "' must be a number", text);
      out.theta_seeds[it.key()] = it.value().get<double>();
    }
  }
  if (out.no_change && (!out.theta_seeds.empty() || !out.target_subtasks.empty()))
    throw ParseError("a no-change correction must not carry seeds or targets", text);
  return out;
}

std::string correction_to_text(const CorrectionCommand& c) {
  json j;
  j["text"] = c.text;
  j["no_change"] = c.no_change;
  j["target_subtasks"] = c.target_subtasks;
  j["theta_seeds"] = json::object();
  for (const auto& [name, value] : c.theta_seeds) j["theta_seeds"][name] = value;
  return j.dump(2) + "\n";
}

LatentRiskAssessment query_latent_objects(Backend& backend, const std::string& scenario,
                                          const std::string& instruction,
                                          const std::string& scene) {
  require_nonempty(scenario, "scenario");
  require_nonempty(instruction, "instruction");
  require_nonempty(scene, "scene");
  const RenderedPrompt prompt = render_prompt(
      Role::LatentObject,
      {{"scenario", scenario}, {"instruction", instruction}, {"scene", scene}});
  return assessment_from_text(backend.complete(prompt));
}

RiskHandlingSolution propose_risk_handling(Backend& backend, const std::string& scenario,
                                           const std::string& instruction,
                                           const std::string& scene,
                                           const LatentRiskAssessment& assessment) {
  // Nothing High or Medium: there is nothing to handle, skip the call.
  if (!assessment.has_actionable_risk()) return RiskHandlingSolution{};

  require_nonempty(scenario, "scenario");
  require_nonempty(instruction, "instruction");
  require_nonempty(scene, "scene");
  const RenderedPrompt prompt = render_prompt(Role::RiskHandling,
                                              {{"assessment", assessment_to_text(assessment)},
                                               {"scenario", scenario},
                                               {"instruction", instruction},
                                               {"scene", scene}});
  const std::string response = backend.complete(prompt);
  RiskHandlingSolution solution = solution_from_text(response);
  if (solution.text.empty())
    throw ParseError("risk handling for an actionable assessment must carry a command", response);
  return solution;
}

ValidatedPlan generate_plan(Backend& backend, const std::string& scenario,
                            const std::string& instruction, const std::string& scene,
                            const RiskHandlingSolution& solution,
                            const std::string& correction_text) {
  require_nonempty(scenario, "scenario");
  require_nonempty(instruction, "instruction");
  const RenderedPrompt prompt =
      render_prompt(Role::Coder, {{"correction", correction_text},
                                  {"instruction", instruction},
                                  {"scenario", scenario},
                                  {"scene", scene},
                                  {"solution", solution.empty() ? "" : solution_to_text(solution)}});
  const std::string response = backend.complete(prompt);
  TaskPlan plan = plan_from_text(response);

  // Latent flags must trace back to the handling solution.
  for (SubtaskSpec& s : plan.subtasks) {
    for (ConstraintSpec& c : s.constraints) {
      if (!c.latent) continue;
      const ConstraintHint* match = nullptr;
      for (const ConstraintHint& h : solution.hints) {
        const bool same_target = c.kind == ConstraintKind::MinDistance
                                     ? c.object_id == h.object_id
                                     : c.threshold_ref == h.param_name;
        if (c.kind == h.kind && same_target) {
          match = &h;
          break;
        }
      }
      if (!match)
        throw ParseError("latent " + constraint_kind_name(c.kind) + " constraint in subtask " +
                             std::to_string(s.index) + " has no matching risk hint",
                         response);
      c.provenance = match->provenance;
    }
  }

  plan.source = correction_text.empty() ? PlanSource::LlmGenerated : PlanSource::Corrected;
  return validate_plan(plan);
}

CorrectionCommand request_correction(Backend& backend, const std::string& scenario,
                                     const std::string& context, const FeedbackText& feedback) {
  require_nonempty(scenario, "scenario");
  require_nonempty(context, "context");
  require_nonempty(feedback.text, "feedback");
  const RenderedPrompt prompt = render_prompt(
      Role::Correction,
      {{"context", context}, {"feedback", feedback.text}, {"scenario", scenario}});
  return correction_from_text(backend.complete(prompt));
}

}  // namespace taskmpc::llm
