#include "taskmpc/bench/bench.hpp"

#include <algorithm>

namespace taskmpc::bench {

namespace {

constexpr const char* kHintPrefix = "hint:";
constexpr const char* kConservativeSpeedParam = "conservative_speed";
constexpr const char* kConservativeDistanceParam = "conservative_distance";

// High/Medium assessments justify keeping the latent constraint derived from
// that object's risk hint.
bool assessed_actionable(const llm::LatentRiskAssessment& assessment,
                         const std::string& object) {
  for (const llm::RiskObjectEntry& e : assessment.objects) {
    if (e.object == object)
      return e.label == llm::ProbabilityLabel::High || e.label == llm::ProbabilityLabel::Medium;
  }
  return false;
}

bool keep_under_proposed(const ConstraintSpec& c, const llm::LatentRiskAssessment& assessment) {
  const std::string& p = c.provenance;
  if (p.rfind(kHintPrefix, 0) != 0) return false;
  return assessed_actionable(assessment, p.substr(std::string(kHintPrefix).size()));
}

Param pinned(const std::string& name, double value) {
  Param p;
  p.name = name;
  p.value = value;
  p.lower = value;
  p.upper = value;
  return p;
}

}  // namespace

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Typical:
      return "typical";
    case Strategy::Conservative:
      return "conservative";
    case Strategy::Proposed:
      return "proposed";
  }
  throw Error("to_string: unknown strategy");
}

Strategy strategy_from_string(const std::string& s) {
  if (s == "typical") return Strategy::Typical;
  if (s == "conservative") return Strategy::Conservative;
  if (s == "proposed") return Strategy::Proposed;
  throw Error("unknown strategy '" + s + "' (expected typical, conservative or proposed)");
}

TaskPlan apply_strategy(Strategy s, const TaskPlan& plan,
                        const llm::LatentRiskAssessment& assessment,
                        const StrategyContext& ctx) {
  TaskPlan out = plan;
  for (SubtaskSpec& sub : out.subtasks) {
    std::erase_if(sub.constraints, [&](const ConstraintSpec& c) {
      if (!c.latent) return false;
      if (s == Strategy::Proposed) return !keep_under_proposed(c, assessment);
      return true;  // Typical and Conservative both start from a clean slate
    });
  }

  if (s == Strategy::Conservative) {
    for (SubtaskSpec& sub : out.subtasks) {
      for (const char* name : {kConservativeSpeedParam, kConservativeDistanceParam}) {
        if (sub.params.contains(name))
          throw Error("apply_strategy: subtask " + std::to_string(sub.index) +
                      " already defines parameter '" + std::string(name) + "'");
      }
      sub.params.insert(pinned(kConservativeSpeedParam, ctx.conservative_speed_limit));
      sub.params.insert(pinned(kConservativeDistanceParam, ctx.conservative_min_distance));

      ConstraintSpec speed;
      speed.kind = ConstraintKind::SpeedLimit;
      speed.threshold_ref = kConservativeSpeedParam;
      speed.latent = true;
      speed.provenance = "strategy:conservative";
      sub.constraints.push_back(speed);

      for (const std::string& id : ctx.scene_object_ids) {
        ConstraintSpec dist;
        dist.kind = ConstraintKind::MinDistance;
        dist.object_id = id;
        dist.threshold_ref = kConservativeDistanceParam;
        dist.latent = true;
        dist.provenance = "strategy:conservative";
        sub.constraints.push_back(dist);
      }
    }
  }
  return out;
}

}  // namespace taskmpc::bench
