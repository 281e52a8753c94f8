#pragma once

#include "taskmpc/plan.hpp"

#include <map>
#include <string>
#include <vector>

namespace taskmpc::llm {

// The four reasoning roles of the pipeline. Each role has its own prompt
// template and its own fixture directory in the scripted backend.
enum class Role { Coder, LatentObject, RiskHandling, Correction };

std::string to_string(Role role);

// Closed qualitative scale for how likely an object is to become an apparent
// risk. Deliberately not numeric: the reasoning backend emits labels, and
// downstream logic only ever branches on them.
enum class ProbabilityLabel { High, Medium, Low };

std::string to_string(ProbabilityLabel label);
ProbabilityLabel probability_label_from_string(const std::string& s);

struct RiskObjectEntry {
  std::string object;  // scene object id
  ProbabilityLabel label = ProbabilityLabel::Low;
  std::string rationale;
};

// Which objects the reasoning backend flags as potential latent risks.
struct LatentRiskAssessment {
  std::vector<RiskObjectEntry> objects;

  bool empty() const { return objects.empty(); }
  bool has_actionable_risk() const {
    for (const auto& o : objects)
      if (o.label != ProbabilityLabel::Low) return true;
    return false;
  }
};

// A structured constraint suggestion carried alongside the natural-language
// risk-handling text. Hints become latent-flagged ConstraintSpecs plus their
// seed parameters when the plan is generated.
struct ConstraintHint {
  ConstraintKind kind = ConstraintKind::SpeedLimit;
  std::string object_id;    // MinDistance only
  std::string param_name;   // parameter the constraint will reference
  double value = 0.0;       // seed value and box bounds for that parameter
  double lower = 0.0;
  double upper = 0.0;
  std::string provenance;   // "hint:<object>"
};

struct RiskHandlingSolution {
  std::string text;
  std::vector<ConstraintHint> hints;

  bool empty() const { return text.empty() && hints.empty(); }
};

// Outer-loop adjustment command. `no_change` short-circuits plan regeneration;
// `theta_seeds` carries explicit pooled-parameter seeds ("s2.force_limit")
// applied after any plan rewrite.
struct CorrectionCommand {
  std::string text;
  std::vector<int> target_subtasks;
  std::map<std::string, double> theta_seeds;
  bool no_change = false;
};

// Rendered summary of an evaluation or a failed subtask, fed back to the
// Correction role.
struct FeedbackText {
  std::string text;
};

}  // namespace taskmpc::llm
