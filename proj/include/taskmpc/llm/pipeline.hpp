#pragma once

#include "taskmpc/llm/backend.hpp"
#include "taskmpc/llm/messages.hpp"
#include "taskmpc/plan.hpp"

#include <string>

namespace taskmpc::llm {

// ---------------------------------------------------------------------------
// Reasoning pipeline: scene text -> latent-risk assessment -> handling
// solution -> plan, plus the correction channel. Every stage parses the
// backend's response strictly; a response that does not match its schema
// raises ParseError with the raw text retained. No stage ever fabricates a
// result on failure.
// ---------------------------------------------------------------------------

// Structured-response codecs (JSON documents, strict key whitelists). The
// *_to_text forms are canonical serializations: parse followed by serialize
// is schema-equal to the input.
LatentRiskAssessment assessment_from_text(const std::string& text);
std::string assessment_to_text(const LatentRiskAssessment& a);

RiskHandlingSolution solution_from_text(const std::string& text);
std::string solution_to_text(const RiskHandlingSolution& s);

CorrectionCommand correction_from_text(const std::string& text);
std::string correction_to_text(const CorrectionCommand& c);

// Which objects could become risks even though they are not on the path now.
LatentRiskAssessment query_latent_objects(Backend& backend, const std::string& scenario,
                                          const std::string& instruction,
                                          const std::string& scene);

// Handling proposal for the flagged objects. An assessment with no High or
// Medium entry short-circuits to an empty solution without a backend call; a
// backend response with empty text for an actionable assessment is rejected.
RiskHandlingSolution propose_risk_handling(Backend& backend, const std::string& scenario,
                                           const std::string& instruction,
                                           const std::string& scene,
                                           const LatentRiskAssessment& assessment);

// Subtask decomposition. The handling solution (serialized) and an optional
// correction command are part of the request; the response must be a valid
// plan document. Every latent constraint must trace to one of the solution's
// hints and gets its provenance stamped "hint:<object>"; a latent constraint
// with no matching hint is rejected. The plan source is LlmGenerated, or
// Corrected when a correction command was given.
ValidatedPlan generate_plan(Backend& backend, const std::string& scenario,
                            const std::string& instruction, const std::string& scene,
                            const RiskHandlingSolution& solution,
                            const std::string& correction_text = "");

// Outer-loop adjustment for execution feedback. `context` is a short stable
// label (it keys the scripted lookup together with the scenario); the full
// feedback text rides along in the prompt only.
CorrectionCommand request_correction(Backend& backend, const std::string& scenario,
                                     const std::string& context, const FeedbackText& feedback);

}  // namespace taskmpc::llm
