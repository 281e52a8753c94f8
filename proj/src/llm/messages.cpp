#include "taskmpc/llm/messages.hpp"

#include "taskmpc/types.hpp"

namespace taskmpc::llm {

std::string to_string(Role role) {
  switch (role) {
    case Role::Coder: return "coder";
    case Role::LatentObject: return "latent_object";
    case Role::RiskHandling: return "risk_handling";
    case Role::Correction: return "correction";
  }
  throw Error("unknown role");
}

std::string to_string(ProbabilityLabel label) {
  switch (label) {
    case ProbabilityLabel::High: return "High";
    case ProbabilityLabel::Medium: return "Medium";
    case ProbabilityLabel::Low: return "Low";
  }
  throw Error("unknown probability label");
}

ProbabilityLabel probability_label_from_string(const std::string& s) {
  if (s == "High") return ProbabilityLabel::High;
  if (s == "Medium") return ProbabilityLabel::Medium;
  if (s == "Low") return ProbabilityLabel::Low;
  throw ParseError("unknown probability label \"" + s + "\" (expected High, Medium, or Low)", s);
}

}  // namespace taskmpc::llm
