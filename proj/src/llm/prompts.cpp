#include "taskmpc/llm/prompts.hpp"

#include "taskmpc/types.hpp"
#include "taskmpc/util/rng.hpp"

#include <algorithm>
#include <cstdio>

namespace taskmpc::llm {

namespace {

struct Template {
  const char* system_text;
  const char* user_template;
  std::vector<std::string> slots;        // sorted
  std::vector<std::string> digest_keys;  // sorted subset of slots
};

const Template& template_for(Role role) {
  static const Template coder{
      "You write task plans for a constrained receding-horizon controller. "
      "Respond with exactly one JSON document in the plan schema and nothing "
      "else: top-level keys \"subtasks\" (array of {index, reward:{template,"
      "args}, constraints:[{template,args,latent}], params:{name:{value,lower,"
      "upper}}, window, terminal:{kind,args}}) and \"whole_task_done\". Reward "
      "templates: QuadraticTracking, VelocityTracking. Constraint templates: "
      "ForceLimit, MinDistance, SpeedLimit. Terminal kinds: "
      "StateWithinTolerance, WindowElapsed. Every parameter a template "
      "references must appear in that subtask's params with box bounds.",
      "Scenario: {scenario}\n"
      "Instruction: {instruction}\n"
      "Scene:\n{scene}\n"
      "Risk handling solution (may be empty):\n{solution}\n"
      "Correction command (may be empty):\n{correction}\n"
      "Decompose the instruction into sequential subtasks and emit the plan "
      "document. Mark every constraint that exists to guard against a latent "
      "risk with \"latent\": true.",
      {"correction", "instruction", "scenario", "scene", "solution"},
      {"correction", "instruction", "scenario", "scene", "solution"},
  };
  static const Template latent_object{
      "You review a driving scene and identify objects that could become "
      "risks even though they are not on the vehicle's path right now, "
      "including objects that are implied but not visible. Respond with "
      "exactly one JSON document: {\"objects\": [{\"object\": id, "
      "\"probability\": \"High\"|\"Medium\"|\"Low\", \"rationale\": text}]}. "
      "Use an empty array when nothing qualifies.",
      "Scenario: {scenario}\n"
      "Instruction: {instruction}\n"
      "Scene:\n{scene}\n"
      "List the latent risk candidates with their probability labels.",
      {"instruction", "scenario", "scene"},
      {"instruction", "scenario", "scene"},
  };
  static const Template risk_handling{
      "You propose how a vehicle should act to stay safe given flagged risk "
      "objects. Respond with exactly one JSON document: {\"text\": command, "
      "\"hints\": [{\"template\": \"SpeedLimit\"|\"MinDistance\", \"object\": "
      "id, \"param\": name, \"value\": v, \"lower\": lo, \"upper\": hi}]}. "
      "Hints become latent-flagged constraints; omit them for Low-probability "
      "objects.",
      "Scenario: {scenario}\n"
      "Instruction: {instruction}\n"
      "Scene:\n{scene}\n"
      "Risk assessment:\n{assessment}\n"
      "Propose a handling solution.",
      {"assessment", "instruction", "scenario", "scene"},
      {"assessment", "instruction", "scenario", "scene"},
  };
  static const Template correction{
      "You adjust a task plan based on execution feedback. Respond with "
      "exactly one JSON document: {\"text\": command, \"no_change\": bool, "
      "\"target_subtasks\": [indices], \"theta_seeds\": {\"s<i>.<param>\": "
      "value}}. Use no_change when the execution needs no adjustment.",
      "Scenario: {scenario}\n"
      "Context: {context}\n"
      "Execution feedback:\n{feedback}\n"
      "State the correction.",
      {"context", "feedback", "scenario"},
      {"context", "scenario"},
  };
  switch (role) {
    case Role::Coder: return coder;
    case Role::LatentObject: return latent_object;
    case Role::RiskHandling: return risk_handling;
    case Role::Correction: return correction;
  }
  throw Error("unknown role");
}

std::string fill(const std::string& tmpl, const std::map<std::string, std::string>& slots) {
  std::string out = tmpl;
  for (const auto& [key, value] : slots) {
    const std::string needle = "{" + key + "}";
    size_t pos = 0;
    while ((pos = out.find(needle, pos)) != std::string::npos) {
      out.replace(pos, needle.size(), value);
      pos += value.size();
    }
  }
  return out;
}

}  // namespace

const std::vector<std::string>& role_slots(Role role) { return template_for(role).slots; }

RenderedPrompt render_prompt(Role role, const std::map<std::string, std::string>& slots) {
  const Template& t = template_for(role);
  std::vector<std::string> given;
  given.reserve(slots.size());
  for (const auto& [key, _] : slots) given.push_back(key);
  if (given != t.slots) {
    std::string msg = "render_prompt(" + to_string(role) + "): slot set mismatch; expected {";
    for (size_t i = 0; i < t.slots.size(); ++i) msg += (i ? ", " : "") + t.slots[i];
    msg += "} got {";
    for (size_t i = 0; i < given.size(); ++i) msg += (i ? ", " : "") + given[i];
    msg += "}";
    throw Error(msg);
  }

  RenderedPrompt p;
  p.role = role;
  p.system_text = t.system_text;
  p.user_text = fill(t.user_template, slots);
  p.slots = slots;
  p.digest_keys = t.digest_keys;
  if (p.user_text.empty()) throw Error("render_prompt: rendered prompt is empty");
  return p;
}

std::string prompt_digest(const RenderedPrompt& prompt) {
  uint64_t h = fnv1a(to_string(prompt.role) + "\n");
  for (const std::string& key : prompt.digest_keys) {
    auto it = prompt.slots.find(key);
    if (it == prompt.slots.end())
      throw Error("prompt_digest: digest key '" + key + "' has no slot value");
    h = fnv1a(key + "=" + it->second + "\n", h);
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace taskmpc::llm
