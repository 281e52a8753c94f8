#pragma once

#include "taskmpc/llm/messages.hpp"

#include <map>
#include <string>
#include <vector>

namespace taskmpc::llm {

// A prompt ready for a backend: role, rendered text, and the named slot
// values it was rendered from. Scripted lookup keys on the slots (via
// digest()), not on the rendered text, so prompt wording can evolve without
// invalidating recorded responses.
struct RenderedPrompt {
  Role role = Role::Coder;
  std::string system_text;
  std::string user_text;
  std::map<std::string, std::string> slots;
  std::vector<std::string> digest_keys;  // subset of slot names, sorted
};

// The slot names a role's template declares. render_prompt requires exactly
// this set, no more, no less. Values may be empty strings (e.g. no correction
// on the first plan request).
const std::vector<std::string>& role_slots(Role role);

// Fills the role's template. Throws Error when the slot set does not match
// role_slots(role) exactly.
RenderedPrompt render_prompt(Role role, const std::map<std::string, std::string>& slots);

// Stable 64-bit FNV-1a digest over the role name and the digest-keyed slots
// ("role\n" then "key=value\n" lines in sorted key order), as 16 hex digits.
// Most roles digest every slot; Correction digests only {context, scenario}
// so that float-laden feedback text does not fragment the recorded responses.
std::string prompt_digest(const RenderedPrompt& prompt);

}  // namespace taskmpc::llm
