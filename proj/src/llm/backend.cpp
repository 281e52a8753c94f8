#include "taskmpc/llm/backend.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace taskmpc::llm {

void AuditLog::append(Role role, const std::string& digest, const std::string& request,
                      const std::string& response) const {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char ts[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(ts, sizeof(ts), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);

  nlohmann::json record;
  record["ts"] = ts;
  record["role"] = to_string(role);
  record["digest"] = digest;
  record["request"] = request;
  record["response"] = response;

  std::ofstream out(path_, std::ios::app);
  if (!out) throw Error("audit log: cannot open '" + path_ + "' for append");
  out << record.dump() << "\n";
}

ScriptedBackend::ScriptedBackend(std::string root, const AuditLog* audit)
    : root_(std::move(root)), audit_(audit) {
  if (!std::filesystem::is_directory(root_))
    throw Error("scripted backend: fixture root '" + root_ + "' is not a directory");
}

std::string ScriptedBackend::fixture_path(const RenderedPrompt& prompt) const {
  return root_ + "/" + to_string(prompt.role) + "/" + prompt_digest(prompt) + ".txt";
}

std::string ScriptedBackend::complete(const RenderedPrompt& prompt) {
  const std::string digest = prompt_digest(prompt);
  const std::string path = fixture_path(prompt);
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::ostringstream msg;
    msg << "no recorded response for role " << to_string(prompt.role) << ", digest " << digest
        << " (looked in " << path << "); digest-keyed slots were:";
    for (const std::string& key : prompt.digest_keys) {
      auto it = prompt.slots.find(key);
      msg << "\n  " << key << "=" << (it == prompt.slots.end() ? "<missing>" : it->second);
    }
    throw FixtureMiss(msg.str(), digest);
  }
  std::ostringstream body;
  body << in.rdbuf();
  if (audit_) audit_->append(prompt.role, digest, prompt.user_text, body.str());
  return body.str();
}

RemoteConfig RemoteConfig::from_env() {
  RemoteConfig cfg;
  if (const char* v = std::getenv("LLM_ENDPOINT")) cfg.endpoint = v;
  if (const char* v = std::getenv("LLM_MODEL")) cfg.model = v;
  if (const char* v = std::getenv("LLM_API_KEY")) cfg.api_key = v;
  return cfg;
}

}  // namespace taskmpc::llm
