#include "taskmpc/llm/backend.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <thread>

namespace taskmpc::llm {

RemoteBackend::RemoteBackend(RemoteConfig cfg, const AuditLog* audit)
    : cfg_(std::move(cfg)), audit_(audit) {
  if (cfg_.endpoint.empty())
    throw Error("remote backend: no endpoint (set LLM_ENDPOINT or pass a flag)");
  if (cfg_.api_key.empty())
    throw Error("remote backend: no credential (set LLM_API_KEY)");
  if (cfg_.model.empty()) throw Error("remote backend: no model name (set LLM_MODEL)");
  if (cfg_.timeout_s < 1) throw Error("remote backend: timeout must be at least 1s");
  if (cfg_.max_retries < 0) throw Error("remote backend: max_retries must be nonnegative");
}

std::string RemoteBackend::complete(const RenderedPrompt& prompt) {
  nlohmann::json body;
  body["model"] = cfg_.model;
  body["temperature"] = cfg_.temperature;
  body["messages"] = nlohmann::json::array({
      nlohmann::json{{"role", "system"}, {"content", prompt.system_text}},
      nlohmann::json{{"role", "user"}, {"content", prompt.user_text}},
  });
  const std::string payload = body.dump();

  httplib::Client client(cfg_.endpoint);
  client.set_connection_timeout(cfg_.timeout_s, 0);
  client.set_read_timeout(cfg_.timeout_s, 0);
  client.set_write_timeout(cfg_.timeout_s, 0);
  client.set_bearer_token_auth(cfg_.api_key);

  last_retries_ = 0;
  int last_status = 0;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0) {
      ++last_retries_;
      const auto backoff = std::chrono::milliseconds(200LL << (attempt - 1));
      std::this_thread::sleep_for(backoff);
    }
    httplib::Result res = client.Post("/v1/chat/completions", payload, "application/json");
    if (!res) {
      const auto err = res.error();
      if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
          err == httplib::Error::Write)
        throw TimeoutError("remote backend: request timed out after " +
                           std::to_string(cfg_.timeout_s) + "s");
      throw Error("remote backend: transport failure: " + httplib::to_string(err));
    }
    last_status = res->status;
    if (res->status == 429 || res->status >= 500) continue;  // retryable
    if (res->status != 200)
      throw HttpError("remote backend: HTTP " + std::to_string(res->status) + ": " + res->body,
                      res->status);

    nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("choices") || !reply["choices"].is_array() ||
        reply["choices"].empty() || !reply["choices"][0].contains("message") ||
        !reply["choices"][0]["message"].contains("content") ||
        !reply["choices"][0]["message"]["content"].is_string())
      throw ParseError("remote backend: malformed chat-completion response", res->body);
    const std::string content = reply["choices"][0]["message"]["content"].get<std::string>();
    if (audit_) audit_->append(prompt.role, prompt_digest(prompt), payload, content);
    return content;
  }
  throw HttpError("remote backend: HTTP " + std::to_string(last_status) + " after " +
                      std::to_string(cfg_.max_retries) + " retries",
                  last_status);
}

}  // namespace taskmpc::llm
