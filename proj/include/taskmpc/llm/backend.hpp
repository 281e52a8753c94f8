#pragma once

#include "taskmpc/llm/prompts.hpp"
#include "taskmpc/types.hpp"

#include <memory>
#include <string>

namespace taskmpc::llm {

// No recorded response for a prompt digest.
struct FixtureMiss : Error {
  FixtureMiss(const std::string& msg, std::string digest_hex)
      : Error(msg), digest(std::move(digest_hex)) {}
  std::string digest;
};

// A remote call came back with a non-success status after all retries.
struct HttpError : Error {
  HttpError(const std::string& msg, int status_code) : Error(msg), status(status_code) {}
  int status = 0;
};

// A remote call did not complete within the configured timeout.
struct TimeoutError : Error {
  using Error::Error;
};

// Optional newline-delimited record of every request/response pair, for
// debugging remote sessions. Off unless a path is given; the timestamped log
// is never part of a run's result files.
class AuditLog {
 public:
  explicit AuditLog(std::string path) : path_(std::move(path)) {}
  void append(Role role, const std::string& digest, const std::string& request,
              const std::string& response) const;

 private:
  std::string path_;
};

class Backend {
 public:
  virtual ~Backend() = default;
  // Returns the response text for a rendered prompt. Implementations must be
  // deterministic given the same prompt slots wherever possible; scripted
  // replay is a pure function of (role, slots).
  virtual std::string complete(const RenderedPrompt& prompt) = 0;
};

// Replays recorded responses from <root>/<role>/<digest>.txt, verbatim.
class ScriptedBackend : public Backend {
 public:
  // Throws Error when `root` is not a readable directory.
  explicit ScriptedBackend(std::string root, const AuditLog* audit = nullptr);
  std::string complete(const RenderedPrompt& prompt) override;

  // Where a prompt's response would be looked up; exposed for the fixture
  // minting tool.
  std::string fixture_path(const RenderedPrompt& prompt) const;

 private:
  std::string root_;
  const AuditLog* audit_ = nullptr;
};

struct RemoteConfig {
  std::string endpoint;  // base URL, e.g. "http://127.0.0.1:8080"
  std::string model;
  std::string api_key;
  double temperature = 0.0;
  int timeout_s = 60;
  int max_retries = 3;  // additional attempts after the first, on 429/5xx

  // Reads LLM_ENDPOINT, LLM_MODEL, LLM_API_KEY; unset variables leave the
  // corresponding fields empty.
  static RemoteConfig from_env();
};

// OpenAI-compatible chat-completion client (POST <endpoint>/v1/chat/completions,
// bearer credential). Retries 429 and 5xx responses with exponential backoff.
class RemoteBackend : public Backend {
 public:
  // Throws Error when endpoint or credential is missing.
  explicit RemoteBackend(RemoteConfig cfg, const AuditLog* audit = nullptr);
  std::string complete(const RenderedPrompt& prompt) override;

  // Retries performed by the most recent complete() call.
  int last_retry_count() const { return last_retries_; }

 private:
  RemoteConfig cfg_;
  const AuditLog* audit_ = nullptr;
  int last_retries_ = 0;
};

}  // namespace taskmpc::llm
