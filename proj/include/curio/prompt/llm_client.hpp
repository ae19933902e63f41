// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "curio/errors.hpp"
#include "curio/prompt/chat.hpp"

namespace curio::prompt {

/// Transient failure (network, 5xx, 429); retried with backoff.
class TransportError : public Error {
public:
  using Error::Error;
};

class LlmClient {
public:
  virtual ~LlmClient() = default;
  /// Must be safe to call from several threads at once.
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

/// POSTs the wire request to an HTTP(S) endpoint with a bearer token.
class HttpLlmClient final : public LlmClient {
public:
  HttpLlmClient(std::string endpoint, std::string api_key, std::chrono::seconds timeout = std::chrono::seconds(120));
  ChatResponse complete(const ChatRequest& request) override;

private:
  std::string origin_;  // scheme://host[:port]
  std::string path_;
  std::string api_key_;
  std::chrono::seconds timeout_;
};

/// Built from LENS_LLM_ENDPOINT and LENS_LLM_KEY; ConfigError when the endpoint is unset.
std::unique_ptr<LlmClient> client_from_environment();

/// Runs a shell command per request: the wire request on stdin, the wire response on stdout.
/// A nonzero exit status is a TransportError.
class CommandLlmClient final : public LlmClient {
public:
  explicit CommandLlmClient(std::string command);
  ChatResponse complete(const ChatRequest& request) override;

private:
  std::string command_;
};

struct RetryPolicy {
  std::size_t max_in_flight = 8;
  int transport_attempts = 5;  // total tries per request on TransportError
  std::chrono::milliseconds base_delay{500};
  std::chrono::milliseconds max_delay{30000};
  int verdict_retries = 2;  // extra tries on an unparsable verdict before scoring 0
  /// Replaceable for tests.
  std::function<void(std::chrono::milliseconds)> sleep = [](std::chrono::milliseconds d) {
    std::this_thread::sleep_for(d);
  };
  void validate() const;
};

/// base * 2^attempt, capped at max_delay. `attempt` counts from 0.
std::chrono::milliseconds backoff_delay(const RetryPolicy& p, int attempt);

struct CallResult {
  std::optional<ChatResponse> response;
  std::string error;  // set when response is empty
  int attempts = 0;
};

/// Sends every request with at most max_in_flight outstanding. Results are keyed by
/// request id; ids must be unique.
std::map<std::string, CallResult> run_requests(LlmClient& client, const std::vector<ChatRequest>& requests,
                                               const RetryPolicy& policy);

struct VerdictResult {
  int verdict = 0;
  int format_failures = 0;
  std::string error;  // transport failure or exhausted format retries
};

/// Reward calls: parse_verdict on each response, re-asking up to verdict_retries times,
/// then scoring 0. Keyed by request id.
std::map<std::string, VerdictResult> collect_verdicts(LlmClient& client, const std::vector<ChatRequest>& requests,
                                                      const RetryPolicy& policy);

}  // namespace curio::prompt
