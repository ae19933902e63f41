// SPDX-License-Identifier: Apache-2.0
#include "curio/prompt/llm_client.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "shell.hpp"

#include "curio/prompt/parsers.hpp"

namespace curio::prompt {

namespace {

// Runs fn(i) for every index with at most `width` concurrent workers.
template <class Fn>
void bounded_for(std::size_t n, std::size_t width, Fn fn) {
  width = std::max<std::size_t>(1, std::min(width, n));
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  for (std::size_t w = 0; w < width; ++w)
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
}

void check_unique_request_ids(const std::vector<ChatRequest>& requests) {
  std::set<std::string_view> ids;
  for (const auto& r : requests)
    if (!ids.insert(r.id).second) throw ContractError("duplicate request id \"" + r.id + "\"");
}

// One request with transport retries.
CallResult call_with_retry(LlmClient& client, const ChatRequest& req, const RetryPolicy& policy) {
  CallResult res;
  for (int attempt = 0; attempt < policy.transport_attempts; ++attempt) {
    ++res.attempts;
    try {
      res.response = client.complete(req);
      res.error.clear();
      return res;
    } catch (const TransportError& e) {
      res.error = e.what();
      if (attempt + 1 < policy.transport_attempts && policy.sleep) policy.sleep(backoff_delay(policy, attempt));
    } catch (const Error& e) {
      res.error = e.what();  // not transient
      return res;
    }
  }
  return res;
}

}  // namespace

HttpLlmClient::HttpLlmClient(std::string endpoint, std::string api_key, std::chrono::seconds timeout)
    : api_key_(std::move(api_key)), timeout_(timeout) {
  const auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("LLM endpoint must be an http(s) URL: " + endpoint);
  const auto scheme = endpoint.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw ConfigError("LLM endpoint must be an http(s) URL: " + endpoint);
  const auto path_start = endpoint.find('/', scheme_end + 3);
  origin_ = endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : endpoint.substr(path_start);
}

ChatResponse HttpLlmClient::complete(const ChatRequest& request) {
  httplib::Client cli(origin_);
  cli.set_connection_timeout(timeout_);
  cli.set_read_timeout(timeout_);
  cli.set_write_timeout(timeout_);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  auto res = cli.Post(path_, headers, request_to_json(request), "application/json");
  if (!res) throw TransportError("LLM request failed: " + httplib::to_string(res.error()));
  if (res->status == 429 || res->status >= 500)
    throw TransportError("LLM endpoint returned HTTP " + std::to_string(res->status));
  if (res->status != 200) throw DataError("LLM endpoint returned HTTP " + std::to_string(res->status));
  return response_from_json(res->body);
}

std::unique_ptr<LlmClient> client_from_environment() {
  const char* endpoint = std::getenv("LENS_LLM_ENDPOINT");
  if (!endpoint || !*endpoint) throw ConfigError("LENS_LLM_ENDPOINT is not set");
  const char* key = std::getenv("LENS_LLM_KEY");
  return std::make_unique<HttpLlmClient>(endpoint, key ? key : "");
}

CommandLlmClient::CommandLlmClient(std::string command) : command_(std::move(command)) {
  if (command_.empty()) throw ConfigError("LLM command must be nonempty");
}

ChatResponse CommandLlmClient::complete(const ChatRequest& request) {
  detail::TempFile input;
  if (!input.write(request_to_json(request)))
    throw TransportError("cannot write LLM request to " + input.path().string());
  const auto r = detail::run_shell(command_ + " < " + detail::shell_quote(input.path().string()));
  if (!r.started) throw TransportError("cannot start LLM command");
  if (r.status != 0) throw TransportError("LLM command exited with status " + std::to_string(r.status));
  return response_from_json(r.stdout_text);
}

void RetryPolicy::validate() const {
  if (max_in_flight < 1) throw ConfigError("max-in-flight must be >= 1");
  if (transport_attempts < 1) throw ConfigError("transport attempts must be >= 1");
  if (verdict_retries < 0) throw ConfigError("verdict retries must be >= 0");
  if (base_delay.count() < 0 || max_delay < base_delay) throw ConfigError("invalid backoff delays");
}

std::chrono::milliseconds backoff_delay(const RetryPolicy& p, int attempt) {
  auto d = p.base_delay;
  for (int i = 0; i < attempt && d < p.max_delay; ++i) d *= 2;
  return std::min(d, p.max_delay);
}

std::map<std::string, CallResult> run_requests(LlmClient& client, const std::vector<ChatRequest>& requests,
                                               const RetryPolicy& policy) {
  policy.validate();
  check_unique_request_ids(requests);
  std::vector<CallResult> results(requests.size());
  bounded_for(requests.size(), policy.max_in_flight,
              [&](std::size_t i) { results[i] = call_with_retry(client, requests[i], policy); });
  std::map<std::string, CallResult> out;
  for (std::size_t i = 0; i < requests.size(); ++i) out.emplace(requests[i].id, std::move(results[i]));
  return out;
}

std::map<std::string, VerdictResult> collect_verdicts(LlmClient& client, const std::vector<ChatRequest>& requests,
                                                      const RetryPolicy& policy) {
  policy.validate();
  check_unique_request_ids(requests);
  std::vector<VerdictResult> results(requests.size());
  bounded_for(requests.size(), policy.max_in_flight, [&](std::size_t i) {
    auto& v = results[i];
    for (int attempt = 0; attempt <= policy.verdict_retries; ++attempt) {
      const auto call = call_with_retry(client, requests[i], policy);
      if (!call.response) {
        v.error = call.error;
        v.verdict = 0;
        return;
      }
      try {
        v.verdict = parse_verdict(*call.response);
        v.error.clear();
        return;
      } catch (const FormatError& e) {
        ++v.format_failures;
        v.error = e.what();
      }
    }
    v.verdict = 0;
  });
  std::map<std::string, VerdictResult> out;
  for (std::size_t i = 0; i < requests.size(); ++i) out.emplace(requests[i].id, std::move(results[i]));
  return out;
}

}  // namespace curio::prompt
