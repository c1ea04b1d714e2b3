/*
 * Copyright 2026 The cfscope Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


// OpenAI-compatible chat-completion client with an on-disk response cache,
// retries and a global in-flight limit.

#ifndef CFSCOPE_LLM_GATEWAY_H_
#define CFSCOPE_LLM_GATEWAY_H_

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "cfscope/http_util.h"
#include "cfscope/llm_client.h"
#include "json.hpp"

namespace cfscope {

struct RetryPolicy {
  int max_attempts = 4;
  int backoff_base_ms = 500;  // Waits base, 2*base, 4*base, ...
};

struct GatewayConfig {
  std::string base_url = "https://api.openai.com/v1";
  // Empty means the endpoint needs no key.
  std::string api_key_env_var = "OPENAI_API_KEY";
  std::string model = "gpt-4o-mini";
  double temperature = 1.0;
  int max_tokens = 256;
  int max_concurrency = 8;
  RetryPolicy retry;
  std::filesystem::path cache_dir;  // Empty disables caching.
  int timeout_s = 60;
};

inline constexpr int kMaxConcurrencyLimit = 256;

// Error code InvalidConfig.
absl::Status ValidateGatewayConfig(const GatewayConfig& config);
// Missing keys keep their defaults. Error code InvalidConfig.
absl::StatusOr<GatewayConfig> GatewayConfigFromJson(const nlohmann::json& j);
nlohmann::ordered_json GatewayConfigToJson(const GatewayConfig& config);

// Hex SHA-256 of the canonical JSON of the five fields.
std::string RequestHash(absl::string_view model, absl::string_view prompt,
                        double temperature, int max_tokens, int sample_index);

struct CompletionRecord {
  std::string request_hash;
  std::string prompt;
  int sample_index = 0;
  std::string response;
  int64_t latency_ms = 0;
  std::string model;
  std::string created_at;  // RFC 3339, UTC.
  double temperature = 0.0;
  int max_tokens = 0;
  bool operator==(const CompletionRecord&) const = default;
};

std::string SerializeRecord(const CompletionRecord& record);
// Error code CacheCorrupt.
absl::StatusOr<CompletionRecord> ParseRecord(absl::string_view text);

// One JSON file per record at <dir>/<hash[0:2]>/<hash>.json.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  std::filesystem::path PathFor(absl::string_view hash) const;
  // nullopt when absent. Unreadable or corrupt files count as absent.
  std::optional<CompletionRecord> Lookup(absl::string_view hash) const;
  // Atomic: temp file then rename. Error code CacheWriteFailed.
  absl::Status Store(const CompletionRecord& record) const;

 private:
  std::filesystem::path dir_;
};

class LlmGateway : public LlmClient {
 public:
  // Error code InvalidConfig.
  static absl::StatusOr<std::unique_ptr<LlmGateway>> Create(
      GatewayConfig config);

  // Error codes: AuthFailed, RateLimited, Transport.
  absl::StatusOr<std::string> Complete(
      const CompletionRequest& request) override;
  // Uses up to max_concurrency worker threads.
  std::vector<absl::StatusOr<std::string>> BatchComplete(
      std::span<const CompletionRequest> requests) override;

  const GatewayConfig& config() const { return config_; }
  int64_t network_calls() const { return network_calls_.load(); }
  int64_t cache_hits() const { return cache_hits_.load(); }

 private:
  LlmGateway(GatewayConfig config, HttpEndpoint endpoint);

  // One HTTP attempt loop for a request that missed the cache.
  absl::StatusOr<std::string> Fetch(const std::string& prompt,
                                    double temperature);

  GatewayConfig config_;
  HttpEndpoint endpoint_;
  std::optional<ResponseCache> cache_;
  std::counting_semaphore<kMaxConcurrencyLimit> in_flight_;
  std::atomic<int64_t> network_calls_{0};
  std::atomic<int64_t> cache_hits_{0};
};

}  // namespace cfscope

#endif  // CFSCOPE_LLM_GATEWAY_H_
