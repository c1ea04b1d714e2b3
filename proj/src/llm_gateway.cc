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


#include "cfscope/llm_gateway.h"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <system_error>
#include <thread>

#include "absl/strings/str_cat.h"
#include "absl/time/clock.h"
#include "absl/time/time.h"
#include "cfscope/status_macros.h"
#include "httplib.h"

namespace cfscope {
namespace {

namespace fs = std::filesystem;
using ::nlohmann::json;
using ::nlohmann::ordered_json;

absl::Status ConfigError(absl::string_view message) {
  return MakeError(absl::StatusCode::kInvalidArgument, "InvalidConfig",
                   message);
}

std::string Sha256Hex(absl::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

bool Retryable(int status) { return status == 429 || status >= 500; }

}  // namespace

absl::Status ValidateGatewayConfig(const GatewayConfig& config) {
  if (config.max_concurrency < 1 ||
      config.max_concurrency > kMaxConcurrencyLimit) {
    return ConfigError(absl::StrCat("max_concurrency must be in [1, ",
                                    kMaxConcurrencyLimit, "]"));
  }
  if (config.retry.max_attempts < 1) {
    return ConfigError("retry.max_attempts must be at least 1");
  }
  if (config.retry.backoff_base_ms < 0) {
    return ConfigError("retry.backoff_base_ms must be non-negative");
  }
  if (config.max_tokens < 1) return ConfigError("max_tokens must be positive");
  if (config.timeout_s < 1) return ConfigError("timeout_s must be positive");
  if (config.model.empty()) return ConfigError("model is empty");
  return ParseBaseUrl(config.base_url).status();
}

absl::StatusOr<GatewayConfig> GatewayConfigFromJson(const json& j) {
  if (!j.is_object()) return ConfigError("gateway config must be an object");
  GatewayConfig c;
  try {
    c.base_url = j.value("base_url", c.base_url);
    c.api_key_env_var = j.value("api_key_env_var", c.api_key_env_var);
    c.model = j.value("model", c.model);
    c.temperature = j.value("temperature", c.temperature);
    c.max_tokens = j.value("max_tokens", c.max_tokens);
    c.max_concurrency = j.value("max_concurrency", c.max_concurrency);
    c.timeout_s = j.value("timeout_s", c.timeout_s);
    c.cache_dir = j.value("cache_dir", c.cache_dir.string());
    if (j.contains("retry")) {
      const json& r = j.at("retry");
      c.retry.max_attempts = r.value("max_attempts", c.retry.max_attempts);
      c.retry.backoff_base_ms =
          r.value("backoff_base_ms", c.retry.backoff_base_ms);
    }
  } catch (const json::exception& e) {
    return ConfigError(absl::StrCat("gateway config: ", e.what()));
  }
  RETURN_IF_ERROR(ValidateGatewayConfig(c));
  return c;
}

ordered_json GatewayConfigToJson(const GatewayConfig& c) {
  ordered_json j;
  j["base_url"] = c.base_url;
  j["api_key_env_var"] = c.api_key_env_var;
  j["model"] = c.model;
  j["temperature"] = c.temperature;
  j["max_tokens"] = c.max_tokens;
  j["max_concurrency"] = c.max_concurrency;
  j["retry"] = {{"max_attempts", c.retry.max_attempts},
                {"backoff_base_ms", c.retry.backoff_base_ms}};
  j["cache_dir"] = c.cache_dir.string();
  j["timeout_s"] = c.timeout_s;
  return j;
}

std::string RequestHash(absl::string_view model, absl::string_view prompt,
                        double temperature, int max_tokens, int sample_index) {
  ordered_json key = ordered_json::array();
  key.push_back(model);
  key.push_back(prompt);
  key.push_back(temperature);
  key.push_back(max_tokens);
  key.push_back(sample_index);
  return Sha256Hex(key.dump());
}

std::string SerializeRecord(const CompletionRecord& r) {
  ordered_json j;
  j["request_hash"] = r.request_hash;
  j["model"] = r.model;
  j["prompt"] = r.prompt;
  j["temperature"] = r.temperature;
  j["max_tokens"] = r.max_tokens;
  j["sample_index"] = r.sample_index;
  j["response"] = r.response;
  j["latency_ms"] = r.latency_ms;
  j["created_at"] = r.created_at;
  return j.dump(2) + "\n";
}

absl::StatusOr<CompletionRecord> ParseRecord(absl::string_view text) {
  try {
    const json j = json::parse(text);
    CompletionRecord r;
    r.request_hash = j.at("request_hash").get<std::string>();
    r.model = j.at("model").get<std::string>();
    r.prompt = j.at("prompt").get<std::string>();
    r.temperature = j.at("temperature").get<double>();
    r.max_tokens = j.at("max_tokens").get<int>();
    r.sample_index = j.at("sample_index").get<int>();
    r.response = j.at("response").get<std::string>();
    r.latency_ms = j.at("latency_ms").get<int64_t>();
    r.created_at = j.at("created_at").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    return MakeError(absl::StatusCode::kDataLoss, "CacheCorrupt", e.what());
  }
}

fs::path ResponseCache::PathFor(absl::string_view hash) const {
  const std::string h(hash);
  return dir_ / h.substr(0, 2) / (h + ".json");
}

std::optional<CompletionRecord> ResponseCache::Lookup(
    absl::string_view hash) const {
  std::ifstream in(PathFor(hash), std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  absl::StatusOr<CompletionRecord> r = ParseRecord(buf.str());
  if (!r.ok() || r->request_hash != hash) return std::nullopt;
  return *std::move(r);
}

absl::Status ResponseCache::Store(const CompletionRecord& record) const {
  const fs::path path = PathFor(record.request_hash);
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) {
    return MakeError(absl::StatusCode::kInternal, "CacheWriteFailed",
                     ec.message());
  }
  // Unique per thread so concurrent writers of one key never share a temp.
  const fs::path tmp = path.string() + ".tmp." +
                       std::to_string(std::hash<std::thread::id>()(
                           std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << SerializeRecord(record);
    if (!out) {
      return MakeError(absl::StatusCode::kInternal, "CacheWriteFailed",
                       absl::StrCat("cannot write ", tmp.string()));
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    return MakeError(absl::StatusCode::kInternal, "CacheWriteFailed",
                     absl::StrCat("cannot rename into ", path.string()));
  }
  return absl::OkStatus();
}

absl::StatusOr<std::unique_ptr<LlmGateway>> LlmGateway::Create(
    GatewayConfig config) {
  RETURN_IF_ERROR(ValidateGatewayConfig(config));
  ASSIGN_OR_RETURN(HttpEndpoint endpoint, ParseBaseUrl(config.base_url));
  return std::unique_ptr<LlmGateway>(
      new LlmGateway(std::move(config), std::move(endpoint)));
}

LlmGateway::LlmGateway(GatewayConfig config, HttpEndpoint endpoint)
    : config_(std::move(config)),
      endpoint_(std::move(endpoint)),
      in_flight_(config_.max_concurrency) {
  if (!config_.cache_dir.empty()) cache_.emplace(config_.cache_dir);
}

absl::StatusOr<std::string> LlmGateway::Complete(
    const CompletionRequest& request) {
  const double temperature = request.temperature.value_or(config_.temperature);
  const std::string hash =
      RequestHash(config_.model, request.prompt, temperature,
                  config_.max_tokens, request.sample_index);
  if (cache_) {
    if (std::optional<CompletionRecord> hit = cache_->Lookup(hash)) {
      ++cache_hits_;
      return std::move(hit->response);
    }
  }
  const auto start = std::chrono::steady_clock::now();
  ASSIGN_OR_RETURN(std::string text, Fetch(request.prompt, temperature));
  if (cache_) {
    CompletionRecord record;
    record.request_hash = hash;
    record.model = config_.model;
    record.prompt = request.prompt;
    record.temperature = temperature;
    record.max_tokens = config_.max_tokens;
    record.sample_index = request.sample_index;
    record.response = text;
    record.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    record.created_at =
        absl::FormatTime(absl::RFC3339_sec, absl::Now(), absl::UTCTimeZone());
    // A failed cache write costs a future call, not this result.
    cache_->Store(record).IgnoreError();
  }
  return text;
}

absl::StatusOr<std::string> LlmGateway::Fetch(const std::string& prompt,
                                              double temperature) {
  httplib::Headers headers;
  if (!config_.api_key_env_var.empty()) {
    const char* key = std::getenv(config_.api_key_env_var.c_str());
    if (key == nullptr || *key == '\0') {
      return MakeError(absl::StatusCode::kUnauthenticated, "AuthFailed",
                       absl::StrCat("environment variable ",
                                    config_.api_key_env_var, " is not set"));
    }
    headers.emplace("Authorization", absl::StrCat("Bearer ", key));
  }
  json body;
  body["model"] = config_.model;
  body["messages"] = json::array({{{"role", "user"}, {"content", prompt}}});
  body["temperature"] = temperature;
  body["max_tokens"] = config_.max_tokens;
  const std::string payload = body.dump();
  const std::string path = endpoint_.path_prefix + "/chat/completions";

  absl::Status last;
  for (int attempt = 0; attempt < config_.retry.max_attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(
          static_cast<int64_t>(config_.retry.backoff_base_ms) << (attempt - 1)));
    }
    httplib::Result res;
    {
      in_flight_.acquire();
      ++network_calls_;
      httplib::Client client(endpoint_.origin);
      client.set_connection_timeout(config_.timeout_s);
      client.set_read_timeout(config_.timeout_s);
      client.set_write_timeout(config_.timeout_s);
      res = client.Post(path, headers, payload, "application/json");
      in_flight_.release();
    }
    if (!res) {
      last = MakeError(absl::StatusCode::kUnavailable, "Transport",
                       httplib::to_string(res.error()));
      continue;
    }
    if (res->status == 401 || res->status == 403) {
      return MakeError(absl::StatusCode::kUnauthenticated, "AuthFailed",
                       absl::StrCat("HTTP ", res->status));
    }
    if (res->status == 429) {
      last = MakeError(absl::StatusCode::kResourceExhausted, "RateLimited",
                       "HTTP 429");
      continue;
    }
    if (Retryable(res->status)) {
      last = MakeError(absl::StatusCode::kUnavailable, "Transport",
                       absl::StrCat("HTTP ", res->status));
      continue;
    }
    if (res->status != 200) {
      return MakeError(absl::StatusCode::kUnavailable, "Transport",
                       absl::StrCat("HTTP ", res->status, ": ",
                                    res->body.substr(0, 200)));
    }
    try {
      const json doc = json::parse(res->body);
      return doc.at("choices").at(0).at("message").at("content")
          .get<std::string>();
    } catch (const json::exception& e) {
      return MakeError(absl::StatusCode::kUnavailable, "Transport",
                       absl::StrCat("malformed completion: ", e.what()));
    }
  }
  return last;
}

std::vector<absl::StatusOr<std::string>> LlmGateway::BatchComplete(
    std::span<const CompletionRequest> requests) {
  std::vector<absl::StatusOr<std::string>> out(requests.size(),
                                               absl::UnknownError("pending"));
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next++; i < requests.size(); i = next++) {
      out[i] = Complete(requests[i]);
    }
  };
  const size_t workers = std::min<size_t>(config_.max_concurrency,
                                          requests.size());
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (size_t t = 0; t < workers; ++t) threads.emplace_back(worker);
  for (std::thread& t : threads) t.join();
  return out;
}

}  // namespace cfscope
