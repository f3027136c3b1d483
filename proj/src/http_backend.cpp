#include <chrono>
#include <cstdlib>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include "tcal/backend.hpp"

namespace tcal {

namespace {

using json = nlohmann::json;

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorKind::ConfigError, fmt::format("endpoint url '{}' has no scheme", url));
  }
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint e;
  e.origin = url.substr(0, path_start);
  e.path = path_start == std::string::npos ? "/v1/completions" : url.substr(path_start);
  return e;
}

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

class HttpScorer final : public ContinuationScorer {
 public:
  explicit HttpScorer(const BackendConfig& config) : config_(config), endpoint_(split_url(*config.endpoint_url)) {
    if (config.api_key_env) {
      const char* key = std::getenv(config.api_key_env->c_str());
      if (key == nullptr || *key == '\0') {
        throw Error(ErrorKind::ConfigError,
                    fmt::format("environment variable {} holds no API key", *config.api_key_env));
      }
      bearer_ = key;
    }
  }

  ScoredContinuation score(const std::string& model_id, const std::string& prompt,
                           const std::string& candidate) override {
    const std::string full = prompt + candidate;
    const json body = {{"model", model_id}, {"prompt", full}, {"max_tokens", 1},
                       {"echo", true},      {"logprobs", 1},  {"temperature", 0}};
    const std::string payload = body.dump();

    std::string last_error;
    const int attempts = std::max(1, config_.retry.max_attempts);
    for (int attempt = 0; attempt < attempts; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(config_.retry.backoff_base_ms << (attempt - 1)));
      }
      httplib::Client client(endpoint_.origin);
      const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
      client.set_connection_timeout(timeout);
      client.set_read_timeout(timeout);
      client.set_write_timeout(timeout);
      httplib::Headers headers;
      if (!bearer_.empty()) headers.emplace("Authorization", "Bearer " + bearer_);

      auto res = client.Post(endpoint_.path, headers, payload, "application/json");
      if (!res) {
        last_error = httplib::to_string(res.error());
        continue;
      }
      if (retryable_status(res->status)) {
        last_error = fmt::format("HTTP {}", res->status);
        continue;
      }
      if (res->status != 200) {
        throw Error(ErrorKind::CapabilityError,
                    fmt::format("endpoint rejected echo scoring with HTTP {}: {}", res->status, res->body));
      }
      return parse_response(res->body, prompt.size(), full.size());
    }
    throw Error(ErrorKind::BackendUnavailable,
                fmt::format("{} unreachable after {} attempts: {}", endpoint_.origin, attempts, last_error));
  }

 private:
  static ScoredContinuation parse_response(const std::string& body, std::size_t prompt_len, std::size_t full_len) {
    json doc;
    try {
      doc = json::parse(body);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::CapabilityError, fmt::format("unparseable completion response: {}", e.what()));
    }
    const json* logprobs = nullptr;
    if (doc.contains("choices") && doc["choices"].is_array() && !doc["choices"].empty()) {
      const auto& choice = doc["choices"][0];
      if (choice.contains("logprobs") && choice["logprobs"].is_object()) logprobs = &choice["logprobs"];
    }
    if (logprobs == nullptr || !logprobs->contains("token_logprobs") || !logprobs->contains("text_offset")) {
      throw Error(ErrorKind::CapabilityError, "endpoint returned no per-token logprobs");
    }
    const auto& values = (*logprobs)["token_logprobs"];
    const auto& offsets = (*logprobs)["text_offset"];
    if (!values.is_array() || !offsets.is_array() || values.size() != offsets.size()) {
      throw Error(ErrorKind::CapabilityError, "malformed per-token logprobs");
    }

    ScoredContinuation out;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const auto start = offsets[i].get<std::size_t>();
      if (start >= full_len) break;  // generated tokens follow the echo
      const std::size_t end = i + 1 < offsets.size() ? offsets[i + 1].get<std::size_t>() : full_len;
      if (end <= prompt_len) continue;
      if (!values[i].is_number()) {
        throw Error(ErrorKind::CapabilityError, "candidate token without a logprob");
      }
      out.logprob_sum += values[i].get<double>();
      ++out.token_count;
    }
    if (out.token_count == 0) throw Error(ErrorKind::CapabilityError, "no candidate tokens in echoed logprobs");
    return out;
  }

  BackendConfig config_;
  Endpoint endpoint_;
  std::string bearer_;
};

}  // namespace

std::unique_ptr<ContinuationScorer> make_http_scorer(const BackendConfig& config) {
  config.validate();
  if (config.kind != BackendConfig::Kind::Http) throw Error(ErrorKind::ConfigError, "not an http backend config");
  return std::make_unique<HttpScorer>(config);
}

}  // namespace tcal
