#pragma once

// Per-label log-probability acquisition. A LogprobBackend answers requests
// from its RecordStore (the persistent cache and offline store) and, for the
// http kind, scores missing continuations against an OpenAI-compatible
// completions endpoint by echoing prompt+candidate.

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "tcal/core.hpp"

namespace tcal {

struct LogprobRequest {
  std::string prompt;
  std::vector<std::string> candidates;
  std::string model_id;

  void validate() const;
};

struct LogprobRecord {
  std::string model_id;
  std::string prompt_hash;
  std::string prompt;
  std::string candidate;
  /// Sum of the candidate's token log-probabilities (natural log).
  double logprob = 0.0;
  int token_count = 1;

  bool operator==(const LogprobRecord&) const = default;
};

enum class ScoringRule { Sum, MeanPerToken };
std::string_view to_string(ScoringRule rule);
ScoringRule parse_scoring_rule(std::string_view name);

struct RetryPolicy {
  int max_attempts = 3;
  int backoff_base_ms = 200;
};

struct BackendConfig {
  enum class Kind { Http, Offline };

  Kind kind = Kind::Offline;
  std::optional<std::string> endpoint_url;
  std::optional<std::string> api_key_env;
  std::size_t max_in_flight = 4;
  int timeout_ms = 30000;
  RetryPolicy retry;
  ScoringRule scoring_rule = ScoringRule::Sum;
  std::string model_id = "default";
  /// Offline store, or the persistent cache file for http.
  std::optional<std::filesystem::path> store_path;

  void validate() const;
};

/// Record store keyed by prompt_hash. Concurrent readers, serialized writers.
/// When attached to a file every put() appends one line; a later line for the
/// same key wins on reload.
class RecordStore {
 public:
  RecordStore() = default;
  RecordStore(const RecordStore&) = delete;
  RecordStore& operator=(const RecordStore&) = delete;

  /// Throws ParseError naming the line on any malformed line.
  static std::unique_ptr<RecordStore> load(const std::filesystem::path& path);

  std::optional<LogprobRecord> find(const std::string& hash) const;
  void put(LogprobRecord record);
  std::size_t size() const;
  /// Records ordered by prompt_hash.
  std::vector<LogprobRecord> records() const;

  void attach(const std::filesystem::path& path);
  /// Canonical form: one line per key, ordered by prompt_hash, written to a
  /// temporary file and renamed into place.
  void save(const std::filesystem::path& path) const;

  static std::string serialize(const LogprobRecord& record);
  static LogprobRecord parse_line(std::string_view line, std::size_t line_no);

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, LogprobRecord> records_;
  std::optional<std::filesystem::path> log_path_;
};

std::unique_ptr<RecordStore> load_offline(const std::filesystem::path& path);

struct ScoredContinuation {
  double logprob_sum = 0.0;
  int token_count = 0;
};

/// Scores one candidate continuation of a prompt. Implementations must be
/// callable from several threads at once.
class ContinuationScorer {
 public:
  virtual ~ContinuationScorer() = default;
  virtual ScoredContinuation score(const std::string& model_id, const std::string& prompt,
                                   const std::string& candidate) = 0;
};

/// OpenAI-compatible completions client using echo + per-token logprobs.
std::unique_ptr<ContinuationScorer> make_http_scorer(const BackendConfig& config);

class LogprobBackend {
 public:
  /// A null scorer makes the backend offline: misses raise CacheMiss.
  LogprobBackend(BackendConfig config, std::shared_ptr<RecordStore> store, std::unique_ptr<ContinuationScorer> scorer);

  /// Builds the scorer and store described by the config.
  static std::unique_ptr<LogprobBackend> open(const BackendConfig& config);

  ProbVector fetch_label_probs(const LogprobRequest& request);
  /// Issues the distinct uncached continuations of all requests with at most
  /// max_in_flight outstanding, then answers every request.
  std::vector<ProbVector> fetch_many(std::span<const LogprobRequest> requests);
  /// Raw records for each candidate of the request, in candidate order.
  std::vector<LogprobRecord> fetch_records(const LogprobRequest& request);

  const BackendConfig& config() const noexcept { return config_; }
  /// False for offline backends, which never leave the record store.
  bool online() const noexcept { return scorer_ != nullptr; }
  RecordStore& store() noexcept { return *store_; }
  std::size_t network_calls() const noexcept { return network_calls_.load(); }

 private:
  LogprobRecord resolve(const std::string& model_id, const std::string& prompt, const std::string& candidate);
  LogprobRecord score_remote(const std::string& model_id, const std::string& prompt, const std::string& candidate,
                             const std::string& hash);
  double label_value(const LogprobRecord& record) const;
  void throw_cache_miss(const LogprobRequest& request) const;

  BackendConfig config_;
  std::shared_ptr<RecordStore> store_;
  std::unique_ptr<ContinuationScorer> scorer_;
  std::counting_semaphore<> in_flight_;
  std::mutex pending_mutex_;
  std::map<std::string, std::shared_future<LogprobRecord>> pending_;
  std::atomic<std::size_t> network_calls_{0};
};

/// Resolves every (prompt, candidate) of the requests through the backend and
/// writes one record each into the sink. Returns the number of records written.
std::size_t export_records(LogprobBackend& backend, std::span<const LogprobRequest> requests, RecordStore& sink);

}  // namespace tcal
