#include "tcal/backend.hpp"

#include <algorithm>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "tcal/hashing.hpp"

namespace tcal {

std::string_view to_string(ScoringRule rule) { return rule == ScoringRule::Sum ? "sum" : "mean"; }

ScoringRule parse_scoring_rule(std::string_view name) {
  if (name == "sum") return ScoringRule::Sum;
  if (name == "mean") return ScoringRule::MeanPerToken;
  throw Error(ErrorKind::ConfigError, fmt::format("unknown scoring rule '{}'", name));
}

void LogprobRequest::validate() const {
  if (candidates.size() < 2) throw Error(ErrorKind::InvalidDimension, "request needs at least 2 candidates");
  std::set<std::string_view> seen(candidates.begin(), candidates.end());
  if (seen.size() != candidates.size()) throw Error(ErrorKind::ConfigError, "request candidates are not distinct");
}

void BackendConfig::validate() const {
  if (max_in_flight < 1) throw Error(ErrorKind::ConfigError, "max_in_flight must be at least 1");
  if (timeout_ms < 1) throw Error(ErrorKind::ConfigError, "timeout_ms must be positive");
  if (retry.max_attempts < 1) throw Error(ErrorKind::ConfigError, "retry.max_attempts must be at least 1");
  if (kind == Kind::Http && (!endpoint_url || endpoint_url->empty())) {
    throw Error(ErrorKind::ConfigError, "http backend needs an endpoint url");
  }
  if (kind == Kind::Offline && !store_path) throw Error(ErrorKind::ConfigError, "offline backend needs a store path");
}

LogprobBackend::LogprobBackend(BackendConfig config, std::shared_ptr<RecordStore> store,
                               std::unique_ptr<ContinuationScorer> scorer)
    : config_(std::move(config)),
      store_(std::move(store)),
      scorer_(std::move(scorer)),
      in_flight_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, config_.max_in_flight))) {
  if (!store_) store_ = std::make_shared<RecordStore>();
}

std::unique_ptr<LogprobBackend> LogprobBackend::open(const BackendConfig& config) {
  config.validate();
  if (config.kind == BackendConfig::Kind::Offline) {
    std::shared_ptr<RecordStore> store = load_offline(*config.store_path);
    return std::make_unique<LogprobBackend>(config, std::move(store), nullptr);
  }
  std::shared_ptr<RecordStore> store;
  if (config.store_path && std::filesystem::exists(*config.store_path)) {
    store = RecordStore::load(*config.store_path);
  } else {
    store = std::make_shared<RecordStore>();
  }
  if (config.store_path) store->attach(*config.store_path);
  return std::make_unique<LogprobBackend>(config, std::move(store), make_http_scorer(config));
}

double LogprobBackend::label_value(const LogprobRecord& record) const {
  if (config_.scoring_rule == ScoringRule::MeanPerToken) return record.logprob / record.token_count;
  return record.logprob;
}

LogprobRecord LogprobBackend::score_remote(const std::string& model_id, const std::string& prompt,
                                           const std::string& candidate, const std::string& hash) {
  in_flight_.acquire();
  ScoredContinuation scored;
  try {
    ++network_calls_;
    scored = scorer_->score(model_id, prompt, candidate);
  } catch (...) {
    in_flight_.release();
    throw;
  }
  in_flight_.release();
  return LogprobRecord{model_id, hash, prompt, candidate, scored.logprob_sum, scored.token_count};
}

LogprobRecord LogprobBackend::resolve(const std::string& model_id, const std::string& prompt,
                                      const std::string& candidate) {
  const std::string hash = prompt_hash(model_id, prompt, candidate);
  if (auto hit = store_->find(hash)) return *hit;
  if (!scorer_) {
    throw Error(ErrorKind::CacheMiss,
                fmt::format("no offline record for prompt '{}' candidate '{}'", prompt, candidate));
  }

  std::promise<LogprobRecord> promise;
  std::shared_future<LogprobRecord> future;
  bool owner = false;
  {
    std::lock_guard lock(pending_mutex_);
    if (auto it = pending_.find(hash); it != pending_.end()) {
      future = it->second;
    } else {
      // Re-check under the lock: another thread may have finished meanwhile.
      if (auto hit = store_->find(hash)) return *hit;
      future = promise.get_future().share();
      pending_.emplace(hash, future);
      owner = true;
    }
  }
  if (owner) {
    try {
      auto record = score_remote(model_id, prompt, candidate, hash);
      store_->put(record);
      promise.set_value(record);
    } catch (...) {
      promise.set_exception(std::current_exception());
    }
    std::lock_guard lock(pending_mutex_);
    pending_.erase(hash);
  }
  return future.get();
}

void LogprobBackend::throw_cache_miss(const LogprobRequest& request) const {
  std::string missing;
  for (const auto& c : request.candidates) {
    if (!store_->find(prompt_hash(request.model_id, request.prompt, c))) {
      missing += fmt::format("\n  prompt='{}' candidate='{}'", request.prompt, c);
    }
  }
  throw Error(ErrorKind::CacheMiss, fmt::format("offline store lacks {} record(s):{}", request.model_id, missing));
}

std::vector<LogprobRecord> LogprobBackend::fetch_records(const LogprobRequest& request) {
  request.validate();
  if (!scorer_) {
    std::vector<LogprobRecord> out;
    for (const auto& c : request.candidates) {
      auto hit = store_->find(prompt_hash(request.model_id, request.prompt, c));
      if (!hit) throw_cache_miss(request);
      out.push_back(std::move(*hit));
    }
    return out;
  }
  std::vector<LogprobRecord> out;
  out.reserve(request.candidates.size());
  for (const auto& c : request.candidates) out.push_back(resolve(request.model_id, request.prompt, c));
  return out;
}

ProbVector LogprobBackend::fetch_label_probs(const LogprobRequest& request) {
  const auto records = fetch_records(request);
  std::vector<double> values;
  values.reserve(records.size());
  for (const auto& r : records) values.push_back(label_value(r));
  return softmax_from_logprobs(values);
}

std::vector<ProbVector> LogprobBackend::fetch_many(std::span<const LogprobRequest> requests) {
  for (const auto& r : requests) r.validate();
  if (scorer_) {
    // Collect distinct uncached continuations, then drain them with a bounded pool.
    std::vector<std::tuple<const std::string*, const std::string*, const std::string*>> work;
    std::set<std::string> queued;
    for (const auto& r : requests) {
      for (const auto& c : r.candidates) {
        auto hash = prompt_hash(r.model_id, r.prompt, c);
        if (store_->find(hash) || !queued.insert(std::move(hash)).second) continue;
        work.emplace_back(&r.model_id, &r.prompt, &c);
      }
    }
    if (!work.empty()) {
      std::atomic<std::size_t> next{0};
      std::exception_ptr first_error;
      std::mutex error_mutex;
      const std::size_t workers = std::min(config_.max_in_flight, work.size());
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
          for (std::size_t i = next++; i < work.size(); i = next++) {
            try {
              const auto& [model, prompt, cand] = work[i];
              resolve(*model, *prompt, *cand);
            } catch (...) {
              std::lock_guard lock(error_mutex);
              if (!first_error) first_error = std::current_exception();
            }
          }
        });
      }
      pool.clear();
      if (first_error) std::rethrow_exception(first_error);
    }
  }
  std::vector<ProbVector> out;
  out.reserve(requests.size());
  for (const auto& r : requests) out.push_back(fetch_label_probs(r));
  return out;
}

std::size_t export_records(LogprobBackend& backend, std::span<const LogprobRequest> requests, RecordStore& sink) {
  backend.fetch_many(requests);
  std::size_t written = 0;
  for (const auto& r : requests) {
    for (auto& record : backend.fetch_records(r)) {
      sink.put(std::move(record));
      ++written;
    }
  }
  return written;
}

}  // namespace tcal
