#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "tcal/backend.hpp"
#include "tcal/hashing.hpp"

namespace tcal {

using ordered_json = nlohmann::ordered_json;

std::string RecordStore::serialize(const LogprobRecord& r) {
  ordered_json doc;
  doc["model_id"] = r.model_id;
  doc["prompt_hash"] = r.prompt_hash;
  doc["prompt"] = r.prompt;
  doc["candidate"] = r.candidate;
  doc["logprob"] = r.logprob;
  doc["token_count"] = r.token_count;
  return doc.dump();
}

LogprobRecord RecordStore::parse_line(std::string_view line, std::size_t line_no) {
  auto fail = [line_no](const std::string& why) {
    return Error(ErrorKind::ParseError, fmt::format("record line {}: {}", line_no, why));
  };
  ordered_json doc;
  try {
    doc = ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw fail(e.what());
  }
  if (!doc.is_object()) throw fail("not a JSON object");
  LogprobRecord r;
  try {
    r.model_id = doc.at("model_id").get<std::string>();
    r.prompt_hash = doc.at("prompt_hash").get<std::string>();
    r.prompt = doc.at("prompt").get<std::string>();
    r.candidate = doc.at("candidate").get<std::string>();
    r.logprob = doc.at("logprob").get<double>();
    r.token_count = doc.at("token_count").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw fail(e.what());
  }
  if (!std::isfinite(r.logprob)) throw fail("non-finite logprob");
  if (r.token_count < 1) throw fail("token_count must be at least 1");
  if (r.prompt_hash != prompt_hash(r.model_id, r.prompt, r.candidate)) {
    throw fail("prompt_hash does not match (model_id, prompt, candidate)");
  }
  return r;
}

std::unique_ptr<RecordStore> RecordStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, fmt::format("cannot open record store {}", path.string()));
  auto store = std::make_unique<RecordStore>();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      auto record = parse_line(line, line_no);
      store->records_.insert_or_assign(record.prompt_hash, std::move(record));
    } catch (const Error& e) {
      throw Error(ErrorKind::ParseError, fmt::format("{}: {}", path.string(), e.what()));
    }
  }
  return store;
}

std::unique_ptr<RecordStore> load_offline(const std::filesystem::path& path) { return RecordStore::load(path); }

std::optional<LogprobRecord> RecordStore::find(const std::string& hash) const {
  std::shared_lock lock(mutex_);
  auto it = records_.find(hash);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

void RecordStore::put(LogprobRecord record) {
  std::unique_lock lock(mutex_);
  if (log_path_) {
    std::ofstream out(*log_path_, std::ios::binary | std::ios::app);
    if (!out) throw Error(ErrorKind::IoError, fmt::format("cannot append to {}", log_path_->string()));
    out << serialize(record) << '\n';
  }
  records_.insert_or_assign(record.prompt_hash, std::move(record));
}

std::size_t RecordStore::size() const {
  std::shared_lock lock(mutex_);
  return records_.size();
}

std::vector<LogprobRecord> RecordStore::records() const {
  std::shared_lock lock(mutex_);
  std::vector<LogprobRecord> out;
  out.reserve(records_.size());
  for (const auto& [hash, record] : records_) out.push_back(record);
  return out;
}

void RecordStore::attach(const std::filesystem::path& path) {
  std::unique_lock lock(mutex_);
  log_path_ = path;
}

void RecordStore::save(const std::filesystem::path& path) const {
  std::shared_lock lock(mutex_);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, fmt::format("cannot write {}", tmp.string()));
    for (const auto& [hash, record] : records_) out << serialize(record) << '\n';
    if (!out) throw Error(ErrorKind::IoError, fmt::format("write failed for {}", tmp.string()));
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace tcal
