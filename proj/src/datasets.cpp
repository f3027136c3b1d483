#include "tcal/datasets.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace tcal {

namespace {

using json = nlohmann::json;

DatasetFormat parse_format(const std::string& name) {
  if (name == "tsv") return DatasetFormat::Tsv;
  if (name == "csv") return DatasetFormat::Csv;
  if (name == "jsonl") return DatasetFormat::Jsonl;
  throw Error(ErrorKind::ConfigError, fmt::format("unknown dataset format '{}'", name));
}

std::vector<std::string> split_tsv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

// RFC 4180 records; quoted fields may span lines. Returns false at EOF.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line_no) {
  fields.clear();
  std::string field;
  bool quoted = false, any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line_no;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      ++line_no;
      if (!field.empty() && field.back() == '\r') field.pop_back();
      fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(c);
    }
  }
  if (quoted) throw Error(ErrorKind::ParseError, fmt::format("line {}: unterminated quoted field", line_no + 1));
  if (!any) return false;
  ++line_no;
  if (!field.empty() && field.back() == '\r') field.pop_back();
  fields.push_back(std::move(field));
  return true;
}

struct RowMapper {
  const DatasetManifest& manifest;
  std::string premise_col, hypothesis_col, label_col;

  explicit RowMapper(const DatasetManifest& m) : manifest(m) {
    for (const auto& [col, role] : m.field_map) {
      if (role == "premise") premise_col = col;
      if (role == "hypothesis") hypothesis_col = col;
      if (role == "label") label_col = col;
    }
  }

  std::size_t label_index(const std::string& raw, std::size_t row) const {
    auto it = manifest.label_map.find(raw);
    if (it == manifest.label_map.end()) {
      throw Error(ErrorKind::LabelMapError,
                  fmt::format("{}: line {}: unmapped label '{}'", manifest.task_id, row, raw));
    }
    return it->second;
  }
};

}  // namespace

void DatasetManifest::validate() const {
  if (task_id.empty()) throw Error(ErrorKind::ConfigError, "manifest without task_id");
  for (const char* role : {"premise", "hypothesis", "label"}) {
    bool found = false;
    for (const auto& [col, r] : field_map) found = found || r == role;
    if (!found) throw Error(ErrorKind::ConfigError, fmt::format("{}: field_map has no {} column", task_id, role));
  }
  if (label_map.empty()) throw Error(ErrorKind::ConfigError, fmt::format("{}: empty label_map", task_id));
  if (split_paths.empty()) throw Error(ErrorKind::ConfigError, fmt::format("{}: no splits", task_id));
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& path,
                                      const std::optional<std::filesystem::path>& data_root) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, fmt::format("cannot open manifest {}", path.string()));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, fmt::format("{}: {}", path.string(), e.what()));
  }
  DatasetManifest m;
  try {
    m.task_id = doc.at("task_id").get<std::string>();
    m.format = parse_format(doc.value("format", std::string("tsv")));
    m.field_map = doc.at("field_map").get<std::map<std::string, std::string>>();
    m.label_map = doc.at("label_map").get<std::map<std::string, std::size_t>>();
    const auto base = data_root ? *data_root : path.parent_path();
    for (const auto& [split, rel] : doc.at("splits").items()) {
      std::filesystem::path p = rel.get<std::string>();
      m.split_paths[split] = p.is_absolute() ? p : base / p;
    }
    if (doc.contains("expected_counts")) {
      m.expected_counts = doc["expected_counts"].get<std::map<std::string, std::size_t>>();
    }
    m.eval_split = doc.value("eval_split", std::string("validation"));
    if (doc.contains("train_split")) m.train_split = doc["train_split"].get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, fmt::format("{}: {}", path.string(), e.what()));
  }
  m.validate();
  return m;
}

std::vector<Example> load_split(const DatasetManifest& manifest, const std::string& split) {
  manifest.validate();
  auto it = manifest.split_paths.find(split);
  if (it == manifest.split_paths.end()) {
    throw Error(ErrorKind::ConfigError, fmt::format("{}: no split '{}'", manifest.task_id, split));
  }
  std::ifstream in(it->second, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, fmt::format("cannot open {}", it->second.string()));

  const RowMapper mapper(manifest);
  std::vector<Example> examples;

  if (manifest.format == DatasetFormat::Jsonl) {
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
      ++row;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      json doc;
      try {
        doc = json::parse(line);
        auto text = [&](const std::string& col) {
          const auto& v = doc.at(col);
          return v.is_null() ? std::string() : v.get<std::string>();
        };
        const auto& raw = doc.at(mapper.label_col);
        const std::string label = raw.is_string() ? raw.get<std::string>() : raw.dump();
        examples.push_back({text(mapper.premise_col), text(mapper.hypothesis_col), mapper.label_index(label, row)});
      } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, fmt::format("{}: line {}: {}", it->second.string(), row, e.what()));
      }
    }
  } else {
    std::vector<std::string> header, fields;
    std::size_t line_no = 0;
    auto next = [&](std::vector<std::string>& out) {
      if (manifest.format == DatasetFormat::Csv) return read_csv_record(in, out, line_no);
      std::string line;
      if (!std::getline(in, line)) return false;
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      out = split_tsv(line);
      return true;
    };
    if (!next(header)) throw Error(ErrorKind::ParseError, fmt::format("{}: empty file", it->second.string()));
    auto column = [&](const std::string& name) {
      for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
      }
      throw Error(ErrorKind::ParseError, fmt::format("{}: header lacks column '{}'", it->second.string(), name));
    };
    const std::size_t pc = column(mapper.premise_col);
    const std::size_t hc = column(mapper.hypothesis_col);
    const std::size_t lc = column(mapper.label_col);
    while (next(fields)) {
      const std::size_t row = line_no;
      if (fields.size() == 1 && fields[0].empty()) continue;
      if (fields.size() != header.size()) {
        throw Error(ErrorKind::ParseError, fmt::format("{}: line {}: expected {} fields, found {}", it->second.string(),
                                                       row, header.size(), fields.size()));
      }
      examples.push_back({fields[pc], fields[hc], mapper.label_index(fields[lc], row)});
    }
  }

  if (auto exp = manifest.expected_counts.find(split); exp != manifest.expected_counts.end()) {
    if (exp->second != examples.size()) {
      throw Error(ErrorKind::CountMismatch, fmt::format("{}/{}: expected {} examples, found {}", manifest.task_id,
                                                        split, exp->second, examples.size()));
    }
  }
  return examples;
}

void save_examples(const std::vector<Example>& examples, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, fmt::format("cannot write {}", path.string()));
  for (const auto& ex : examples) {
    nlohmann::ordered_json doc;
    doc["premise"] = ex.premise;
    doc["hypothesis"] = ex.hypothesis;
    doc["label"] = ex.gold_label ? json(*ex.gold_label) : json(nullptr);
    out << doc.dump() << '\n';
  }
}

std::vector<Example> load_examples(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, fmt::format("cannot open {}", path.string()));
  std::vector<Example> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    try {
      const auto doc = json::parse(line);
      Example ex{doc.at("premise").get<std::string>(), doc.at("hypothesis").get<std::string>(), std::nullopt};
      if (!doc.at("label").is_null()) ex.gold_label = doc["label"].get<std::size_t>();
      out.push_back(std::move(ex));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::ParseError, fmt::format("{}: line {}: {}", path.string(), row, e.what()));
    }
  }
  return out;
}

}  // namespace tcal
