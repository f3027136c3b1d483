#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "tcal/prompting.hpp"

namespace tcal {

namespace {

using json = nlohmann::json;

const std::vector<std::string> kNli2 = {"entailment", "not_entailment"};
const std::vector<std::string> kNli3 = {"entailment", "contradiction", "neutral"};
const std::vector<std::string> kStance2 = {"favor", "against"};
const std::vector<std::string> kStance3 = {"favor", "against", "neutral"};
const std::vector<std::string> kPara2 = {"duplicate", "not_duplicate"};

constexpr const char* kEntails = "{premise} entails {hypothesis}. ";
constexpr const char* kHypothesisTag = "{premise}. Hypothesis: {hypothesis}. ";
constexpr const char* kQuestionTag = "{premise}. Question: {hypothesis}. ";
constexpr const char* kDoesEntail = "Does the premise {premise} entail the hypothesis {hypothesis}? ";
constexpr const char* kStanceOf = "What is the stance of {premise} on {hypothesis}? ";
constexpr const char* kSentences = "Sentence 1: {premise}. Sentence 2: {hypothesis}. ";

constexpr const char* kTF = "true or false? Answer:";
constexpr const char* kTFN = "true, false or neither? Answer:";
constexpr const char* kFAN = "favor, against or neutral? Answer:";
constexpr const char* kDupTF = "Duplicate: true or false? Answer:";

TaskSchema make(std::string task, std::string id, TaskKind kind, std::string body, std::string cue,
                std::vector<std::string> labels, std::vector<std::string> verbalizers) {
  TaskSchema s{std::move(task),
               std::move(id),
               kind,
               body + cue,
               LabelSpace(std::move(labels), std::move(verbalizers)),
               kind == TaskKind::Stance ? MetricKind::MacroF1 : MetricKind::Accuracy,
               std::move(cue),
               1};
  s.validate();
  return s;
}

TaskSchema from_json(const json& doc) {
  try {
    TaskSchema s{doc.at("task_id").get<std::string>(),
                 doc.value("template_id", std::string("main")),
                 parse_task_kind(doc.at("kind").get<std::string>()),
                 doc.at("template").get<std::string>(),
                 LabelSpace(doc.at("labels").get<std::vector<std::string>>(),
                            doc.at("verbalizers").get<std::vector<std::string>>()),
                 parse_metric(doc.at("metric").get<std::string>()),
                 doc.at("domain_string").get<std::string>(),
                 doc.value("negative_label", std::size_t{1})};
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, fmt::format("task document: {}", e.what()));
  }
}

}  // namespace

TemplateRegistry TemplateRegistry::builtin() {
  TemplateRegistry r;
  const auto T = TaskKind::NLI;
  const auto S = TaskKind::Stance;
  const auto P = TaskKind::Paraphrase;
  const auto C = TaskKind::Classification;

  // Main templates.
  r.add(make("rte", "main", T, kEntails, kTF, kNli2, {"true", "false"}));
  r.add(make("wnli", "main", T, kEntails, kTF, kNli2, {"true", "false"}));
  r.add(make("scitail", "main", T, kEntails, kTF, kNli2, {"true", "false"}));
  r.add(make("cb", "main", T, kHypothesisTag, kTFN, kNli3, {"true", "false", "neither"}));
  r.add(make("mnli", "main", T, kHypothesisTag, kTFN, kNli3, {"true", "false", "neither"}));
  r.add(make("qnli", "main", T, "{premise} contains the answer to {hypothesis}. ", kTF, kNli2, {"true", "false"}));
  r.add(make("perspectrum", "main", S, kStanceOf, kFAN, kStance2, {"favor", "against"}));
  r.add(make("ibm30k", "main", S, kStanceOf, kFAN, kStance2, {"favor", "against"}));
  r.add(make("ezstance", "main", S, kStanceOf, kFAN, kStance3, {"favor", "against", "neutral"}));
  r.add(
      make("iam", "main", S, "{premise} gives a favorable answer to {hypothesis}? ", kTF, kStance2, {"true", "false"}));
  r.add(make("vast", "main", S, kStanceOf, kFAN, kStance3, {"favor", "against", "neutral"}));
  r.add(make("paws", "main", P, kSentences, kDupTF, kPara2, {"true", "false"}));
  r.add(make("qqp", "main", P, "Question 1: {premise}. Question 2: {hypothesis}. ", kDupTF, kPara2, {"true", "false"}));
  for (const char* task : {"sst2", "offenseval", "hateval", "hatespeech18"}) {
    r.add(make(task, "main", C, kEntails, kTF, kNli2, {"true", "false"}));
  }

  // Robustness variants 1-5 for rte, cb, vast and paws.
  r.add(make("rte", "1", T, kEntails, kTF, kNli2, {"true", "false"}));
  r.add(make("rte", "2", T, kHypothesisTag, kTF, kNli2, {"true", "false"}));
  r.add(make("rte", "3", T, kQuestionTag, kTF, kNli2, {"true", "false"}));
  r.add(make("rte", "4", T, kQuestionTag, "entailment or contradiction? Answer:", kNli2,
             {"entailment", "contradiction"}));
  r.add(make("rte", "5", T, kDoesEntail, "yes or no? Answer:", kNli2, {"yes", "no"}));

  r.add(make("cb", "1", T, kEntails, kTFN, kNli3, {"true", "false", "neither"}));
  r.add(make("cb", "2", T, kHypothesisTag, kTFN, kNli3, {"true", "false", "neither"}));
  r.add(make("cb", "3", T, kQuestionTag, kTFN, kNli3, {"true", "false", "neither"}));
  r.add(make("cb", "4", T, kQuestionTag, "entailment, contradiction or neutral? Answer:", kNli3,
             {"entailment", "contradiction", "neutral"}));
  r.add(make("cb", "5", T, kDoesEntail, "yes, no or neither? Answer:", kNli3, {"yes", "no", "neither"}));

  r.add(make("vast", "1", S, kStanceOf, kFAN, kStance3, {"favor", "against", "neutral"}));
  r.add(make("vast", "2", S, "What is the attitude of the sentence {premise} towards {hypothesis}? ", kFAN, kStance3,
             {"favor", "against", "neutral"}));
  r.add(make("vast", "3", S, "Does {premise} support {hypothesis}? ", kTFN, kStance3, {"true", "false", "neither"}));
  r.add(make("vast", "4", S, "{premise} supports {hypothesis}. ", kTFN, kStance3, {"true", "false", "neither"}));
  r.add(make("vast", "5", S, "Sentence: {premise}. Target: {hypothesis}. ",
             "Stance: favor, against or neutral? Answer:", kStance3, {"favor", "against", "neutral"}));

  r.add(make("paws", "1", P, kSentences, kDupTF, kPara2, {"true", "false"}));
  r.add(make("paws", "2", P, std::string(kSentences) + "Is Sentence 2 the duplicate of Sentence 1? ", kTF, kPara2,
             {"true", "false"}));
  r.add(make("paws", "3", P, "Text 1: {premise}. Text 2: {hypothesis}. ", kDupTF, kPara2, {"true", "false"}));
  r.add(make("paws", "4", P, kSentences, "Equivalence: true or false? Answer:", kPara2, {"true", "false"}));
  r.add(make("paws", "5", P, kSentences, "Duplicate: yes or no? Answer:", kPara2, {"yes", "no"}));
  return r;
}

TemplateRegistry TemplateRegistry::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, fmt::format("cannot open template registry {}", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  TemplateRegistry r;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    json docs;
    try {
      docs = json::parse(text);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::ParseError, fmt::format("{}: {}", path.string(), e.what()));
    }
    for (const auto& doc : docs) r.add(from_json(doc));
    return r;
  }
  std::istringstream lines(text);
  std::size_t line_no = 0;
  for (std::string line; std::getline(lines, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::ParseError, fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
    r.add(from_json(doc));
  }
  return r;
}

void TemplateRegistry::add(TaskSchema schema) {
  schema.validate();
  for (auto& existing : schemas_) {
    if (existing.task_id == schema.task_id && existing.template_id == schema.template_id) {
      existing = std::move(schema);
      return;
    }
  }
  schemas_.push_back(std::move(schema));
}

const TaskSchema& TemplateRegistry::get(std::string_view task_id, std::string_view template_id) const {
  for (const auto& s : schemas_) {
    if (s.task_id == task_id && s.template_id == template_id) return s;
  }
  throw Error(ErrorKind::ConfigError, fmt::format("no template '{}' for task '{}'", template_id, task_id));
}

std::vector<std::string> TemplateRegistry::template_ids(std::string_view task_id) const {
  std::vector<std::string> ids;
  for (const auto& s : schemas_) {
    if (s.task_id == task_id) ids.push_back(s.template_id);
  }
  return ids;
}

}  // namespace tcal
