#include "tcal/prompting.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "tcal/rng.hpp"

namespace tcal {

std::string_view to_string(MetricKind metric) { return metric == MetricKind::Accuracy ? "accuracy" : "macro_f1"; }

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::NLI: return "nli";
    case TaskKind::Stance: return "stance";
    case TaskKind::Paraphrase: return "paraphrase";
    case TaskKind::Classification: return "classification";
  }
  return "unknown";
}

MetricKind parse_metric(std::string_view name) {
  if (name == "accuracy") return MetricKind::Accuracy;
  if (name == "macro_f1") return MetricKind::MacroF1;
  throw Error(ErrorKind::ConfigError, fmt::format("unknown metric '{}'", name));
}

TaskKind parse_task_kind(std::string_view name) {
  for (TaskKind k : {TaskKind::NLI, TaskKind::Stance, TaskKind::Paraphrase, TaskKind::Classification}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorKind::ConfigError, fmt::format("unknown task kind '{}'", name));
}

std::string_view to_string(RenderMode mode) {
  switch (mode) {
    case RenderMode::Joint: return "joint";
    case RenderMode::PremiseOnly: return "premise_only";
    case RenderMode::HypothesisOnly: return "hypothesis_only";
  }
  return "unknown";
}

namespace {

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_seam_punct(char c) { return c == '?' || c == ',' || c == '!' || c == ':' || c == ';' || c == '.'; }

std::string_view trim_left(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  return s;
}

void trim_right(std::string& s) {
  while (!s.empty() && is_space(s.back())) s.pop_back();
}

struct Piece {
  enum class Kind { Literal, Premise, Hypothesis } kind;
  std::string_view text;
};

std::vector<Piece> split_template(std::string_view tpl) {
  std::vector<Piece> pieces;
  while (!tpl.empty()) {
    const auto p = tpl.find(kPremiseSlot);
    const auto h = tpl.find(kHypothesisSlot);
    const auto next = std::min(p, h);
    if (next == std::string_view::npos) {
      pieces.push_back({Piece::Kind::Literal, tpl});
      break;
    }
    if (next > 0) pieces.push_back({Piece::Kind::Literal, tpl.substr(0, next)});
    if (next == p) {
      pieces.push_back({Piece::Kind::Premise, {}});
      tpl.remove_prefix(p + kPremiseSlot.size());
    } else {
      pieces.push_back({Piece::Kind::Hypothesis, {}});
      tpl.remove_prefix(h + kHypothesisSlot.size());
    }
  }
  return pieces;
}

// Appends `rest` after a slot that was left empty.
void join_after_empty_slot(std::string& out, std::string_view rest) {
  if (!rest.empty() && rest.front() == '.') rest.remove_prefix(1);
  trim_right(out);
  rest = trim_left(rest);
  if (out.empty()) {
    while (!rest.empty() && (is_seam_punct(rest.front()) || is_space(rest.front()))) rest.remove_prefix(1);
    out.append(rest);
  } else if (rest.empty()) {
    // Slot was the last piece before another slot; keep a separator.
    out.push_back(' ');
  } else if (is_seam_punct(rest.front())) {
    out.append(rest);
  } else {
    out.push_back(' ');
    out.append(rest);
  }
}

std::string fill_template(std::string_view tpl, const std::optional<std::string_view>& premise,
                          const std::optional<std::string_view>& hypothesis) {
  const auto pieces = split_template(tpl);
  std::string out;
  bool pending_empty = false;
  for (const auto& piece : pieces) {
    if (piece.kind == Piece::Kind::Literal) {
      if (pending_empty) {
        join_after_empty_slot(out, piece.text);
        pending_empty = false;
      } else if (!out.empty() && piece.text.starts_with('.') &&
                 std::string_view(".!?").find(out.back()) != std::string_view::npos) {
        // "{premise}. Hypothesis" with a premise that already ends a sentence.
        out.append(piece.text.substr(1));
      } else {
        out.append(piece.text);
      }
      continue;
    }
    const auto& value = piece.kind == Piece::Kind::Premise ? premise : hypothesis;
    if (value && !value->empty()) {
      if (pending_empty) {
        join_after_empty_slot(out, {});
        pending_empty = false;
      }
      out.append(*value);
    } else {
      pending_empty = true;
    }
  }
  if (pending_empty) trim_right(out);
  return out;
}

std::string with_context(const TaskSchema& schema, const FewShotContext& context, std::string query) {
  if (context.demonstrations.empty()) return query;
  std::string out;
  for (const auto& demo : context.demonstrations) {
    if (!demo.gold_label || *demo.gold_label >= schema.label_space.size()) {
      throw Error(ErrorKind::ConfigError, "few-shot demonstration without a valid gold label");
    }
    out += fill_template(schema.prompt_template, demo.premise, demo.hypothesis);
    out += schema.candidate(*demo.gold_label);
    out += '\n';
  }
  out += query;
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::istringstream in{std::string(text)};
  for (std::string tok; in >> tok;) tokens.push_back(std::move(tok));
  return tokens;
}

}  // namespace

void TaskSchema::validate() const {
  if (task_id.empty()) throw Error(ErrorKind::TemplateError, "schema without task_id");
  if (count_occurrences(prompt_template, kPremiseSlot) != 1 ||
      count_occurrences(prompt_template, kHypothesisSlot) != 1) {
    throw Error(
        ErrorKind::TemplateError,
        fmt::format("{}/{}: template must contain {{premise}} and {{hypothesis}} exactly once", task_id, template_id));
  }
  if (domain_string.empty()) {
    throw Error(ErrorKind::TemplateError, fmt::format("{}/{}: empty domain string", task_id, template_id));
  }
  if (!std::string_view(prompt_template).ends_with(domain_string)) {
    throw Error(ErrorKind::TemplateError,
                fmt::format("{}/{}: template must end with its answer cue '{}'", task_id, template_id, domain_string));
  }
  if ((metric == MetricKind::MacroF1) != (kind == TaskKind::Stance)) {
    throw Error(ErrorKind::ConfigError,
                fmt::format("{}/{}: macro_f1 is the metric for stance tasks only", task_id, template_id));
  }
  if (negative_label >= label_space.size()) {
    throw Error(ErrorKind::ConfigError, fmt::format("{}/{}: negative label out of range", task_id, template_id));
  }
}

std::string TaskSchema::candidate(std::size_t label) const { return " " + label_space.verbalizer(label); }

std::vector<std::string> TaskSchema::candidates() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < label_space.size(); ++i) out.push_back(candidate(i));
  return out;
}

std::string render(const TaskSchema& schema, const Example& example, RenderMode mode, const FewShotContext& context) {
  switch (mode) {
    case RenderMode::Joint:
      if (example.premise.empty() && example.hypothesis.empty()) {
        throw Error(ErrorKind::EmptyInput, "example has neither premise nor hypothesis");
      }
      return with_context(schema, context, fill_template(schema.prompt_template, example.premise, example.hypothesis));
    case RenderMode::PremiseOnly:
      if (example.premise.empty()) throw Error(ErrorKind::EmptyInput, "premise-only render of an empty premise");
      return with_context(schema, context, fill_template(schema.prompt_template, example.premise, std::nullopt));
    case RenderMode::HypothesisOnly:
      if (example.hypothesis.empty()) {
        throw Error(ErrorKind::EmptyInput, "hypothesis-only render of an empty hypothesis");
      }
      return with_context(schema, context, fill_template(schema.prompt_template, std::nullopt, example.hypothesis));
  }
  throw Error(ErrorKind::ConfigError, "unknown render mode");
}

std::vector<std::string> content_free_prompts(const TaskSchema& schema, const FewShotContext& context) {
  return content_free_prompts(schema, RenderMode::Joint, context);
}

std::vector<std::string> content_free_prompts(const TaskSchema& schema, RenderMode mode,
                                              const FewShotContext& context) {
  std::vector<std::string> out;
  for (std::string_view token : {"N/A", "[MASK]", ""}) {
    const std::optional<std::string_view> p =
        mode == RenderMode::HypothesisOnly ? std::nullopt : std::optional<std::string_view>(token);
    const std::optional<std::string_view> h =
        mode == RenderMode::PremiseOnly ? std::nullopt : std::optional<std::string_view>(token);
    out.push_back(with_context(schema, context, fill_template(schema.prompt_template, p, h)));
  }
  return out;
}

std::string domain_prompt(const TaskSchema& schema) {
  if (schema.domain_string.empty()) throw Error(ErrorKind::TemplateError, "schema has no domain string");
  return schema.domain_string;
}

std::vector<std::string> random_text_prompts(const TaskSchema& schema, const std::vector<Example>& corpus,
                                             std::size_t k, std::uint64_t seed, RenderMode mode,
                                             const FewShotContext& context) {
  if (corpus.empty()) throw Error(ErrorKind::EmptyCorpus, "random text needs a non-empty corpus");
  if (k == 0) throw Error(ErrorKind::ConfigError, "random text count must be at least 1");

  std::vector<std::string> premise_pool, hypothesis_pool;
  std::size_t premise_tokens = 0, hypothesis_tokens = 0;
  for (const auto& ex : corpus) {
    auto p = tokenize(ex.premise);
    auto h = tokenize(ex.hypothesis);
    premise_tokens += p.size();
    hypothesis_tokens += h.size();
    premise_pool.insert(premise_pool.end(), p.begin(), p.end());
    hypothesis_pool.insert(hypothesis_pool.end(), h.begin(), h.end());
  }
  const auto mean_len = [&](std::size_t total) {
    return static_cast<std::size_t>(std::llround(static_cast<double>(total) / static_cast<double>(corpus.size())));
  };
  const std::size_t premise_len = mean_len(premise_tokens);
  const std::size_t hypothesis_len = mean_len(hypothesis_tokens);

  SeededRng rng(seed);
  auto draw = [&rng](const std::vector<std::string>& pool, std::size_t len) {
    std::string text;
    if (pool.empty()) return text;
    for (std::size_t i = 0; i < len; ++i) {
      if (i) text.push_back(' ');
      text += pool[rng.uniform_index(pool.size())];
    }
    return text;
  };

  std::vector<std::string> prompts;
  prompts.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    // Both slots are always drawn so the stream does not depend on mode.
    const std::string p = draw(premise_pool, premise_len);
    const std::string h = draw(hypothesis_pool, hypothesis_len);
    const std::optional<std::string_view> ps =
        mode == RenderMode::HypothesisOnly ? std::nullopt : std::optional<std::string_view>(p);
    const std::optional<std::string_view> hs =
        mode == RenderMode::PremiseOnly ? std::nullopt : std::optional<std::string_view>(h);
    prompts.push_back(with_context(schema, context, fill_template(schema.prompt_template, ps, hs)));
  }
  return prompts;
}

FewShotContext sample_few_shot(const std::vector<Example>& train, std::size_t n, std::uint64_t seed) {
  if (n < 1 || n > 4) throw Error(ErrorKind::ConfigError, fmt::format("shot count {} outside 1..4", n));
  if (train.size() < n) {
    throw Error(ErrorKind::InsufficientData,
                fmt::format("need {} training examples for {}-shot context, have {}", n, n, train.size()));
  }
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  SeededRng rng(seed);
  // Partial Fisher-Yates: the first n slots are a uniform sample without replacement.
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(order.size() - i));
    std::swap(order[i], order[j]);
  }
  FewShotContext ctx;
  ctx.seed = seed;
  ctx.n_shots = n;
  for (std::size_t i = 0; i < n; ++i) ctx.demonstrations.push_back(train[order[i]]);
  return ctx;
}

}  // namespace tcal
