#pragma once

// Prompt rendering for the three decomposed inputs (joint, premise-only,
// hypothesis-only), the auxiliary prompts the baselines condition on, and
// seeded few-shot context sampling.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tcal/core.hpp"

namespace tcal {

enum class MetricKind { Accuracy, MacroF1 };
enum class TaskKind { NLI, Stance, Paraphrase, Classification };

std::string_view to_string(MetricKind metric);
std::string_view to_string(TaskKind kind);
MetricKind parse_metric(std::string_view name);
TaskKind parse_task_kind(std::string_view name);

inline constexpr std::string_view kPremiseSlot = "{premise}";
inline constexpr std::string_view kHypothesisSlot = "{hypothesis}";

struct TaskSchema {
  std::string task_id;
  std::string template_id;
  TaskKind kind;
  /// Contains {premise} and {hypothesis} once each and ends with the answer cue.
  std::string prompt_template;
  LabelSpace label_space;
  MetricKind metric;
  /// Conditioning text for DCPMI; the template's answer line.
  std::string domain_string;
  /// Label index treated as "not entailed" by the bias diagnostics.
  std::size_t negative_label = 1;

  /// Throws TemplateError / ConfigError on a malformed schema.
  void validate() const;
  /// Continuation scored for label i: the verbalizer after one space.
  std::string candidate(std::size_t label) const;
  std::vector<std::string> candidates() const;
};

struct Example {
  std::string premise;
  std::string hypothesis;
  std::optional<std::size_t> gold_label;

  bool operator==(const Example&) const = default;
};

struct FewShotContext {
  std::vector<Example> demonstrations;
  std::uint64_t seed = 0;
  std::size_t n_shots = 0;
};

enum class RenderMode { Joint, PremiseOnly, HypothesisOnly };
std::string_view to_string(RenderMode mode);

/// Fills the template for one mode. A slot that is left out is replaced by the
/// empty string and the surrounding scaffold is tidied: a period right after
/// the slot is dropped, whitespace at the seam is collapsed, and punctuation
/// left dangling at the start is stripped. Demonstrations go first, one per
/// line, each as a joint render followed by its gold verbalizer.
std::string render(const TaskSchema& schema, const Example& example, RenderMode mode,
                   const FewShotContext& context = {});

/// Joint renders with both slots set to "N/A", "[MASK]" and "".
std::vector<std::string> content_free_prompts(const TaskSchema& schema, const FewShotContext& context = {});
/// Content-free prompts for a single-component stream (the other slot is dropped).
std::vector<std::string> content_free_prompts(const TaskSchema& schema, RenderMode mode,
                                              const FewShotContext& context = {});

std::string domain_prompt(const TaskSchema& schema);

/// k joint renders whose slots are bag-of-words samples (with replacement)
/// from the corpus token pools, sized to the mean token length of each slot.
std::vector<std::string> random_text_prompts(const TaskSchema& schema, const std::vector<Example>& corpus,
                                             std::size_t k, std::uint64_t seed, RenderMode mode = RenderMode::Joint,
                                             const FewShotContext& context = {});

FewShotContext sample_few_shot(const std::vector<Example>& train, std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Template registry

class TemplateRegistry {
 public:
  /// Main-experiment templates for every task plus the five robustness
  /// variants for rte, cb, vast and paws.
  static TemplateRegistry builtin();
  /// One JSON object per task document; either a JSON array or one object per
  /// line. Fields: task_id, template_id, kind, template, labels, verbalizers,
  /// metric, domain_string, negative_label (optional).
  static TemplateRegistry load(const std::filesystem::path& path);

  void add(TaskSchema schema);
  /// template_id "main" is the main-experiment template; "1".."5" are the
  /// robustness variants.
  const TaskSchema& get(std::string_view task_id, std::string_view template_id = "main") const;
  std::vector<std::string> template_ids(std::string_view task_id) const;
  const std::vector<TaskSchema>& all() const noexcept { return schemas_; }

 private:
  std::vector<TaskSchema> schemas_;
};

}  // namespace tcal
