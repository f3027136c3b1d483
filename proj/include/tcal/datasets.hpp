#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tcal/backend.hpp"
#include "tcal/core.hpp"
#include "tcal/prompting.hpp"

namespace tcal {

enum class DatasetFormat { Tsv, Csv, Jsonl };

/// How one task's raw files map onto Examples.
///
/// Manifest documents are JSON:
///   {"task_id": "rte", "format": "tsv",
///    "field_map": {"sentence1": "premise", "sentence2": "hypothesis", "label": "label"},
///    "label_map": {"entailment": 0, "not_entailment": 1},
///    "splits": {"validation": "RTE/dev.tsv"},
///    "expected_counts": {"validation": 277}}
/// Relative split paths resolve against the manifest's directory unless a
/// data root is given.
struct DatasetManifest {
  std::string task_id;
  DatasetFormat format = DatasetFormat::Tsv;
  /// source column -> "premise" | "hypothesis" | "label"
  std::map<std::string, std::string> field_map;
  std::map<std::string, std::size_t> label_map;
  std::map<std::string, std::filesystem::path> split_paths;
  std::map<std::string, std::size_t> expected_counts;
  /// The split evaluated by default ("validation" for GLUE-style tasks).
  std::string eval_split = "validation";
  std::optional<std::string> train_split;

  void validate() const;
  static DatasetManifest load(const std::filesystem::path& path,
                              const std::optional<std::filesystem::path>& data_root = std::nullopt);
};

/// Examples in file order. Raises LabelMapError / ParseError naming the file line,
/// and CountMismatch when expected_counts disagrees.
std::vector<Example> load_split(const DatasetManifest& manifest, const std::string& split);

/// One JSON object per line: {"premise", "hypothesis", "label"} with label an
/// index or null.
void save_examples(const std::vector<Example>& examples, const std::filesystem::path& path);
std::vector<Example> load_examples(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Synthetic preference-bias streams

struct SyntheticConfig {
  /// Strength of the confound in the premise-only / hypothesis-only streams.
  double beta_premise = 0.0;
  double beta_hypothesis = 0.9;
  /// Weight of the truth-peaked component in the joint distribution.
  double signal = 0.4;
  double peak_mass = 0.9;
  std::size_t num_labels = 2;
  std::size_t n = 10000;
  std::uint64_t seed = 7;

  void validate() const;
};

struct SyntheticData {
  TaskSchema schema;
  std::vector<Example> examples;
  std::vector<std::size_t> confounds;
  std::vector<ProbTriple> triples;
};

/// peaked(k, m): mass m on label k, the rest spread evenly.
/// joint      = s * peaked(gold) + (1 - s) * peaked(confound)
/// premise    = beta_p * peaked(confound) + (1 - beta_p) * uniform
/// hypothesis = beta_h * peaked(confound) + (1 - beta_h) * uniform
/// Gold and confound labels are independent uniform draws.
SyntheticData generate_synthetic(const SyntheticConfig& config);

ProbVector peaked_distribution(std::size_t label, double mass, std::size_t num_labels);

/// Schema used for synthetic streams with the given label count.
TaskSchema synthetic_schema(std::size_t num_labels);

/// Records that let the prompted pipeline reproduce the synthetic triples:
/// the three renders of every example plus uniform answers for the
/// content-free, domain and random-text prompts (k prompts, given seed).
std::unique_ptr<RecordStore> synthetic_records(const SyntheticData& data, const std::string& model_id,
                                               std::size_t dc_samples, std::uint64_t dc_seed);

}  // namespace tcal
