#pragma once

// Evaluation harness: acquires a ProbTriple per example, runs every requested
// scoring method, and computes the task metric, preference-bias diagnostics,
// flip accounting against the uncalibrated predictions, and robustness
// aggregates across templates or seeds.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tcal/backend.hpp"
#include "tcal/core.hpp"
#include "tcal/prompting.hpp"
#include "tcal/scoring.hpp"

namespace tcal {

// ---------------------------------------------------------------------------
// Metrics (percentages in [0, 100])

double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> gold);
/// Unweighted mean of per-class F1 over all num_labels classes; a class with
/// no gold and no predicted instances contributes F1 = 0.
double macro_f1(std::span<const std::size_t> predicted, std::span<const std::size_t> gold, std::size_t num_labels);
double compute_metric(MetricKind metric, std::span<const std::size_t> predicted, std::span<const std::size_t> gold,
                      std::size_t num_labels);

// ---------------------------------------------------------------------------
// Triple acquisition

struct ExampleTriple {
  ProbTriple triple;
  /// sha256 of the joint, premise-only and hypothesis-only prompts (empty for
  /// injected triples).
  std::array<std::string, 3> prompt_hashes;
};

class TripleSource {
 public:
  virtual ~TripleSource() = default;
  virtual std::vector<ExampleTriple> triples(const std::vector<Example>& examples) = 0;
  /// Content-free, domain or random-text distributions for one stream.
  virtual BaselineAux auxiliaries(Stream stream, Method method) = 0;
};

/// Renders the three prompts per example and asks the backend.
class PromptedTripleSource final : public TripleSource {
 public:
  PromptedTripleSource(const TaskSchema& schema, LogprobBackend& backend, FewShotContext context,
                       std::vector<Example> dc_corpus, std::size_t dc_samples, std::uint64_t dc_seed);

  std::vector<ExampleTriple> triples(const std::vector<Example>& examples) override;
  BaselineAux auxiliaries(Stream stream, Method method) override;

 private:
  std::vector<ProbVector> fetch(const std::vector<std::string>& prompts);

  const TaskSchema& schema_;
  LogprobBackend& backend_;
  FewShotContext context_;
  std::vector<Example> dc_corpus_;
  std::size_t dc_samples_;
  std::uint64_t dc_seed_;
};

/// Pre-computed triples (synthetic streams); auxiliaries default to uniform.
class InjectedTripleSource final : public TripleSource {
 public:
  explicit InjectedTripleSource(std::vector<ProbTriple> triples);
  void set_auxiliaries(Stream stream, BaselineAux aux);

  std::vector<ExampleTriple> triples(const std::vector<Example>& examples) override;
  BaselineAux auxiliaries(Stream stream, Method method) override;

 private:
  std::vector<ProbTriple> triples_;
  std::array<std::optional<BaselineAux>, 3> aux_;
};

// ---------------------------------------------------------------------------
// Runs and reports

struct RunSpec {
  std::string task_id;
  std::string template_id = "main";
  /// Method and, for composed, inner method. Auxiliaries are filled in by evaluate.
  std::vector<MethodConfig> methods;
  std::size_t n_shots = 0;
  std::vector<std::uint64_t> seeds;
  BackendConfig backend;
  double eps = kDefaultEps;
  std::size_t dc_samples = 20;
  std::uint64_t dc_seed = 0;

  void validate() const;
};

/// Parses "original,tc,bc+tc" into method configs.
std::vector<MethodConfig> parse_method_list(std::string_view list);

struct MethodResult {
  std::string name;
  MethodConfig config;
  std::vector<Prediction> predictions;
  double metric = 0.0;
};

struct BiasDiagnostics {
  std::size_t n = 0;
  /// Share of premise-only / hypothesis-only argmaxes on the negative label.
  double premise_negative_pct = 0.0;
  double hypothesis_negative_pct = 0.0;
  /// Joint-argmax errors, and the share of them that agree with the
  /// premise-only / hypothesis-only argmax. Absent when there are no errors.
  std::size_t joint_errors = 0;
  std::optional<double> premise_alignment_pct;
  std::optional<double> hypothesis_alignment_pct;
};

struct FlipAccounting {
  std::size_t original_errors = 0;
  std::size_t corrected = 0;          // original wrong, TC right
  std::size_t changed_but_wrong = 0;  // original wrong, TC wrong and different
  std::size_t newly_broken = 0;       // original right, TC wrong
  std::optional<double> corrected_pct;
  std::optional<double> broken_pct;
};

struct EvalReport {
  std::string task_id;
  std::string template_id;
  /// Dataset split the examples came from; empty when not known.
  std::string split;
  std::size_t n_shots = 0;
  std::optional<std::uint64_t> seed;
  MetricKind metric = MetricKind::Accuracy;
  std::size_t num_labels = 0;
  std::vector<std::optional<std::size_t>> gold;
  std::vector<ExampleTriple> triples;
  std::vector<MethodResult> methods;
  BiasDiagnostics diagnostics;
  std::optional<FlipAccounting> flips;
  /// Effective settings echoed into every output (eps, scoring rule, ...).
  std::vector<std::pair<std::string, std::string>> settings;

  const MethodResult* find(std::string_view method_name) const;
};

/// BC priors are estimated once over the whole example stream.
EvalReport evaluate(const RunSpec& run, const TaskSchema& schema, const std::vector<Example>& examples,
                    TripleSource& source);

BiasDiagnostics bias_diagnostics(const std::vector<Example>& examples, std::span<const ProbTriple> triples,
                                 const LabelSpace& label_space, std::size_t negative_label_index);

/// Needs "original" and "tc" results in the report.
FlipAccounting flip_accounting(const EvalReport& report);

struct MethodAggregate {
  std::string method;
  double mean = 0.0;
  /// Population standard deviation.
  double stddev = 0.0;
  std::size_t count = 0;
};

/// Requires at least two reports over the same method list.
std::vector<MethodAggregate> aggregate_robustness(std::span<const EvalReport> reports);

// ---------------------------------------------------------------------------
// Report files

/// One row per method x report.
void write_report_csv(std::span<const EvalReport> reports, const std::filesystem::path& path);
void write_audit_csv(const EvalReport& report, const std::filesystem::path& path);
void write_diagnostics_csv(std::span<const EvalReport> reports, const std::filesystem::path& path);
void write_aggregate_csv(std::span<const MethodAggregate> aggregates, const std::filesystem::path& path);
void write_summary_md(std::span<const EvalReport> reports, std::span<const MethodAggregate> aggregates,
                      const std::filesystem::path& path);

}  // namespace tcal
