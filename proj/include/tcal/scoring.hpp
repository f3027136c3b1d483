#pragma once

// Scoring rules: the uncalibrated probability, four prior-division baselines
// (contextual calibration, domain-conditional PMI, domain-context calibration,
// batch calibration), task calibration, and baseline-then-TC composition.

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "tcal/core.hpp"

namespace tcal {

/// Auxiliary distributions one baseline needs for a single input stream.
struct BaselineAux {
  std::vector<ProbVector> content_free;  // cc
  std::optional<ProbVector> domain;      // dcpmi
  std::vector<ProbVector> random;        // dc
  std::optional<ProbVector> prior;       // bc
};

enum class Stream { Joint = 0, PremiseOnly = 1, HypothesisOnly = 2 };

struct MethodConfig {
  Method method = Method::Original;
  /// Only for Method::Composed: one of cc, dcpmi, dc, bc.
  std::optional<Method> inner_method;
  /// Auxiliaries for the stand-alone baselines (joint stream).
  BaselineAux aux;
  /// Per-stream auxiliaries for Method::Composed, indexed by Stream.
  std::array<BaselineAux, 3> stream_aux;

  /// Throws ConfigError when the auxiliaries the method needs are missing.
  void validate(std::size_t num_labels) const;
  /// "tc", "bc", "bc+tc", ...
  std::string name() const;
};

ScoreVector score_original(const ProbTriple& triple);
ScoreVector score_cc(const ProbVector& p, std::span<const ProbVector> content_free, double eps = kDefaultEps);
/// Log-ratio form; argmax-equivalent to the plain ratio.
ScoreVector score_dcpmi(const ProbVector& p, const ProbVector& domain, double eps = kDefaultEps);
ScoreVector score_dc(const ProbVector& p, std::span<const ProbVector> random_probs, double eps = kDefaultEps);
ProbVector estimate_bc_prior(std::span<const ProbVector> batch);
ScoreVector score_bc(const ProbVector& p, const ProbVector& prior, double eps = kDefaultEps);

/// score_y = joint_y * log(joint_y^2 / (premise_y * hypothesis_y)), inputs clamped.
ScoreVector score_tc(const ProbTriple& triple, double eps = kDefaultEps);

/// Applies the inner baseline to each stream, renormalizes, then scores with TC.
ScoreVector score_composed(const ProbTriple& triple, const MethodConfig& config, double eps = kDefaultEps);

/// Dispatches on config.method.
ScoreVector score(const ProbTriple& triple, const MethodConfig& config, double eps = kDefaultEps);

/// Entrywise p / prior, renormalized: the shared body of CC, DC and BC.
ProbVector divide_by_prior(const ProbVector& p, const ProbVector& prior, double eps = kDefaultEps);
/// Entrywise arithmetic mean, renormalized.
ProbVector mean_distribution(std::span<const ProbVector> vectors);

}  // namespace tcal
