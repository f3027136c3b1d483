#pragma once

// Probability-vector arithmetic, label spaces and prediction types shared by
// every other part of the engine. All types here are immutable once built.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tcal {

enum class ErrorKind {
  InvalidLogprob,
  InvalidDimension,
  InvalidProbability,
  EmptyBatch,
  ConfigError,
  EmptyInput,
  EmptyCorpus,
  InsufficientData,
  TemplateError,
  BackendUnavailable,
  CapabilityError,
  CacheMiss,
  ParseError,
  LabelMapError,
  CountMismatch,
  IoError,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Floor applied before any log or division.
inline constexpr double kDefaultEps = 1e-12;

class LabelSpace {
 public:
  LabelSpace(std::vector<std::string> labels, std::vector<std::string> verbalizers);

  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<std::string>& verbalizers() const noexcept { return verbalizers_; }
  const std::string& label(std::size_t i) const { return labels_.at(i); }
  const std::string& verbalizer(std::size_t i) const { return verbalizers_.at(i); }
  // Returns size() when the label is unknown.
  std::size_t index_of(std::string_view label) const noexcept;

  bool operator==(const LabelSpace&) const = default;

 private:
  std::vector<std::string> labels_;
  std::vector<std::string> verbalizers_;
};

/// A normalized distribution over C labels.
class ProbVector {
 public:
  /// Validates entries in [0, 1] summing to 1 within 1e-9.
  explicit ProbVector(std::vector<double> values);

  /// Divides by the sum. Entries must be finite and non-negative with a
  /// positive total.
  static ProbVector normalized(std::vector<double> weights);
  static ProbVector uniform(std::size_t size);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }

  bool operator==(const ProbVector&) const = default;

 private:
  std::vector<double> values_;
};

struct ProbTriple {
  ProbVector joint;
  ProbVector premise_only;
  ProbVector hypothesis_only;

  ProbTriple(ProbVector joint, ProbVector premise_only, ProbVector hypothesis_only);
  std::size_t size() const noexcept { return joint.size(); }
};

/// Pre-argmax calibrated scores; entries may be negative but are finite.
class ScoreVector {
 public:
  explicit ScoreVector(std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::vector<double> values_;
};

enum class Method { Original, CC, DCPMI, DC, BC, TC, Composed };

std::string_view to_string(Method method);
/// Accepts the lowercase identifiers used on the command line.
Method parse_method(std::string_view name);

struct Prediction {
  std::size_t label_index = 0;
  ScoreVector scores{{0.0}};
  Method method = Method::Original;
  bool tie_broken = false;
};

ProbVector softmax_from_logprobs(std::span<const double> logprobs);

/// Lowest index among maximizers wins; tie_broken marks a shared maximum.
Prediction argmax_with_ties(const ScoreVector& scores, Method method = Method::Original);

ProbVector clamp_probs(const ProbVector& p, double eps = kDefaultEps);

}  // namespace tcal
