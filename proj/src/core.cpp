#include "tcal/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include <fmt/format.h>

namespace tcal {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidLogprob: return "invalid-logprob";
    case ErrorKind::InvalidDimension: return "invalid-dimension";
    case ErrorKind::InvalidProbability: return "invalid-probability";
    case ErrorKind::EmptyBatch: return "empty-batch";
    case ErrorKind::ConfigError: return "config";
    case ErrorKind::EmptyInput: return "empty-input";
    case ErrorKind::EmptyCorpus: return "empty-corpus";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::TemplateError: return "template";
    case ErrorKind::BackendUnavailable: return "backend-unavailable";
    case ErrorKind::CapabilityError: return "capability";
    case ErrorKind::CacheMiss: return "cache-miss";
    case ErrorKind::ParseError: return "parse";
    case ErrorKind::LabelMapError: return "label-map";
    case ErrorKind::CountMismatch: return "count-mismatch";
    case ErrorKind::IoError: return "io";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}

LabelSpace::LabelSpace(std::vector<std::string> labels, std::vector<std::string> verbalizers)
    : labels_(std::move(labels)), verbalizers_(std::move(verbalizers)) {
  if (labels_.size() < 2) {
    throw Error(ErrorKind::InvalidDimension, "label space needs at least 2 labels");
  }
  if (verbalizers_.size() != labels_.size()) {
    throw Error(ErrorKind::InvalidDimension,
                fmt::format("{} labels but {} verbalizers", labels_.size(), verbalizers_.size()));
  }
  std::unordered_set<std::string> seen;
  for (const auto& l : labels_) {
    if (!seen.insert(l).second) {
      throw Error(ErrorKind::ConfigError, fmt::format("duplicate label '{}'", l));
    }
  }
  seen.clear();
  for (const auto& v : verbalizers_) {
    if (v.empty()) throw Error(ErrorKind::ConfigError, "empty verbalizer");
    if (!seen.insert(v).second) {
      throw Error(ErrorKind::ConfigError, fmt::format("duplicate verbalizer '{}'", v));
    }
  }
}

std::size_t LabelSpace::index_of(std::string_view label) const noexcept {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  return static_cast<std::size_t>(it - labels_.begin());
}

ProbVector::ProbVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw Error(ErrorKind::InvalidDimension, "empty probability vector");
  double sum = 0.0;
  for (double v : values_) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw Error(ErrorKind::InvalidProbability, fmt::format("probability entry {} outside [0, 1]", v));
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorKind::InvalidProbability, fmt::format("probabilities sum to {:.17g}", sum));
  }
}

ProbVector ProbVector::normalized(std::vector<double> weights) {
  if (weights.empty()) throw Error(ErrorKind::InvalidDimension, "empty weight vector");
  double sum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw Error(ErrorKind::InvalidProbability, fmt::format("weight {} is not a finite non-negative value", w));
    }
    sum += w;
  }
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    throw Error(ErrorKind::InvalidProbability, "weights have no positive finite mass");
  }
  for (double& w : weights) w /= sum;
  return ProbVector(std::move(weights));
}

ProbVector ProbVector::uniform(std::size_t size) {
  if (size == 0) throw Error(ErrorKind::InvalidDimension, "uniform over zero labels");
  return ProbVector(std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

ProbTriple::ProbTriple(ProbVector joint_in, ProbVector premise_in, ProbVector hypothesis_in)
    : joint(std::move(joint_in)), premise_only(std::move(premise_in)), hypothesis_only(std::move(hypothesis_in)) {
  if (premise_only.size() != joint.size() || hypothesis_only.size() != joint.size()) {
    throw Error(ErrorKind::InvalidDimension, fmt::format("triple sizes differ: joint {}, premise {}, hypothesis {}",
                                                         joint.size(), premise_only.size(), hypothesis_only.size()));
  }
}

ScoreVector::ScoreVector(std::vector<double> values) : values_(std::move(values)) {
  for (double v : values_) {
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidDimension, "non-finite score");
  }
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::Original: return "original";
    case Method::CC: return "cc";
    case Method::DCPMI: return "dcpmi";
    case Method::DC: return "dc";
    case Method::BC: return "bc";
    case Method::TC: return "tc";
    case Method::Composed: return "composed";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::Original, Method::CC, Method::DCPMI, Method::DC, Method::BC, Method::TC, Method::Composed}) {
    if (to_string(m) == name) return m;
  }
  throw Error(ErrorKind::ConfigError, fmt::format("unknown method '{}'", name));
}

ProbVector softmax_from_logprobs(std::span<const double> logprobs) {
  if (logprobs.empty()) throw Error(ErrorKind::InvalidDimension, "no logprobs");
  for (double v : logprobs) {
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidLogprob, fmt::format("non-finite logprob {}", v));
  }
  const double top = *std::max_element(logprobs.begin(), logprobs.end());
  std::vector<double> out(logprobs.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logprobs.size(); ++i) {
    out[i] = std::exp(logprobs[i] - top);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return ProbVector(std::move(out));
}

Prediction argmax_with_ties(const ScoreVector& scores, Method method) {
  if (scores.size() == 0) throw Error(ErrorKind::InvalidDimension, "argmax over empty scores");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  std::size_t at_max = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] == scores[best]) ++at_max;
  }
  return Prediction{best, scores, method, at_max > 1};
}

ProbVector clamp_probs(const ProbVector& p, double eps) {
  if (!(eps > 0.0) || eps > 1e-6) {
    throw Error(ErrorKind::ConfigError, fmt::format("clamp eps {} outside (0, 1e-6]", eps));
  }
  // Nothing below the floor: leave the bits alone so clamping is idempotent.
  if (std::all_of(p.values().begin(), p.values().end(), [eps](double v) { return v >= eps; })) return p;
  auto floor_all = [eps](std::span<const double> in) {
    std::vector<double> out(in.begin(), in.end());
    double sum = 0.0;
    for (double& v : out) {
      v = std::max(v, eps);
      sum += v;
    }
    for (double& v : out) v /= sum;
    return out;
  };
  // Renormalizing can pull an entry that sat exactly at eps back under it,
  // so iterate until every entry clears the floor (at most a few rounds).
  std::vector<double> out = floor_all(p.values());
  for (int round = 0; round < 8; ++round) {
    if (std::all_of(out.begin(), out.end(), [eps](double v) { return v >= eps; })) break;
    out = floor_all(out);
  }
  for (double& v : out) v = std::max(v, eps);
  return ProbVector(std::move(out));
}

}  // namespace tcal
