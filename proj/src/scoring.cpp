#include "tcal/scoring.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace tcal {

namespace {

void require_same_size(const ProbVector& a, const ProbVector& b, const char* what) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::InvalidDimension, fmt::format("{}: expected {} labels, got {}", what, a.size(), b.size()));
  }
}

ScoreVector as_scores(const ProbVector& p) {
  return ScoreVector(std::vector<double>(p.values().begin(), p.values().end()));
}

// Runs one baseline on a single stream and returns a distribution.
ProbVector calibrate_stream(const ProbVector& p, Method inner, const BaselineAux& aux, double eps) {
  switch (inner) {
    case Method::CC: return divide_by_prior(p, mean_distribution(aux.content_free), eps);
    case Method::DCPMI: return divide_by_prior(p, *aux.domain, eps);
    case Method::DC: return divide_by_prior(p, mean_distribution(aux.random), eps);
    case Method::BC: return divide_by_prior(p, *aux.prior, eps);
    default: break;
  }
  throw Error(ErrorKind::ConfigError, fmt::format("'{}' cannot be composed with tc", to_string(inner)));
}

void validate_aux(Method method, const BaselineAux& aux, std::size_t num_labels, const char* where) {
  auto check_size = [&](const ProbVector& v) {
    if (v.size() != num_labels) {
      throw Error(ErrorKind::ConfigError, fmt::format("{}: {} auxiliary has {} labels, expected {}", where,
                                                      to_string(method), v.size(), num_labels));
    }
  };
  switch (method) {
    case Method::CC:
      if (aux.content_free.empty()) {
        throw Error(ErrorKind::ConfigError, fmt::format("{}: cc needs content-free distributions", where));
      }
      for (const auto& v : aux.content_free) check_size(v);
      break;
    case Method::DCPMI:
      if (!aux.domain) throw Error(ErrorKind::ConfigError, fmt::format("{}: dcpmi needs a domain distribution", where));
      check_size(*aux.domain);
      break;
    case Method::DC:
      if (aux.random.empty()) {
        throw Error(ErrorKind::ConfigError, fmt::format("{}: dc needs random-text distributions", where));
      }
      for (const auto& v : aux.random) check_size(v);
      break;
    case Method::BC:
      if (!aux.prior) throw Error(ErrorKind::ConfigError, fmt::format("{}: bc needs a batch prior", where));
      check_size(*aux.prior);
      break;
    default: break;
  }
}

}  // namespace

void MethodConfig::validate(std::size_t num_labels) const {
  if (method == Method::Composed) {
    if (!inner_method) throw Error(ErrorKind::ConfigError, "composed method needs an inner baseline");
    switch (*inner_method) {
      case Method::CC:
      case Method::DCPMI:
      case Method::DC:
      case Method::BC: break;
      default:
        throw Error(ErrorKind::ConfigError, fmt::format("'{}' cannot be composed with tc", to_string(*inner_method)));
    }
    static constexpr const char* kStreams[] = {"joint stream", "premise-only stream", "hypothesis-only stream"};
    for (std::size_t s = 0; s < stream_aux.size(); ++s) {
      validate_aux(*inner_method, stream_aux[s], num_labels, kStreams[s]);
    }
    return;
  }
  if (inner_method) {
    throw Error(ErrorKind::ConfigError, fmt::format("inner method given for non-composed '{}'", to_string(method)));
  }
  validate_aux(method, aux, num_labels, "joint stream");
}

std::string MethodConfig::name() const {
  if (method == Method::Composed && inner_method) return fmt::format("{}+tc", to_string(*inner_method));
  return std::string(to_string(method));
}

ProbVector mean_distribution(std::span<const ProbVector> vectors) {
  if (vectors.empty()) throw Error(ErrorKind::EmptyBatch, "mean over no distributions");
  std::vector<double> acc(vectors.front().size(), 0.0);
  for (const auto& v : vectors) {
    require_same_size(vectors.front(), v, "mean_distribution");
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
  }
  for (double& a : acc) a /= static_cast<double>(vectors.size());
  return ProbVector::normalized(std::move(acc));
}

ProbVector divide_by_prior(const ProbVector& p, const ProbVector& prior, double eps) {
  require_same_size(p, prior, "prior");
  const ProbVector num = clamp_probs(p, eps);
  // A constant prior divides out; skipping the arithmetic keeps the result
  // bit-identical to the clamped input.
  const auto pv = prior.values();
  if (std::all_of(pv.begin(), pv.end(), [&pv](double v) { return v == pv.front(); })) return num;
  const ProbVector den = clamp_probs(prior, eps);
  std::vector<double> ratio(num.size());
  for (std::size_t i = 0; i < ratio.size(); ++i) ratio[i] = num[i] / den[i];
  return ProbVector::normalized(std::move(ratio));
}

ScoreVector score_original(const ProbTriple& triple) { return as_scores(triple.joint); }

ScoreVector score_cc(const ProbVector& p, std::span<const ProbVector> content_free, double eps) {
  if (content_free.empty()) throw Error(ErrorKind::ConfigError, "cc needs content-free distributions");
  return as_scores(divide_by_prior(p, mean_distribution(content_free), eps));
}

ScoreVector score_dcpmi(const ProbVector& p, const ProbVector& domain, double eps) {
  require_same_size(p, domain, "dcpmi domain");
  const ProbVector num = clamp_probs(p, eps);
  const ProbVector den = clamp_probs(domain, eps);
  std::vector<double> out(num.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(num[i] / den[i]);
  return ScoreVector(std::move(out));
}

ScoreVector score_dc(const ProbVector& p, std::span<const ProbVector> random_probs, double eps) {
  if (random_probs.empty()) throw Error(ErrorKind::ConfigError, "dc needs random-text distributions");
  return as_scores(divide_by_prior(p, mean_distribution(random_probs), eps));
}

ProbVector estimate_bc_prior(std::span<const ProbVector> batch) {
  if (batch.empty()) throw Error(ErrorKind::EmptyBatch, "batch prior over an empty batch");
  return mean_distribution(batch);
}

ScoreVector score_bc(const ProbVector& p, const ProbVector& prior, double eps) {
  return as_scores(divide_by_prior(p, prior, eps));
}

ScoreVector score_tc(const ProbTriple& triple, double eps) {
  const ProbVector joint = clamp_probs(triple.joint, eps);
  const ProbVector premise = clamp_probs(triple.premise_only, eps);
  const ProbVector hypothesis = clamp_probs(triple.hypothesis_only, eps);
  std::vector<double> out(joint.size());
  for (std::size_t y = 0; y < out.size(); ++y) {
    // The 0.5/0.5 weighted MI form with the square root dropped.
    out[y] = joint[y] * std::log(joint[y] * joint[y] / (premise[y] * hypothesis[y]));
  }
  return ScoreVector(std::move(out));
}

ScoreVector score_composed(const ProbTriple& triple, const MethodConfig& config, double eps) {
  if (config.method != Method::Composed) {
    throw Error(ErrorKind::ConfigError, "score_composed called with a non-composed config");
  }
  config.validate(triple.size());
  const Method inner = *config.inner_method;
  ProbTriple calibrated(
      calibrate_stream(triple.joint, inner, config.stream_aux[static_cast<int>(Stream::Joint)], eps),
      calibrate_stream(triple.premise_only, inner, config.stream_aux[static_cast<int>(Stream::PremiseOnly)], eps),
      calibrate_stream(triple.hypothesis_only, inner, config.stream_aux[static_cast<int>(Stream::HypothesisOnly)],
                       eps));
  return score_tc(calibrated, eps);
}

ScoreVector score(const ProbTriple& triple, const MethodConfig& config, double eps) {
  config.validate(triple.size());
  switch (config.method) {
    case Method::Original: return score_original(triple);
    case Method::CC: return score_cc(triple.joint, config.aux.content_free, eps);
    case Method::DCPMI: return score_dcpmi(triple.joint, *config.aux.domain, eps);
    case Method::DC: return score_dc(triple.joint, config.aux.random, eps);
    case Method::BC: return score_bc(triple.joint, *config.aux.prior, eps);
    case Method::TC: return score_tc(triple, eps);
    case Method::Composed: return score_composed(triple, config, eps);
  }
  throw Error(ErrorKind::ConfigError, "unknown method");
}

}  // namespace tcal
