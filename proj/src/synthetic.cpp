#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "tcal/datasets.hpp"
#include "tcal/hashing.hpp"
#include "tcal/rng.hpp"

namespace tcal {

void SyntheticConfig::validate() const {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(beta_premise) || !in_unit(beta_hypothesis)) {
    throw Error(ErrorKind::ConfigError, "bias levels must lie in [0, 1]");
  }
  if (!(signal > 0.0 && signal <= 1.0)) throw Error(ErrorKind::ConfigError, "signal must lie in (0, 1]");
  if (num_labels < 2) throw Error(ErrorKind::ConfigError, "synthetic stream needs at least 2 labels");
  if (!(peak_mass >= 1.0 / static_cast<double>(num_labels) && peak_mass <= 1.0)) {
    throw Error(ErrorKind::ConfigError, "peak mass must lie in [1/C, 1]");
  }
  if (n < 1) throw Error(ErrorKind::ConfigError, "synthetic stream needs n >= 1");
}

ProbVector peaked_distribution(std::size_t label, double mass, std::size_t num_labels) {
  std::vector<double> v(num_labels, (1.0 - mass) / static_cast<double>(num_labels - 1));
  v.at(label) = mass;
  return ProbVector::normalized(std::move(v));
}

TaskSchema synthetic_schema(std::size_t num_labels) {
  std::vector<std::string> labels, verbalizers;
  std::string cue;
  if (num_labels == 2) {
    labels = {"entailment", "not_entailment"};
    verbalizers = {"true", "false"};
    cue = "true or false? Answer:";
  } else if (num_labels == 3) {
    labels = {"entailment", "contradiction", "neutral"};
    verbalizers = {"true", "false", "neither"};
    cue = "true, false or neither? Answer:";
  } else {
    for (std::size_t i = 0; i < num_labels; ++i) {
      labels.push_back(fmt::format("label{}", i));
      verbalizers.push_back(fmt::format("l{}", i));
    }
    cue = "Which label? Answer:";
  }
  TaskSchema schema{"synthetic",
                    "main",
                    TaskKind::NLI,
                    "Premise: {premise}. Hypothesis: {hypothesis}. " + cue,
                    LabelSpace(std::move(labels), std::move(verbalizers)),
                    MetricKind::Accuracy,
                    cue,
                    1};
  schema.validate();
  return schema;
}

namespace {

std::vector<double> mix(double w, const ProbVector& a, const ProbVector& b) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = w * a[i] + (1.0 - w) * b[i];
  return out;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticConfig& config) {
  config.validate();
  const std::size_t c = config.num_labels;
  SyntheticData data{synthetic_schema(c), {}, {}, {}};
  data.examples.reserve(config.n);
  data.confounds.reserve(config.n);
  data.triples.reserve(config.n);

  const ProbVector uniform = ProbVector::uniform(c);
  SeededRng rng(config.seed);
  for (std::size_t i = 0; i < config.n; ++i) {
    const auto gold = static_cast<std::size_t>(rng.uniform_index(c));
    const auto confound = static_cast<std::size_t>(rng.uniform_index(c));
    const ProbVector truth = peaked_distribution(gold, config.peak_mass, c);
    const ProbVector bias = peaked_distribution(confound, config.peak_mass, c);
    data.triples.emplace_back(ProbVector::normalized(mix(config.signal, truth, bias)),
                              ProbVector::normalized(mix(config.beta_premise, bias, uniform)),
                              ProbVector::normalized(mix(config.beta_hypothesis, bias, uniform)));
    data.examples.push_back({fmt::format("p{}", i), fmt::format("h{}", i), gold});
    data.confounds.push_back(confound);
  }
  return data;
}

std::unique_ptr<RecordStore> synthetic_records(const SyntheticData& data, const std::string& model_id,
                                               std::size_t dc_samples, std::uint64_t dc_seed) {
  auto store = std::make_unique<RecordStore>();
  const auto candidates = data.schema.candidates();
  // log(0) would be -inf; the floor keeps records finite and still negligible.
  constexpr double kLogFloor = -700.0;
  auto put = [&](const std::string& prompt, const ProbVector& p, bool keep_existing = false) {
    for (std::size_t y = 0; y < candidates.size(); ++y) {
      const std::string hash = prompt_hash(model_id, prompt, candidates[y]);
      if (keep_existing && store->find(hash)) continue;
      const double lp = p[y] > 0.0 ? std::max(std::log(p[y]), kLogFloor) : kLogFloor;
      store->put({model_id, hash, prompt, candidates[y], lp, 1});
    }
  };

  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    const auto& ex = data.examples[i];
    const auto& t = data.triples[i];
    put(render(data.schema, ex, RenderMode::Joint), t.joint);
    put(render(data.schema, ex, RenderMode::PremiseOnly), t.premise_only);
    put(render(data.schema, ex, RenderMode::HypothesisOnly), t.hypothesis_only);
  }

  // Auxiliary prompts can coincide with an example's partial render (a random
  // text of one word is exactly "h17"); the example's record wins.
  const ProbVector uniform = ProbVector::uniform(data.schema.label_space.size());
  put(domain_prompt(data.schema), uniform, true);
  for (RenderMode mode : {RenderMode::Joint, RenderMode::PremiseOnly, RenderMode::HypothesisOnly}) {
    for (const auto& prompt : content_free_prompts(data.schema, mode)) put(prompt, uniform, true);
    if (dc_samples > 0) {
      for (const auto& prompt : random_text_prompts(data.schema, data.examples, dc_samples, dc_seed, mode)) {
        put(prompt, uniform, true);
      }
    }
  }
  return store;
}

}  // namespace tcal
