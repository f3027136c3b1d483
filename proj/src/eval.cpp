#include "tcal/eval.hpp"

#include <cmath>
#include <set>

#include <fmt/format.h>

#include "tcal/hashing.hpp"

namespace tcal {

namespace {

constexpr std::array<RenderMode, 3> kModes = {RenderMode::Joint, RenderMode::PremiseOnly, RenderMode::HypothesisOnly};

RenderMode mode_of(Stream s) { return kModes[static_cast<std::size_t>(s)]; }

const ProbVector& stream_of(const ProbTriple& t, Stream s) {
  switch (s) {
    case Stream::Joint: return t.joint;
    case Stream::PremiseOnly: return t.premise_only;
    case Stream::HypothesisOnly: return t.hypothesis_only;
  }
  return t.joint;
}

std::vector<ProbVector> collect_stream(const std::vector<ExampleTriple>& triples, Stream s) {
  std::vector<ProbVector> out;
  out.reserve(triples.size());
  for (const auto& t : triples) out.push_back(stream_of(t.triple, s));
  return out;
}

std::size_t argmax_index(const ProbVector& p) {
  return argmax_with_ties(ScoreVector(std::vector<double>(p.values().begin(), p.values().end()))).label_index;
}

double pct(std::size_t num, std::size_t den) { return 100.0 * static_cast<double>(num) / static_cast<double>(den); }

}  // namespace

// ---------------------------------------------------------------------------

PromptedTripleSource::PromptedTripleSource(const TaskSchema& schema, LogprobBackend& backend, FewShotContext context,
                                           std::vector<Example> dc_corpus, std::size_t dc_samples,
                                           std::uint64_t dc_seed)
    : schema_(schema),
      backend_(backend),
      context_(std::move(context)),
      dc_corpus_(std::move(dc_corpus)),
      dc_samples_(dc_samples),
      dc_seed_(dc_seed) {}

std::vector<ProbVector> PromptedTripleSource::fetch(const std::vector<std::string>& prompts) {
  std::vector<LogprobRequest> requests;
  for (const auto& p : prompts) requests.push_back({p, schema_.candidates(), backend_.config().model_id});
  return backend_.fetch_many(requests);
}

std::vector<ExampleTriple> PromptedTripleSource::triples(const std::vector<Example>& examples) {
  std::vector<std::array<std::string, 3>> prompts;
  prompts.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    try {
      std::array<std::string, 3> p;
      for (std::size_t m = 0; m < kModes.size(); ++m) p[m] = render(schema_, examples[i], kModes[m], context_);
      prompts.push_back(std::move(p));
    } catch (const Error& e) {
      throw Error(e.kind(), fmt::format("example {}: {}", i, e.what()));
    }
  }

  const auto candidates = schema_.candidates();
  const auto& model = backend_.config().model_id;
  if (backend_.online()) {
    std::vector<LogprobRequest> all;
    for (const auto& p : prompts) {
      for (const auto& text : p) all.push_back({text, candidates, model});
    }
    // Bounded concurrent prefetch; failures resurface below with their index.
    try {
      backend_.fetch_many(all);
    } catch (const Error&) {
    }
  }

  std::vector<ExampleTriple> out;
  out.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    try {
      auto get = [&](std::size_t m) { return backend_.fetch_label_probs({prompts[i][m], candidates, model}); };
      out.push_back({ProbTriple(get(0), get(1), get(2)),
                     {sha256_hex(prompts[i][0]), sha256_hex(prompts[i][1]), sha256_hex(prompts[i][2])}});
    } catch (const Error& e) {
      throw Error(e.kind(), fmt::format("example {}: {}", i, e.what()));
    }
  }
  return out;
}

BaselineAux PromptedTripleSource::auxiliaries(Stream stream, Method method) {
  BaselineAux aux;
  const RenderMode mode = mode_of(stream);
  switch (method) {
    case Method::CC: aux.content_free = fetch(content_free_prompts(schema_, mode, context_)); break;
    case Method::DCPMI: aux.domain = fetch({domain_prompt(schema_)}).front(); break;
    case Method::DC:
      aux.random = fetch(random_text_prompts(schema_, dc_corpus_, dc_samples_, dc_seed_, mode, context_));
      break;
    default: break;
  }
  return aux;
}

InjectedTripleSource::InjectedTripleSource(std::vector<ProbTriple> triples) : triples_(std::move(triples)) {}

void InjectedTripleSource::set_auxiliaries(Stream stream, BaselineAux aux) {
  aux_[static_cast<std::size_t>(stream)] = std::move(aux);
}

std::vector<ExampleTriple> InjectedTripleSource::triples(const std::vector<Example>& examples) {
  if (examples.size() != triples_.size()) {
    throw Error(ErrorKind::InvalidDimension,
                fmt::format("{} examples but {} injected triples", examples.size(), triples_.size()));
  }
  std::vector<ExampleTriple> out;
  out.reserve(triples_.size());
  for (const auto& t : triples_) out.push_back({t, {}});
  return out;
}

BaselineAux InjectedTripleSource::auxiliaries(Stream stream, Method method) {
  if (const auto& given = aux_[static_cast<std::size_t>(stream)]) return *given;
  BaselineAux aux;
  if (triples_.empty()) return aux;
  const ProbVector uniform = ProbVector::uniform(triples_.front().size());
  switch (method) {
    case Method::CC: aux.content_free = {uniform}; break;
    case Method::DCPMI: aux.domain = uniform; break;
    case Method::DC: aux.random = {uniform}; break;
    default: break;
  }
  return aux;
}

// ---------------------------------------------------------------------------

void RunSpec::validate() const {
  if (methods.empty()) throw Error(ErrorKind::ConfigError, "run needs at least one method");
  if (n_shots > 0 && seeds.empty()) throw Error(ErrorKind::ConfigError, "few-shot runs need at least one seed");
  if (n_shots > 4) throw Error(ErrorKind::ConfigError, "shot count must lie in 0..4");
  if (!(eps > 0.0) || eps > 1e-6) throw Error(ErrorKind::ConfigError, "eps must lie in (0, 1e-6]");
}

std::vector<MethodConfig> parse_method_list(std::string_view list) {
  std::vector<MethodConfig> out;
  std::set<std::string> seen;
  std::size_t start = 0;
  while (start <= list.size()) {
    auto end = list.find(',', start);
    if (end == std::string_view::npos) end = list.size();
    std::string_view item = list.substr(start, end - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item.empty()) throw Error(ErrorKind::ConfigError, "empty method name in list");
    MethodConfig cfg;
    if (item.ends_with("+tc")) {
      cfg.method = Method::Composed;
      cfg.inner_method = parse_method(item.substr(0, item.size() - 3));
      switch (*cfg.inner_method) {
        case Method::CC:
        case Method::DCPMI:
        case Method::DC:
        case Method::BC: break;
        default: throw Error(ErrorKind::ConfigError, fmt::format("'{}' cannot be composed with tc", item));
      }
    } else {
      cfg.method = parse_method(item);
      if (cfg.method == Method::Composed) {
        throw Error(ErrorKind::ConfigError, "write composed methods as <baseline>+tc");
      }
    }
    if (!seen.insert(cfg.name()).second) {
      throw Error(ErrorKind::ConfigError, fmt::format("method '{}' listed twice", item));
    }
    out.push_back(std::move(cfg));
    start = end + 1;
  }
  return out;
}

const MethodResult* EvalReport::find(std::string_view method_name) const {
  for (const auto& m : methods) {
    if (m.name == method_name) return &m;
  }
  return nullptr;
}

EvalReport evaluate(const RunSpec& run, const TaskSchema& schema, const std::vector<Example>& examples,
                    TripleSource& source) {
  run.validate();
  if (examples.empty()) throw Error(ErrorKind::EmptyBatch, "no examples to evaluate");
  const std::size_t c = schema.label_space.size();
  std::vector<std::size_t> gold;
  gold.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (!examples[i].gold_label || *examples[i].gold_label >= c) {
      throw Error(ErrorKind::LabelMapError, fmt::format("example {} has no valid gold label", i));
    }
    gold.push_back(*examples[i].gold_label);
  }

  EvalReport report;
  report.task_id = run.task_id.empty() ? schema.task_id : run.task_id;
  report.template_id = run.template_id;
  report.n_shots = run.n_shots;
  if (run.n_shots > 0) report.seed = run.seeds.front();
  report.metric = schema.metric;
  report.num_labels = c;
  report.triples = source.triples(examples);
  for (std::size_t i = 0; i < examples.size(); ++i) report.gold.push_back(gold[i]);
  for (const auto& t : report.triples) {
    if (t.triple.size() != c) throw Error(ErrorKind::InvalidDimension, "triple size differs from label space");
  }

  for (const auto& requested : run.methods) {
    MethodConfig cfg = requested;
    switch (cfg.method) {
      case Method::CC:
      case Method::DCPMI:
      case Method::DC: cfg.aux = source.auxiliaries(Stream::Joint, cfg.method); break;
      case Method::BC: cfg.aux.prior = estimate_bc_prior(collect_stream(report.triples, Stream::Joint)); break;
      case Method::Composed:
        for (Stream s : {Stream::Joint, Stream::PremiseOnly, Stream::HypothesisOnly}) {
          auto& slot = cfg.stream_aux[static_cast<std::size_t>(s)];
          if (cfg.inner_method == Method::BC) {
            slot.prior = estimate_bc_prior(collect_stream(report.triples, s));
          } else {
            slot = source.auxiliaries(s, *cfg.inner_method);
          }
        }
        break;
      default: break;
    }
    cfg.validate(c);

    MethodResult result{cfg.name(), cfg, {}, 0.0};
    result.predictions.reserve(report.triples.size());
    std::vector<std::size_t> predicted;
    predicted.reserve(report.triples.size());
    for (const auto& t : report.triples) {
      result.predictions.push_back(argmax_with_ties(score(t.triple, cfg, run.eps), cfg.method));
      predicted.push_back(result.predictions.back().label_index);
    }
    result.metric = compute_metric(schema.metric, predicted, gold, c);
    report.methods.push_back(std::move(result));
  }

  std::vector<ProbTriple> plain;
  plain.reserve(report.triples.size());
  for (const auto& t : report.triples) plain.push_back(t.triple);
  report.diagnostics = bias_diagnostics(examples, plain, schema.label_space, schema.negative_label);
  if (report.find("original") && report.find("tc")) report.flips = flip_accounting(report);

  report.settings = {
      {"eps", fmt::format("{:g}", run.eps)},
      {"scoring_rule", std::string(to_string(run.backend.scoring_rule))},
      {"model_id", run.backend.model_id},
      {"missing_slot_rule", "empty string; drop following period; collapse seam whitespace"},
      {"sentence_period", "a slot value ending in . ! or ? absorbs a template period right after it"},
      {"tie_break", "lowest label index"},
      {"cc_form", "w = diag(p_cf)^-1, b = 0; content-free inputs N/A, [MASK], empty"},
      {"dcpmi_form", "log(p / p_domain)"},
      {"dc_prior", fmt::format("probability-space mean over {} random texts, seed {}", run.dc_samples, run.dc_seed)},
      {"bc_prior", "mean over the full example stream, one prior per stream when composed"},
      {"macro_f1_absent_class", "F1 = 0"},
      {"template", fmt::format("{}/{}", schema.task_id, schema.template_id)},
  };
  return report;
}

BiasDiagnostics bias_diagnostics(const std::vector<Example>& examples, std::span<const ProbTriple> triples,
                                 const LabelSpace& label_space, std::size_t negative_label_index) {
  if (negative_label_index >= label_space.size()) {
    throw Error(ErrorKind::ConfigError, "negative label index outside the label space");
  }
  if (examples.size() != triples.size()) {
    throw Error(ErrorKind::InvalidDimension, "examples and triples differ in length");
  }
  BiasDiagnostics d;
  d.n = triples.size();
  if (d.n == 0) return d;
  std::size_t prem_neg = 0, hyp_neg = 0, prem_align = 0, hyp_align = 0;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const std::size_t p = argmax_index(triples[i].premise_only);
    const std::size_t h = argmax_index(triples[i].hypothesis_only);
    prem_neg += p == negative_label_index;
    hyp_neg += h == negative_label_index;
    if (!examples[i].gold_label) continue;
    const std::size_t j = argmax_index(triples[i].joint);
    if (j == *examples[i].gold_label) continue;
    ++d.joint_errors;
    prem_align += j == p;
    hyp_align += j == h;
  }
  d.premise_negative_pct = pct(prem_neg, d.n);
  d.hypothesis_negative_pct = pct(hyp_neg, d.n);
  if (d.joint_errors > 0) {
    d.premise_alignment_pct = pct(prem_align, d.joint_errors);
    d.hypothesis_alignment_pct = pct(hyp_align, d.joint_errors);
  }
  return d;
}

FlipAccounting flip_accounting(const EvalReport& report) {
  const MethodResult* original = report.find("original");
  const MethodResult* tc = report.find("tc");
  if (!original || !tc) throw Error(ErrorKind::ConfigError, "flip accounting needs original and tc results");
  FlipAccounting f;
  for (std::size_t i = 0; i < report.gold.size(); ++i) {
    if (!report.gold[i]) continue;
    const std::size_t g = *report.gold[i];
    const std::size_t o = original->predictions[i].label_index;
    const std::size_t t = tc->predictions[i].label_index;
    if (o == g) {
      f.newly_broken += t != g;
      continue;
    }
    ++f.original_errors;
    if (t == g) {
      ++f.corrected;
    } else if (t != o) {
      ++f.changed_but_wrong;
    }
  }
  if (f.original_errors > 0) {
    f.corrected_pct = pct(f.corrected, f.original_errors);
    f.broken_pct = pct(f.changed_but_wrong, f.original_errors);
  }
  return f;
}

std::vector<MethodAggregate> aggregate_robustness(std::span<const EvalReport> reports) {
  if (reports.size() < 2) throw Error(ErrorKind::ConfigError, "aggregation needs at least two reports");
  std::vector<std::string> names;
  for (const auto& m : reports.front().methods) names.push_back(m.name);
  for (const auto& r : reports) {
    std::vector<std::string> other;
    for (const auto& m : r.methods) other.push_back(m.name);
    if (other != names) throw Error(ErrorKind::ConfigError, "reports cover different method sets");
  }
  std::vector<MethodAggregate> out;
  for (std::size_t k = 0; k < names.size(); ++k) {
    double sum = 0.0;
    for (const auto& r : reports) sum += r.methods[k].metric;
    const double n = static_cast<double>(reports.size());
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& r : reports) ss += (r.methods[k].metric - mean) * (r.methods[k].metric - mean);
    out.push_back({names[k], mean, std::sqrt(ss / n), reports.size()});
  }
  return out;
}

}  // namespace tcal
