#include "cli_app.hpp"

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <fmt/format.h>
#include <CLI11.hpp>
#include <json.hpp>

#include "tcal/backend.hpp"
#include "tcal/datasets.hpp"
#include "tcal/eval.hpp"
#include "tcal/prompting.hpp"

namespace tcal::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Options shared by every subcommand that evaluates a task.
struct TaskOptions {
  std::string task;
  std::string templates = "main";
  std::string registry;
  std::string manifest;
  std::string data_root;
  std::string split;
  std::string examples;
  std::string train_examples;
  std::size_t limit = 0;
  std::string methods = "original,tc";
  std::size_t shots = 0;
  std::string seeds;
  std::string backend = "offline";
  std::string store;
  std::string endpoint;
  std::string api_key_env;
  std::string model = "default";
  std::size_t max_in_flight = 4;
  int timeout_ms = 30000;
  int retries = 3;
  int backoff_ms = 200;
  std::string scoring_rule = "sum";
  double eps = kDefaultEps;
  std::size_t dc_samples = 20;
  std::uint64_t dc_seed = 0;
  std::string out;
};

void add_task_options(CLI::App& cmd, TaskOptions& o, bool with_methods) {
  cmd.add_option("--task", o.task, "Task id (rte, cb, vast, synthetic, ...)")->required();
  cmd.add_option("--template", o.templates, "Template id, or a comma list to aggregate over")->capture_default_str();
  cmd.add_option("--registry", o.registry, "Extra task documents (JSON array or one object per line)");
  auto* manifest = cmd.add_option("--manifest", o.manifest, "Dataset manifest");
  cmd.add_option("--data-root", o.data_root, "Resolve manifest split paths against this directory");
  cmd.add_option("--split", o.split, "Split to evaluate (default: the manifest's eval split)");
  auto* examples = cmd.add_option("--examples", o.examples, "Examples file (one JSON object per line)");
  manifest->excludes(examples);
  cmd.add_option("--train-examples", o.train_examples, "Training examples for few-shot contexts");
  cmd.add_option("--limit", o.limit, "Evaluate only the first N examples");
  if (with_methods) {
    cmd.add_option("--methods", o.methods, "Comma list: original,cc,dcpmi,dc,bc,tc,<baseline>+tc")
        ->capture_default_str();
  }
  cmd.add_option("--shots", o.shots, "Demonstrations per prompt (0-4)")->check(CLI::Range(0, 4))->capture_default_str();
  cmd.add_option("--seeds", o.seeds, "Comma list of few-shot seeds (default 1,2,3,4,5 when --shots > 0)");
  cmd.add_option("--backend", o.backend, "offline or http")
      ->check(CLI::IsMember({"offline", "http"}))
      ->capture_default_str();
  cmd.add_option("--store", o.store, "Record store file or directory (offline store, or http cache)");
  cmd.add_option("--endpoint", o.endpoint, "OpenAI-compatible completions URL");
  cmd.add_option("--api-key-env", o.api_key_env, "Environment variable holding the bearer token");
  cmd.add_option("--model", o.model, "Model id sent to the endpoint and stored in records")->capture_default_str();
  cmd.add_option("--max-in-flight", o.max_in_flight, "Concurrent requests")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd.add_option("--timeout-ms", o.timeout_ms, "Per-request timeout")->capture_default_str();
  cmd.add_option("--retries", o.retries, "Attempts per request")->check(CLI::PositiveNumber)->capture_default_str();
  cmd.add_option("--backoff-ms", o.backoff_ms, "Base retry backoff (doubles per attempt)")->capture_default_str();
  cmd.add_option("--scoring-rule", o.scoring_rule, "sum or mean (per-token) label log-probabilities")
      ->check(CLI::IsMember({"sum", "mean"}))
      ->capture_default_str();
  cmd.add_option("--eps", o.eps, "Probability floor")->capture_default_str();
  cmd.add_option("--dc-samples", o.dc_samples, "Random texts for dc")->capture_default_str();
  cmd.add_option("--dc-seed", o.dc_seed, "Seed for dc random texts")->capture_default_str();
  cmd.add_option("--out", o.out, "Output directory")->required();
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const auto& s : split_list(text)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoull(s, &used));
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      throw UsageError(fmt::format("invalid seed '{}'", s));
    }
  }
  return out;
}

fs::path store_file(const std::string& store) {
  fs::path p = store;
  if (fs::is_directory(p)) return p / "store.jsonl";
  return p;
}

std::optional<fs::path> store_dir(const std::string& store) {
  if (store.empty()) return std::nullopt;
  fs::path p = store;
  if (fs::is_directory(p)) return p;
  return p.has_parent_path() ? std::optional<fs::path>(p.parent_path()) : std::nullopt;
}

BackendConfig backend_config(const TaskOptions& o) {
  BackendConfig b;
  b.kind = o.backend == "http" ? BackendConfig::Kind::Http : BackendConfig::Kind::Offline;
  if (!o.endpoint.empty()) b.endpoint_url = o.endpoint;
  if (!o.api_key_env.empty()) b.api_key_env = o.api_key_env;
  b.max_in_flight = o.max_in_flight;
  b.timeout_ms = o.timeout_ms;
  b.retry = {o.retries, o.backoff_ms};
  b.scoring_rule = parse_scoring_rule(o.scoring_rule);
  b.model_id = o.model;
  if (!o.store.empty()) b.store_path = store_file(o.store);
  return b;
}

// Checks that need more than one flag; runs before any work.
void check_conflicts(const TaskOptions& o) {
  if (o.backend == "http" && o.endpoint.empty()) throw UsageError("--backend http needs --endpoint");
  if (o.backend == "offline" && o.store.empty()) throw UsageError("--backend offline needs --store");
  if (o.backend == "offline" && !o.endpoint.empty()) throw UsageError("--endpoint conflicts with --backend offline");
  if (o.shots == 0 && !o.seeds.empty()) throw UsageError("--seeds only applies with --shots > 0");
  if (!(o.eps > 0.0) || o.eps > 1e-6) throw UsageError("--eps must lie in (0, 1e-6]");
}

struct SplitExamples {
  std::string split;  // empty for a plain examples file
  std::vector<Example> examples;
};

struct TaskInputs {
  TemplateRegistry registry;
  std::vector<std::string> template_ids;
  std::vector<SplitExamples> splits;
  std::vector<Example> train;
  std::vector<std::uint64_t> seeds;
};

TaskInputs resolve_inputs(const TaskOptions& o) {
  TaskInputs in{TemplateRegistry::builtin(), {}, {}, {}, {}};
  auto merge = [&in](const fs::path& path) {
    const TemplateRegistry extra = TemplateRegistry::load(path);
    for (const auto& s : extra.all()) in.registry.add(s);
  };
  const auto dir = store_dir(o.store);
  if (dir && fs::exists(*dir / "registry.jsonl")) merge(*dir / "registry.jsonl");
  if (!o.registry.empty()) merge(o.registry);

  in.template_ids = split_list(o.templates);
  if (in.template_ids.empty()) throw UsageError("--template is empty");
  for (const auto& t : in.template_ids) in.registry.get(o.task, t);

  std::optional<DatasetManifest> manifest;
  fs::path manifest_path = o.manifest;
  if (manifest_path.empty() && o.examples.empty() && dir && fs::exists(*dir / "manifest.json")) {
    manifest_path = *dir / "manifest.json";
  }
  if (!manifest_path.empty()) {
    manifest =
        DatasetManifest::load(manifest_path, o.data_root.empty() ? std::nullopt : std::optional<fs::path>(o.data_root));
    // A comma list (mnli matched and mismatched) evaluates each split in turn.
    const auto names = split_list(o.split.empty() ? manifest->eval_split : o.split);
    if (names.empty()) throw UsageError("--split is empty");
    for (const auto& name : names) in.splits.push_back({name, load_split(*manifest, name)});
  } else if (!o.examples.empty()) {
    if (!o.split.empty()) throw UsageError("--split needs --manifest");
    in.splits.push_back({"", load_examples(o.examples)});
  } else {
    throw UsageError("no examples: pass --manifest or --examples (or a store directory with manifest.json)");
  }
  for (auto& s : in.splits) {
    if (o.limit > 0 && s.examples.size() > o.limit) s.examples.resize(o.limit);
  }

  if (o.shots > 0) {
    if (!o.train_examples.empty()) {
      in.train = load_examples(o.train_examples);
    } else if (manifest && manifest->train_split) {
      in.train = load_split(*manifest, *manifest->train_split);
    } else {
      throw UsageError("--shots > 0 needs --train-examples or a manifest train_split");
    }
    in.seeds = o.seeds.empty() ? std::vector<std::uint64_t>{1, 2, 3, 4, 5} : parse_seeds(o.seeds);
  }
  return in;
}

// Writes into a sibling temporary directory and swaps it in on success.
class StagedDir {
 public:
  explicit StagedDir(fs::path target) : target_(std::move(target)) {
    staging_ = target_;
    staging_ += fmt::format(".tmp-{}", ::getpid());
    fs::remove_all(staging_);
    fs::create_directories(staging_);
  }
  ~StagedDir() {
    std::error_code ec;
    if (!committed_) fs::remove_all(staging_, ec);
  }
  const fs::path& path() const { return staging_; }
  void commit() {
    fs::remove_all(target_);
    if (target_.has_parent_path()) fs::create_directories(target_.parent_path());
    fs::rename(staging_, target_);
    committed_ = true;
  }

 private:
  fs::path target_;
  fs::path staging_;
  bool committed_ = false;
};

struct RunResult {
  std::vector<EvalReport> reports;
  std::vector<MethodAggregate> aggregates;
};

RunResult run_reports(const TaskOptions& o, const TaskInputs& in, const std::vector<MethodConfig>& methods,
                      LogprobBackend& backend) {
  RunResult result;
  const std::vector<std::optional<std::uint64_t>> seeds =
      in.seeds.empty() ? std::vector<std::optional<std::uint64_t>>{std::nullopt}
                       : std::vector<std::optional<std::uint64_t>>(in.seeds.begin(), in.seeds.end());
  for (const auto& template_id : in.template_ids) {
    const TaskSchema& schema = in.registry.get(o.task, template_id);
    for (const auto& [split, examples] : in.splits) {
      for (const auto& seed : seeds) {
        RunSpec spec;
        spec.task_id = o.task;
        spec.template_id = template_id;
        spec.methods = methods;
        spec.n_shots = o.shots;
        if (seed) spec.seeds = {*seed};
        spec.backend = backend.config();
        spec.eps = o.eps;
        spec.dc_samples = o.dc_samples;
        spec.dc_seed = o.dc_seed;

        FewShotContext context;
        if (seed) context = sample_few_shot(in.train, o.shots, *seed);
        PromptedTripleSource source(schema, backend, context, examples, o.dc_samples, o.dc_seed);
        EvalReport report = evaluate(spec, schema, examples, source);
        report.split = split;
        result.reports.push_back(std::move(report));
      }
    }
  }
  if (result.reports.size() >= 2) result.aggregates = aggregate_robustness(result.reports);
  return result;
}

bool inputs_have_several_splits(const RunResult& r) {
  return std::any_of(r.reports.begin(), r.reports.end(),
                     [&r](const EvalReport& e) { return e.split != r.reports.front().split; });
}

// Written next to the reports and appended to the summary.
void write_effective_config(const CLI::App& cmd, const fs::path& dir) {
  const std::string config = cmd.config_to_str(true, false);
  std::ofstream(dir / "effective_config.toml") << config;
  if (fs::exists(dir / "summary.md")) {
    std::ofstream(dir / "summary.md", std::ios::app) << "\n## Effective configuration\n\n```toml\n"
                                                     << config << "```\n";
  }
}

void write_outputs(const RunResult& r, const fs::path& dir, const CLI::App& cmd) {
  write_report_csv(r.reports, dir / "report.csv");
  write_diagnostics_csv(r.reports, dir / "diagnostics.csv");
  write_summary_md(r.reports, r.aggregates, dir / "summary.md");
  if (!r.aggregates.empty()) write_aggregate_csv(r.aggregates, dir / "aggregate.csv");
  write_effective_config(cmd, dir);
  if (r.reports.size() == 1) {
    write_audit_csv(r.reports.front(), dir / "audit.csv");
    return;
  }
  for (const auto& rep : r.reports) {
    std::string name = "template_" + rep.template_id;
    if (!rep.split.empty() && inputs_have_several_splits(r)) name += "_" + rep.split;
    if (rep.seed) name += fmt::format("_seed_{}", *rep.seed);
    const fs::path sub = dir / name;
    write_report_csv(std::span<const EvalReport>(&rep, 1), sub / "report.csv");
    write_diagnostics_csv(std::span<const EvalReport>(&rep, 1), sub / "diagnostics.csv");
    write_audit_csv(rep, sub / "audit.csv");
  }
}

std::vector<MethodConfig> parse_methods_or_usage(const std::string& list) {
  try {
    return parse_method_list(list);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

// ---------------------------------------------------------------------------

int cmd_run(const TaskOptions& o, const CLI::App& cmd, std::ostream& out) {
  const auto methods = parse_methods_or_usage(o.methods);
  check_conflicts(o);
  const TaskInputs in = resolve_inputs(o);
  auto backend = LogprobBackend::open(backend_config(o));
  StagedDir staged(o.out);
  const RunResult r = run_reports(o, in, methods, *backend);
  write_outputs(r, staged.path(), cmd);
  staged.commit();
  for (const auto& rep : r.reports) {
    for (const auto& m : rep.methods) {
      out << fmt::format("{}/{}{} {:<10} {}={:.2f}\n", rep.task_id, rep.template_id,
                         rep.seed ? fmt::format(" seed={}", *rep.seed) : std::string(), m.name, to_string(rep.metric),
                         m.metric);
    }
  }
  for (const auto& a : r.aggregates)
    out << fmt::format("aggregate {:<10} {:.2f} ± {:.2f}\n", a.method, a.mean, a.stddev);
  return kExitOk;
}

int cmd_diagnose(const TaskOptions& o, const CLI::App& cmd, std::ostream& out) {
  check_conflicts(o);
  const TaskInputs in = resolve_inputs(o);
  auto backend = LogprobBackend::open(backend_config(o));
  StagedDir staged(o.out);
  const RunResult r = run_reports(o, in, parse_method_list("original,tc"), *backend);
  write_diagnostics_csv(r.reports, staged.path() / "diagnostics.csv");
  write_summary_md(r.reports, r.aggregates, staged.path() / "summary.md");
  write_effective_config(cmd, staged.path());
  staged.commit();
  for (const auto& rep : r.reports) {
    const auto& d = rep.diagnostics;
    out << fmt::format("premise-only negative {:.2f}%  hypothesis-only negative {:.2f}%\n", d.premise_negative_pct,
                       d.hypothesis_negative_pct);
    if (d.joint_errors == 0) {
      out << "alignment: n/a\n";
    } else {
      out << fmt::format("alignment of {} joint errors: premise {:.2f}%  hypothesis {:.2f}%\n", d.joint_errors,
                         *d.premise_alignment_pct, *d.hypothesis_alignment_pct);
    }
  }
  return kExitOk;
}

int cmd_compare(const TaskOptions& o, const std::string& inner, const CLI::App& cmd, std::ostream& out) {
  std::string list = "original,tc";
  const auto baselines = split_list(inner);
  if (baselines.empty()) throw UsageError("--baselines is empty");
  for (const auto& b : baselines) list += fmt::format(",{},{}+tc", b, b);
  const auto methods = parse_methods_or_usage(list);
  check_conflicts(o);
  const TaskInputs in = resolve_inputs(o);
  auto backend = LogprobBackend::open(backend_config(o));
  StagedDir staged(o.out);
  const RunResult r = run_reports(o, in, methods, *backend);
  write_outputs(r, staged.path(), cmd);

  // Baseline vs baseline+TC, averaged over reports when there are several.
  auto mean_metric = [&r](const std::string& name) {
    double sum = 0.0;
    for (const auto& rep : r.reports) sum += rep.find(name)->metric;
    return sum / static_cast<double>(r.reports.size());
  };
  std::ofstream csv(staged.path() / "comparison.csv");
  csv << "baseline,baseline_metric,with_tc_metric,delta,tc_metric\n";
  const double tc = mean_metric("tc");
  for (const auto& b : baselines) {
    const double base = mean_metric(b);
    const double composed = mean_metric(b + "+tc");
    csv << fmt::format("{},{:.4f},{:.4f},{:+.4f},{:.4f}\n", b, base, composed, composed - base, tc);
    out << fmt::format("{:<6} {:.2f} -> {}+tc {:.2f} ({:+.2f})\n", b, base, b, composed, composed - base);
  }
  csv.close();
  staged.commit();
  return kExitOk;
}

struct ExportOptions {
  TaskOptions task;
  std::string emit_prompts;
  std::string out_store;
  std::string aux_methods = "cc,dcpmi,dc";
};

std::vector<LogprobRequest> export_requests(const TaskOptions& o, const TaskInputs& in,
                                            const std::vector<std::string>& aux_methods) {
  std::vector<LogprobRequest> requests;
  const std::vector<std::optional<std::uint64_t>> seeds =
      in.seeds.empty() ? std::vector<std::optional<std::uint64_t>>{std::nullopt}
                       : std::vector<std::optional<std::uint64_t>>(in.seeds.begin(), in.seeds.end());
  for (const auto& template_id : in.template_ids) {
    const TaskSchema& schema = in.registry.get(o.task, template_id);
    const auto candidates = schema.candidates();
    auto add = [&](const std::string& prompt) { requests.push_back({prompt, candidates, o.model}); };
    for (const auto& seed : seeds) {
      FewShotContext ctx;
      if (seed) ctx = sample_few_shot(in.train, o.shots, *seed);
      for (const auto& [split, examples] : in.splits) {
        for (const auto& ex : examples) {
          for (RenderMode m : {RenderMode::Joint, RenderMode::PremiseOnly, RenderMode::HypothesisOnly}) {
            add(render(schema, ex, m, ctx));
          }
        }
        for (const auto& aux : aux_methods) {
          const Method method = parse_method(aux);
          for (RenderMode m : {RenderMode::Joint, RenderMode::PremiseOnly, RenderMode::HypothesisOnly}) {
            if (method == Method::CC) {
              for (const auto& p : content_free_prompts(schema, m, ctx)) add(p);
            } else if (method == Method::DC) {
              for (const auto& p : random_text_prompts(schema, examples, o.dc_samples, o.dc_seed, m, ctx)) add(p);
            }
          }
          if (method == Method::DCPMI) add(domain_prompt(schema));
        }
      }
    }
  }
  return requests;
}

int cmd_export(const ExportOptions& e, std::ostream& out) {
  const TaskOptions& o = e.task;
  const bool emit = !e.emit_prompts.empty();
  if (emit == !e.out_store.empty()) throw UsageError("export needs exactly one of --emit-prompts or --out-store");
  if (!emit) check_conflicts(o);
  std::vector<std::string> aux;
  for (const auto& m : split_list(e.aux_methods)) {
    if (m != "cc" && m != "dcpmi" && m != "dc") throw UsageError(fmt::format("no auxiliary prompts for '{}'", m));
    aux.push_back(m);
  }
  const TaskInputs in = resolve_inputs(o);
  const auto requests = export_requests(o, in, aux);

  if (emit) {
    // Prompts file for the offline exporter: one request per line, deduplicated.
    std::set<std::string> seen;
    fs::path target = e.emit_prompts;
    fs::path tmp = target;
    tmp += ".tmp";
    {
      std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
      if (!f) throw Error(ErrorKind::IoError, fmt::format("cannot write {}", tmp.string()));
      for (const auto& r : requests) {
        if (!seen.insert(r.prompt).second) continue;
        nlohmann::ordered_json doc;
        doc["model_id"] = r.model_id;
        doc["prompt"] = r.prompt;
        doc["candidates"] = r.candidates;
        f << doc.dump() << '\n';
      }
    }
    fs::rename(tmp, target);
    out << fmt::format("wrote {} prompts to {}\n", seen.size(), target.string());
    return kExitOk;
  }

  auto backend = LogprobBackend::open(backend_config(o));
  RecordStore sink;
  const std::size_t n = export_records(*backend, requests, sink);
  sink.save(e.out_store);
  out << fmt::format("wrote {} records ({} distinct) to {}\n", n, sink.size(), e.out_store);
  return kExitOk;
}

struct SynthOptions {
  double beta_p = 0.0;
  double beta_h = 0.9;
  double signal = 0.4;
  double peak_mass = 0.9;
  std::size_t labels = 2;
  std::size_t n = 10000;
  std::uint64_t seed = 7;
  std::size_t dc_samples = 20;
  std::uint64_t dc_seed = 0;
  std::string model = "default";
  std::string out;
};

int cmd_synth(const SynthOptions& s, std::ostream& out) {
  SyntheticConfig cfg{s.beta_p, s.beta_h, s.signal, s.peak_mass, s.labels, s.n, s.seed};
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const SyntheticData data = generate_synthetic(cfg);
  StagedDir staged(s.out);
  save_examples(data.examples, staged.path() / "examples.jsonl");
  synthetic_records(data, s.model, s.dc_samples, s.dc_seed)->save(staged.path() / "store.jsonl");
  {
    nlohmann::ordered_json doc;
    doc["task_id"] = data.schema.task_id;
    doc["template_id"] = data.schema.template_id;
    doc["kind"] = to_string(data.schema.kind);
    doc["template"] = data.schema.prompt_template;
    doc["labels"] = data.schema.label_space.labels();
    doc["verbalizers"] = data.schema.label_space.verbalizers();
    doc["metric"] = to_string(data.schema.metric);
    doc["domain_string"] = data.schema.domain_string;
    doc["negative_label"] = data.schema.negative_label;
    std::ofstream(staged.path() / "registry.jsonl") << doc.dump() << '\n';
  }
  {
    nlohmann::ordered_json m;
    m["task_id"] = "synthetic";
    m["format"] = "jsonl";
    m["field_map"] = {{"premise", "premise"}, {"hypothesis", "hypothesis"}, {"label", "label"}};
    nlohmann::ordered_json labels;
    for (std::size_t i = 0; i < s.labels; ++i) labels[std::to_string(i)] = i;
    m["label_map"] = labels;
    m["splits"] = {{"validation", "examples.jsonl"}};
    m["expected_counts"] = {{"validation", s.n}};
    std::ofstream(staged.path() / "manifest.json") << m.dump(2) << '\n';
  }
  {
    nlohmann::ordered_json c;
    c["beta_premise"] = s.beta_p;
    c["beta_hypothesis"] = s.beta_h;
    c["signal"] = s.signal;
    c["peak_mass"] = s.peak_mass;
    c["labels"] = s.labels;
    c["n"] = s.n;
    c["seed"] = s.seed;
    c["dc_samples"] = s.dc_samples;
    c["dc_seed"] = s.dc_seed;
    c["model"] = s.model;
    std::ofstream(staged.path() / "synth_config.json") << c.dump(2) << '\n';
  }
  staged.commit();
  out << fmt::format("wrote {} synthetic examples to {}\n", data.examples.size(), s.out);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Zero-shot calibration engine: task calibration and baseline scoring rules"};
  app.name("tcal");
  app.require_subcommand(1, 1);
  app.set_config("--config", "", "TOML/INI file supplying option defaults (flags take precedence)");

  TaskOptions run_opts, diag_opts, compare_opts;
  ExportOptions export_opts;
  SynthOptions synth_opts;
  std::string compare_baselines = "cc,dcpmi,dc,bc";

  auto* run = app.add_subcommand("run", "Evaluate methods on a task and write reports");
  add_task_options(*run, run_opts, true);
  auto* diagnose = app.add_subcommand("diagnose", "Preference-bias diagnostics for a task");
  add_task_options(*diagnose, diag_opts, false);
  auto* compare = app.add_subcommand("compare", "Each baseline against baseline+tc");
  add_task_options(*compare, compare_opts, false);
  compare->add_option("--baselines", compare_baselines, "Comma list of baselines to compose with tc")
      ->capture_default_str();

  auto* exp = app.add_subcommand("export", "Emit a prompts file, or score prompts into a record store");
  add_task_options(*exp, export_opts.task, false);
  exp->get_option("--out")->required(false);
  exp->add_option("--emit-prompts", export_opts.emit_prompts, "Write the prompts file for an offline exporter");
  exp->add_option("--out-store", export_opts.out_store, "Write scored records (canonical form) here");
  exp->add_option("--aux", export_opts.aux_methods, "Baselines whose auxiliary prompts are included")
      ->capture_default_str();

  auto* synth = app.add_subcommand("synth", "Write a synthetic preference-bias stream and record store");
  synth->add_option("--beta-p", synth_opts.beta_p, "Premise-only confound strength")->capture_default_str();
  synth->add_option("--beta-h", synth_opts.beta_h, "Hypothesis-only confound strength")->capture_default_str();
  synth->add_option("--signal", synth_opts.signal, "Weight of the truth-peaked joint component")->capture_default_str();
  synth->add_option("--peak-mass", synth_opts.peak_mass, "Mass on the peaked label")->capture_default_str();
  synth->add_option("--labels", synth_opts.labels, "Number of labels")->capture_default_str();
  synth->add_option("--n", synth_opts.n, "Number of examples")->capture_default_str();
  synth->add_option("--seed", synth_opts.seed, "Generator seed")->capture_default_str();
  synth->add_option("--dc-samples", synth_opts.dc_samples, "Random-text prompts to pre-fill")->capture_default_str();
  synth->add_option("--dc-seed", synth_opts.dc_seed, "Seed for the random-text prompts")->capture_default_str();
  synth->add_option("--model", synth_opts.model, "Model id written into records")->capture_default_str();
  synth->add_option("--out", synth_opts.out, "Output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help(app.get_subcommands().empty() ? "" : app.get_subcommands().front()->get_name());
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (run->parsed()) return cmd_run(run_opts, *run, out);
    if (diagnose->parsed()) return cmd_diagnose(diag_opts, *diagnose, out);
    if (compare->parsed()) return cmd_compare(compare_opts, compare_baselines, *compare, out);
    if (exp->parsed()) return cmd_export(export_opts, out);
    if (synth->parsed()) return cmd_synth(synth_opts, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << fmt::format("error[{}]: {}\n", to_string(e.kind()), e.what());
    return e.kind() == ErrorKind::ConfigError ? kExitUsage : kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace tcal::cli
