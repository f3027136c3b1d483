#include <fstream>

#include <fmt/format.h>

#include "tcal/eval.hpp"

namespace tcal {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, fmt::format("cannot write {}", path.string()));
  return out;
}

std::string seed_text(const EvalReport& r) { return r.seed ? std::to_string(*r.seed) : std::string("-"); }

std::string split_text(const EvalReport& r) { return r.split.empty() ? std::string("-") : r.split; }

std::string opt_pct(const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : std::string("n/a"); }

// Quotes a CSV field when it holds a separator, quote or newline.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_settings(std::ostream& out, const EvalReport& r) {
  for (const auto& [k, v] : r.settings) out << "# " << k << ": " << v << '\n';
}

}  // namespace

void write_report_csv(std::span<const EvalReport> reports, const std::filesystem::path& path) {
  auto out = open_out(path);
  if (!reports.empty()) write_settings(out, reports.front());
  out << "task,template,split,n_shots,seed,method,metric,value,n_examples\n";
  for (const auto& r : reports) {
    for (const auto& m : r.methods) {
      out << fmt::format("{},{},{},{},{},{},{},{:.4f},{}\n", csv_field(r.task_id), csv_field(r.template_id),
                         csv_field(split_text(r)), r.n_shots, seed_text(r), m.name, to_string(r.metric), m.metric,
                         r.gold.size());
    }
  }
}

void write_audit_csv(const EvalReport& report, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_settings(out, report);
  const std::size_t c = report.num_labels;
  out << "index,gold,joint_hash,premise_hash,hypothesis_hash";
  for (const char* stream : {"joint", "premise", "hypothesis"}) {
    for (std::size_t y = 0; y < c; ++y) out << ',' << stream << "_p" << y;
  }
  for (const auto& m : report.methods) {
    for (std::size_t y = 0; y < c; ++y) out << ',' << m.name << "_s" << y;
    out << ',' << m.name << "_pred," << m.name << "_tie";
  }
  out << '\n';
  for (std::size_t i = 0; i < report.triples.size(); ++i) {
    const auto& t = report.triples[i];
    out << i << ',' << (report.gold[i] ? std::to_string(*report.gold[i]) : std::string());
    for (const auto& h : t.prompt_hashes) out << ',' << h;
    for (const ProbVector* v : {&t.triple.joint, &t.triple.premise_only, &t.triple.hypothesis_only}) {
      for (double p : v->values()) out << fmt::format(",{:.17g}", p);
    }
    for (const auto& m : report.methods) {
      const auto& pred = m.predictions[i];
      for (double s : pred.scores.values()) out << fmt::format(",{:.17g}", s);
      out << ',' << pred.label_index << ',' << (pred.tie_broken ? 1 : 0);
    }
    out << '\n';
  }
}

void write_diagnostics_csv(std::span<const EvalReport> reports, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "task,template,split,n_shots,seed,n,premise_negative_pct,hypothesis_negative_pct,joint_errors,"
         "premise_alignment_pct,hypothesis_alignment_pct,flip_original_errors,flip_corrected_pct,"
         "flip_changed_wrong_pct,flip_newly_broken\n";
  for (const auto& r : reports) {
    const auto& d = r.diagnostics;
    out << fmt::format("{},{},{},{},{},{},{:.4f},{:.4f},{},{},{},", csv_field(r.task_id), csv_field(r.template_id),
                       csv_field(split_text(r)), r.n_shots, seed_text(r), d.n, d.premise_negative_pct,
                       d.hypothesis_negative_pct, d.joint_errors, opt_pct(d.premise_alignment_pct),
                       opt_pct(d.hypothesis_alignment_pct));
    if (r.flips) {
      out << fmt::format("{},{},{},{}\n", r.flips->original_errors, opt_pct(r.flips->corrected_pct),
                         opt_pct(r.flips->broken_pct), r.flips->newly_broken);
    } else {
      out << "n/a,n/a,n/a,n/a\n";
    }
  }
}

void write_aggregate_csv(std::span<const MethodAggregate> aggregates, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "method,mean,std,count\n";
  for (const auto& a : aggregates) out << fmt::format("{},{:.4f},{:.4f},{}\n", a.method, a.mean, a.stddev, a.count);
}

void write_summary_md(std::span<const EvalReport> reports, std::span<const MethodAggregate> aggregates,
                      const std::filesystem::path& path) {
  auto out = open_out(path);
  if (reports.empty()) {
    out << "# Evaluation summary\n\nNo reports.\n";
    return;
  }
  const auto& first = reports.front();
  out << fmt::format("# Evaluation summary: {}\n\n", first.task_id);
  out << fmt::format("Metric: {} over {} examples, {} labels, {} shot(s).\n\n", to_string(first.metric),
                     first.gold.size(), first.num_labels, first.n_shots);

  out << "| template | split | seed |";
  for (const auto& m : first.methods) out << ' ' << m.name << " |";
  out << "\n|---|---|---|";
  for (std::size_t i = 0; i < first.methods.size(); ++i) out << "---:|";
  out << '\n';
  for (const auto& r : reports) {
    out << "| " << r.template_id << " | " << split_text(r) << " | " << seed_text(r) << " |";
    for (const auto& m : r.methods) out << fmt::format(" {:.2f} |", m.metric);
    out << '\n';
  }
  if (!aggregates.empty()) {
    out << "| mean ± std | | |";
    for (const auto& a : aggregates) out << fmt::format(" {:.2f} ± {:.2f} |", a.mean, a.stddev);
    out << '\n';
  }

  out << "\n## Preference-bias diagnostics\n\n";
  for (const auto& r : reports) {
    const auto& d = r.diagnostics;
    out << fmt::format(
        "- template {}, split {}, seed {}: premise-only on negative label {:.2f}%, "
        "hypothesis-only {:.2f}%; ",
        r.template_id, split_text(r), seed_text(r), d.premise_negative_pct, d.hypothesis_negative_pct);
    if (d.joint_errors == 0) {
      out << "alignment: n/a (no joint errors)\n";
    } else {
      out << fmt::format("of {} joint errors {}% match premise-only, {}% match hypothesis-only\n", d.joint_errors,
                         opt_pct(d.premise_alignment_pct), opt_pct(d.hypothesis_alignment_pct));
    }
    if (r.flips) {
      out << fmt::format("  - flips: {} original errors, corrected {}%, changed but wrong {}%, newly broken {}\n",
                         r.flips->original_errors, opt_pct(r.flips->corrected_pct), opt_pct(r.flips->broken_pct),
                         r.flips->newly_broken);
    }
  }

  out << "\n## Settings\n\n";
  for (const auto& [k, v] : first.settings) out << "- " << k << ": " << v << '\n';
}

}  // namespace tcal
