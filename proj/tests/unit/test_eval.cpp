#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "support/oracle.hpp"
#include "tcal/datasets.hpp"
#include "tcal/eval.hpp"

using namespace tcal;
namespace fs = std::filesystem;

namespace {

EvalReport run_injected(const std::vector<Example>& ex, const std::vector<ProbTriple>& triples,
                        const std::string& methods, const TaskSchema& schema) {
  InjectedTripleSource source(triples);
  RunSpec spec;
  spec.task_id = schema.task_id;
  spec.methods = parse_method_list(methods);
  return evaluate(spec, schema, ex, source);
}

MethodResult fixed(const std::string& name, const std::vector<std::size_t>& labels) {
  MethodResult r;
  r.name = name;
  for (std::size_t l : labels) r.predictions.push_back(Prediction{l, ScoreVector({0.0}), Method::Original, false});
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("metrics agree with a confusion-matrix reference on random predictions") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t c = 2 + trial % 3;
    const std::size_t n = 1 + rng() % 60;
    std::vector<std::size_t> pred(n), gold(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = rng() % c;
      gold[i] = rng() % c;
    }
    REQUIRE(accuracy(pred, gold) == doctest::Approx(testing::accuracy_ref(pred, gold)).epsilon(1e-12));
    REQUIRE(macro_f1(pred, gold, c) == doctest::Approx(testing::macro_f1_ref(pred, gold, c)).epsilon(1e-12));
  }
}

TEST_CASE("constant predictor on balanced three-class data scores 16.7 macro-F1") {
  std::vector<std::size_t> gold, pred;
  for (int i = 0; i < 30; ++i) {
    gold.push_back(i % 3);
    pred.push_back(0);
  }
  CHECK(macro_f1(pred, gold, 3) == doctest::Approx(16.7).epsilon(0.1 / 16.7));
  CHECK(accuracy(pred, gold) == doctest::Approx(100.0 / 3.0));
}

TEST_CASE("metric argument checks") {
  const std::vector<std::size_t> a{0, 1}, b{0};
  CHECK_THROWS_AS(accuracy(a, b), Error);
  CHECK_THROWS_AS(accuracy({}, {}), Error);
  const std::vector<std::size_t> out_of_range{0, 5};
  CHECK_THROWS_AS(macro_f1(out_of_range, a, 2), Error);
}

TEST_CASE("flip accounting fixture") {
  // 3 labels, 20 examples: 10 original errors, of which TC fixes 6 and moves 1
  // to another wrong label; TC also breaks 2 of the 10 originally correct.
  EvalReport r;
  std::vector<std::size_t> orig, tc;
  for (std::size_t i = 0; i < 20; ++i) {
    r.gold.push_back(0);
    if (i < 10) {
      orig.push_back(0);
      tc.push_back(i < 2 ? 1 : 0);
    } else {
      orig.push_back(1);
      if (i < 16) {
        tc.push_back(0);
      } else if (i == 16) {
        tc.push_back(2);
      } else {
        tc.push_back(1);
      }
    }
  }
  r.methods = {fixed("original", orig), fixed("tc", tc)};
  const FlipAccounting f = flip_accounting(r);
  CHECK(f.original_errors == 10);
  CHECK(f.corrected == 6);
  CHECK(f.changed_but_wrong == 1);
  CHECK(f.newly_broken == 2);
  CHECK(*f.corrected_pct == doctest::Approx(60.0));
  CHECK(*f.broken_pct == doctest::Approx(10.0));
}

TEST_CASE("flip percentages are absent without original errors") {
  EvalReport r;
  r.gold = {0, 1};
  r.methods = {fixed("original", {0, 1}), fixed("tc", {0, 0})};
  const FlipAccounting f = flip_accounting(r);
  CHECK(f.original_errors == 0);
  CHECK_FALSE(f.corrected_pct.has_value());
  CHECK(f.newly_broken == 1);
}

TEST_CASE("robustness aggregate uses the population standard deviation") {
  EvalReport a, b;
  a.methods = {fixed("tc", {})};
  b.methods = {fixed("tc", {})};
  a.methods[0].metric = 60.0;
  b.methods[0].metric = 70.0;
  const std::vector<EvalReport> reports{a, b};
  const auto agg = aggregate_robustness(reports);
  REQUIRE(agg.size() == 1);
  CHECK(agg[0].mean == doctest::Approx(65.0));
  CHECK(agg[0].stddev == doctest::Approx(5.0));
  CHECK(agg[0].count == 2);
  CHECK_THROWS_AS(aggregate_robustness(std::span<const EvalReport>(reports.data(), 1)), Error);
  std::vector<EvalReport> mismatched{a, b};
  mismatched[1].methods[0].name = "bc";
  CHECK_THROWS_AS(aggregate_robustness(mismatched), Error);
}

TEST_CASE("method list parsing") {
  const auto m = parse_method_list("original, tc,bc+tc");
  REQUIRE(m.size() == 3);
  CHECK(m[2].method == Method::Composed);
  CHECK(*m[2].inner_method == Method::BC);
  CHECK_THROWS_AS(parse_method_list("tc,tc"), Error);
  CHECK_THROWS_AS(parse_method_list("tc+tc"), Error);
  CHECK_THROWS_AS(parse_method_list("original,,tc"), Error);
  CHECK_THROWS_AS(parse_method_list("softmax"), Error);
}

TEST_CASE("bias diagnostics count negative-label preference and error alignment") {
  const std::vector<Example> ex{{"a", "b", 0}, {"a", "b", 0}, {"a", "b", 1}, {"a", "b", 1}};
  const std::vector<ProbTriple> t{
      {ProbVector({0.3, 0.7}), ProbVector({0.6, 0.4}), ProbVector({0.2, 0.8})},  // error, aligns with hyp
      {ProbVector({0.8, 0.2}), ProbVector({0.4, 0.6}), ProbVector({0.3, 0.7})},  // correct
      {ProbVector({0.9, 0.1}), ProbVector({0.7, 0.3}), ProbVector({0.4, 0.6})},  // error, aligns with premise
      {ProbVector({0.1, 0.9}), ProbVector({0.5, 0.5}), ProbVector({0.1, 0.9})},  // correct; premise tie -> 0
  };
  const LabelSpace ls({"entailment", "not_entailment"}, {"true", "false"});
  const BiasDiagnostics d = bias_diagnostics(ex, t, ls, 1);
  CHECK(d.premise_negative_pct == doctest::Approx(25.0));
  CHECK(d.hypothesis_negative_pct == doctest::Approx(100.0));
  CHECK(d.joint_errors == 2);
  CHECK(*d.premise_alignment_pct == doctest::Approx(50.0));
  CHECK(*d.hypothesis_alignment_pct == doctest::Approx(50.0));
}

TEST_CASE("bc predictions do not depend on example order") {
  SyntheticConfig cfg;
  cfg.n = 500;
  cfg.seed = 3;
  const SyntheticData d = generate_synthetic(cfg);
  const EvalReport base = run_injected(d.examples, d.triples, "bc,bc+tc", d.schema);

  std::vector<std::size_t> perm(d.examples.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(99));
  std::vector<Example> ex;
  std::vector<ProbTriple> tr;
  for (std::size_t i : perm) {
    ex.push_back(d.examples[i]);
    tr.push_back(d.triples[i]);
  }
  const EvalReport shuffled = run_injected(ex, tr, "bc,bc+tc", d.schema);
  for (std::size_t m = 0; m < 2; ++m) {
    std::size_t same = 0;
    for (std::size_t k = 0; k < perm.size(); ++k) {
      same += shuffled.methods[m].predictions[k].label_index == base.methods[m].predictions[perm[k]].label_index;
    }
    CHECK(same == perm.size());
  }
}

TEST_CASE("evaluation is deterministic and reports are byte-identical") {
  SyntheticConfig cfg;
  cfg.n = 300;
  const SyntheticData d = generate_synthetic(cfg);
  const auto dir = fs::temp_directory_path() / "tcal_eval_det";
  fs::remove_all(dir);
  for (int run = 0; run < 2; ++run) {
    std::vector<EvalReport> r{run_injected(d.examples, d.triples, "original,cc,dc,dcpmi,bc,tc,bc+tc", d.schema)};
    write_report_csv(r, dir / std::to_string(run) / "report.csv");
    write_audit_csv(r[0], dir / std::to_string(run) / "audit.csv");
  }
  CHECK(slurp(dir / "0" / "report.csv") == slurp(dir / "1" / "report.csv"));
  CHECK(slurp(dir / "0" / "audit.csv") == slurp(dir / "1" / "audit.csv"));
  const std::string report = slurp(dir / "0" / "report.csv");
  CHECK(report.find("# eps: 1e-12") != std::string::npos);
  CHECK(report.find("task,template,split,n_shots,seed,method,metric,value,n_examples") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("evaluation requires gold labels") {
  const TaskSchema schema = synthetic_schema(2);
  const std::vector<Example> ex{{"p", "h", std::nullopt}};
  const std::vector<ProbTriple> tr{{ProbVector::uniform(2), ProbVector::uniform(2), ProbVector::uniform(2)}};
  CHECK_THROWS_AS(run_injected(ex, tr, "tc", schema), Error);
}

TEST_CASE("stance tasks report macro-F1") {
  TaskSchema s = synthetic_schema(3);
  s.kind = TaskKind::Stance;
  s.metric = MetricKind::MacroF1;
  std::vector<Example> ex;
  std::vector<ProbTriple> tr;
  for (std::size_t i = 0; i < 30; ++i) {
    ex.push_back({"p", "h", i % 3});
    tr.emplace_back(ProbVector({0.5, 0.3, 0.2}), ProbVector::uniform(3), ProbVector::uniform(3));
  }
  const EvalReport r = run_injected(ex, tr, "original", s);
  CHECK(r.methods[0].metric == doctest::Approx(100.0 / 6.0));
}

TEST_CASE("premise-only streams that always pick the negative label give a 100% row") {
  const std::vector<Example> ex{{"a", "b", 0}, {"c", "d", 1}, {"e", "f", 0}};
  std::vector<ProbTriple> t;
  for (int i = 0; i < 3; ++i) t.emplace_back(ProbVector({0.9, 0.1}), ProbVector({0.2, 0.8}), ProbVector({0.6, 0.4}));
  const LabelSpace ls({"entailment", "not_entailment"}, {"true", "false"});
  const BiasDiagnostics d = bias_diagnostics(ex, t, ls, 1);
  CHECK(d.premise_negative_pct == doctest::Approx(100.0));
  CHECK(d.hypothesis_negative_pct == doctest::Approx(0.0));
}

TEST_CASE("no joint errors leaves alignment absent and the summary says n/a") {
  const std::vector<Example> ex{{"a", "b", 0}, {"c", "d", 1}};
  const std::vector<ProbTriple> t{{ProbVector({0.9, 0.1}), ProbVector({0.5, 0.5}), ProbVector({0.5, 0.5})},
                                  {ProbVector({0.2, 0.8}), ProbVector({0.5, 0.5}), ProbVector({0.5, 0.5})}};
  const EvalReport r = run_injected(ex, t, "original,tc", synthetic_schema(2));
  CHECK(r.diagnostics.joint_errors == 0);
  CHECK_FALSE(r.diagnostics.premise_alignment_pct.has_value());
  const auto dir = fs::temp_directory_path() / "tcal_eval_na";
  const std::vector<EvalReport> reports{r};
  write_summary_md(reports, {}, dir / "summary.md");
  write_diagnostics_csv(reports, dir / "diagnostics.csv");
  CHECK(slurp(dir / "summary.md").find("alignment: n/a") != std::string::npos);
  CHECK(slurp(dir / "diagnostics.csv").find(",0,n/a,n/a,") != std::string::npos);
  fs::remove_all(dir);
}
