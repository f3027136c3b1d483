#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <filesystem>
#include <fstream>

#include "tcal/datasets.hpp"
#include "tcal/scoring.hpp"

using namespace tcal;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = TCAL_FIXTURE_DIR;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("tcal_datasets_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected tcal::Error");
  return ErrorKind::IoError;
}

DatasetManifest csv_manifest(const fs::path& dir) {
  DatasetManifest m;
  m.task_id = "toy";
  m.format = DatasetFormat::Csv;
  m.field_map = {{"s1", "premise"}, {"s2", "hypothesis"}, {"gold", "label"}};
  m.label_map = {{"yes", 0}, {"no", 1}};
  m.split_paths = {{"validation", dir / "dev.csv"}};
  return m;
}

}  // namespace

TEST_CASE("tsv manifest loads the fixture") {
  const auto m = DatasetManifest::load(kFixtures / "rte_mini" / "manifest.json");
  const auto dev = load_split(m, m.eval_split);
  REQUIRE(dev.size() == 8);
  CHECK(dev[0].premise == "The cat sat on the mat.");
  CHECK(dev[0].hypothesis == "A cat is on a mat");
  CHECK(dev[0].gold_label == 0u);
  CHECK(dev[1].gold_label == 1u);
  REQUIRE(m.train_split);
  CHECK(load_split(m, *m.train_split).size() == 4);
}

TEST_CASE("csv with quoted separators, quotes and newlines") {
  const auto dir = scratch_dir("csv");
  std::ofstream(dir / "dev.csv") << "s1,s2,gold\n"
                                    "\"Hello, world.\",\"She said \"\"hi\"\"\",yes\n"
                                    "\"two\nlines\",plain,no\n";
  const auto ex = load_split(csv_manifest(dir), "validation");
  REQUIRE(ex.size() == 2);
  CHECK(ex[0].premise == "Hello, world.");
  CHECK(ex[0].hypothesis == "She said \"hi\"");
  CHECK(ex[1].premise == "two\nlines");
  CHECK(ex[1].gold_label == 1u);
  fs::remove_all(dir);
}

TEST_CASE("unmapped labels name the row") {
  const auto dir = scratch_dir("labelmap");
  std::ofstream(dir / "dev.csv") << "s1,s2,gold\na,b,yes\nc,d,maybe\n";
  try {
    load_split(csv_manifest(dir), "validation");
    FAIL("expected label map error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::LabelMapError);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    CHECK(std::string(e.what()).find("maybe") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("short rows and missing columns are parse errors") {
  const auto dir = scratch_dir("short");
  std::ofstream(dir / "dev.csv") << "s1,s2,gold\na,b\n";
  CHECK(kind_of([&] { load_split(csv_manifest(dir), "validation"); }) == ErrorKind::ParseError);
  std::ofstream(dir / "dev.csv") << "s1,other,gold\na,b,yes\n";
  CHECK(kind_of([&] { load_split(csv_manifest(dir), "validation"); }) == ErrorKind::ParseError);
  fs::remove_all(dir);
}

TEST_CASE("expected counts are enforced") {
  const auto dir = scratch_dir("count");
  std::ofstream(dir / "dev.csv") << "s1,s2,gold\na,b,yes\n";
  auto m = csv_manifest(dir);
  m.expected_counts = {{"validation", 277}};
  try {
    load_split(m, "validation");
    FAIL("expected count mismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::CountMismatch);
    CHECK(std::string(e.what()).find("277") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("jsonl splits and unknown splits") {
  const auto dir = scratch_dir("jsonl");
  std::ofstream(dir / "val.jsonl") << R"({"premise":"p1","hypothesis":"h1","label":"entailment","idx":0})" << "\n"
                                   << R"({"premise":"p2","hypothesis":"h2","label":"neutral","idx":1})" << "\n";
  DatasetManifest m;
  m.task_id = "cb";
  m.format = DatasetFormat::Jsonl;
  m.field_map = {{"premise", "premise"}, {"hypothesis", "hypothesis"}, {"label", "label"}};
  m.label_map = {{"entailment", 0}, {"contradiction", 1}, {"neutral", 2}};
  m.split_paths = {{"validation", dir / "val.jsonl"}};
  const auto ex = load_split(m, "validation");
  REQUIRE(ex.size() == 2);
  CHECK(ex[1].gold_label == 2u);
  CHECK(kind_of([&] { load_split(m, "test"); }) == ErrorKind::ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("manifest validation") {
  DatasetManifest m;
  CHECK_THROWS_AS(m.validate(), Error);
  m.task_id = "x";
  m.field_map = {{"a", "premise"}, {"b", "hypothesis"}};
  m.label_map = {{"y", 0}};
  m.split_paths = {{"validation", "v.tsv"}};
  CHECK_THROWS_AS(m.validate(), Error);  // no label column
}

TEST_CASE("example files round-trip") {
  const auto dir = scratch_dir("examples");
  const std::vector<Example> ex{{"p \"quoted\"", "h\tt", 1}, {"unlabelled", "x", std::nullopt}};
  save_examples(ex, dir / "e.jsonl");
  CHECK(load_examples(dir / "e.jsonl") == ex);
  fs::remove_all(dir);
}

TEST_CASE("synthetic generator follows its mixture definition") {
  SyntheticConfig cfg;
  cfg.n = 200;
  const SyntheticData d = generate_synthetic(cfg);
  REQUIRE(d.examples.size() == 200);
  for (std::size_t i = 0; i < d.examples.size(); ++i) {
    const std::size_t g = *d.examples[i].gold_label, k = d.confounds[i];
    const ProbVector pg = peaked_distribution(g, 0.9, 2), pk = peaked_distribution(k, 0.9, 2);
    for (std::size_t y = 0; y < 2; ++y) {
      CHECK(d.triples[i].joint[y] == doctest::Approx(0.4 * pg[y] + 0.6 * pk[y]));
      CHECK(d.triples[i].premise_only[y] == doctest::Approx(0.5));
      CHECK(d.triples[i].hypothesis_only[y] == doctest::Approx(0.9 * pk[y] + 0.1 * 0.5));
    }
  }
  const SyntheticData again = generate_synthetic(cfg);
  CHECK(again.confounds == d.confounds);
  cfg.seed = 8;
  CHECK(generate_synthetic(cfg).confounds != d.confounds);
}

TEST_CASE("synthetic gold and confound are independent and uniform") {
  SyntheticConfig cfg;
  cfg.num_labels = 3;
  cfg.n = 9000;
  const SyntheticData d = generate_synthetic(cfg);
  double table[3][3] = {};
  for (std::size_t i = 0; i < d.examples.size(); ++i) table[*d.examples[i].gold_label][d.confounds[i]] += 1;
  // Chi-square against the uniform product distribution, 8 degrees of freedom.
  const double expected = cfg.n / 9.0;
  double stat = 0.0;
  for (auto& row : table)
    for (double o : row) stat += (o - expected) * (o - expected) / expected;
  const double p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(8), stat));
  CHECK(p > 0.001);
}

TEST_CASE("synthetic config validation") {
  SyntheticConfig cfg;
  cfg.signal = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.num_labels = 1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.beta_hypothesis = 1.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.n = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}
