#include <doctest.h>

#include <algorithm>
#include <random>

#include "support/oracle.hpp"
#include "tcal/scoring.hpp"

using namespace tcal;
using tcal::testing::Vec;

namespace {

ProbTriple triple(Vec j, Vec p, Vec h) { return ProbTriple(ProbVector(j), ProbVector(p), ProbVector(h)); }

MethodConfig composed(Method inner, const BaselineAux& aux) {
  MethodConfig c;
  c.method = Method::Composed;
  c.inner_method = inner;
  c.stream_aux = {aux, aux, aux};
  return c;
}

}  // namespace

TEST_CASE("tc fixed points from the mpmath oracle") {
  const ScoreVector a = score_tc(triple({0.6, 0.4}, {0.8, 0.2}, {0.8, 0.2}));
  CHECK(a[0] == doctest::Approx(-0.34521848694213711).epsilon(1e-13));
  CHECK(a[1] == doctest::Approx(0.55451774444795625).epsilon(1e-13));
  CHECK(argmax_with_ties(a).label_index == 1);  // flips the uncalibrated choice

  const ScoreVector b = score_tc(triple({0.4, 0.6}, {0.5, 0.5}, {0.1, 0.9}));
  CHECK(b[0] == doctest::Approx(0.46526032392227235).epsilon(1e-13));
  CHECK(b[1] == doctest::Approx(-0.13388613078852585).epsilon(1e-13));
}

TEST_CASE("cc and dcpmi fixed points") {
  const ScoreVector cc = score_cc(ProbVector({0.7, 0.3}), std::vector<ProbVector>{ProbVector({0.875, 0.125})});
  CHECK(cc[0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(cc[1] == doctest::Approx(0.75).epsilon(1e-14));
  const ScoreVector d = score_dcpmi(ProbVector({0.6, 0.4}), ProbVector({0.75, 0.25}));
  CHECK(d[0] == doctest::Approx(-0.22314355131420976).epsilon(1e-13));
  CHECK(d[1] == doctest::Approx(0.47000362924573555).epsilon(1e-13));
}

TEST_CASE("cc averages several content-free inputs before dividing") {
  const std::vector<ProbVector> cf{ProbVector({0.9, 0.1}), ProbVector({0.85, 0.15}), ProbVector({0.875, 0.125})};
  const ScoreVector s = score_cc(ProbVector({0.7, 0.3}), cf);
  CHECK(s[0] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("tc agrees with the brute-force form on random clamped triples") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t c = 2 + trial % 2;
    const Vec j = testing::random_dist(rng, c), p = testing::random_dist(rng, c), h = testing::random_dist(rng, c);
    const ScoreVector got = score_tc(triple(j, p, h));
    const Vec want = testing::tc_ref(j, p, h);
    for (std::size_t y = 0; y < c; ++y) REQUIRE(got[y] == doctest::Approx(want[y]).epsilon(1e-9));
  }
}

TEST_CASE("baselines agree with brute-force forms") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t c = 2 + trial % 3;
    const Vec p = testing::random_dist(rng, c);
    std::vector<Vec> aux_v;
    std::vector<ProbVector> aux;
    for (int k = 0; k < 3; ++k) {
      aux_v.push_back(testing::random_dist(rng, c, false));
      aux.emplace_back(aux_v.back());
    }
    const Vec mean = testing::mean_ref(aux_v);
    const Vec want = testing::ratio_ref(p, mean);
    const ScoreVector cc = score_cc(ProbVector(p), aux);
    const ScoreVector dc = score_dc(ProbVector(p), aux);
    const ScoreVector bc = score_bc(ProbVector(p), estimate_bc_prior(aux));
    const ScoreVector dcpmi = score_dcpmi(ProbVector(p), aux.front());
    const Vec want_pmi = testing::log_ratio_ref(p, aux_v.front());
    for (std::size_t y = 0; y < c; ++y) {
      REQUIRE(cc[y] == doctest::Approx(want[y]).epsilon(1e-9));
      REQUIRE(dc[y] == doctest::Approx(want[y]).epsilon(1e-9));
      REQUIRE(bc[y] == doctest::Approx(want[y]).epsilon(1e-9));
      REQUIRE(dcpmi[y] == doctest::Approx(want_pmi[y]).epsilon(1e-9));
    }
  }
}

TEST_CASE("swapping premise and hypothesis streams leaves tc unchanged") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t c = 2 + trial % 3;
    const Vec j = testing::random_dist(rng, c), p = testing::random_dist(rng, c), h = testing::random_dist(rng, c);
    const ScoreVector a = score_tc(triple(j, p, h));
    const ScoreVector b = score_tc(triple(j, h, p));
    for (std::size_t y = 0; y < c; ++y) REQUIRE(a[y] == b[y]);
  }
}

TEST_CASE("uniform partial streams do not move the argmax of a peaked joint") {
  // With both partial streams uniform the score is j*log(j^2*C^2): monotone in j
  // for j above 1/(e*C), which holds for the winning entry.
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t c = 2 + trial % 3;
    const Vec j = testing::random_dist(rng, c, false);
    const ScoreVector s = score_tc(triple(j, Vec(c, 1.0 / c), Vec(c, 1.0 / c)));
    REQUIRE(argmax_with_ties(s).label_index == testing::argmax_ref(j));
  }
}

TEST_CASE("joint squared equal to the product gives zero scores") {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 500; ++trial) {
    const Vec j = testing::random_dist(rng, 3, false);
    const ScoreVector s = score_tc(triple(j, j, j));
    for (double v : s.values()) REQUIRE(std::abs(v) <= 1e-12);
  }
}

TEST_CASE("uniform auxiliaries leave every baseline argmax-identical to original") {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t c = 2 + trial % 3;
    const ProbVector p(testing::random_dist(rng, c));
    const std::size_t want = argmax_with_ties(ScoreVector({p.values().begin(), p.values().end()})).label_index;
    const std::vector<ProbVector> u{ProbVector::uniform(c)};
    REQUIRE(argmax_with_ties(score_cc(p, u)).label_index == want);
    REQUIRE(argmax_with_ties(score_dc(p, u)).label_index == want);
    REQUIRE(argmax_with_ties(score_bc(p, u.front())).label_index == want);
    REQUIRE(argmax_with_ties(score_dcpmi(p, u.front())).label_index == want);
  }
}

TEST_CASE("composition with uniform inner auxiliaries is exactly tc") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t c = 2 + trial % 2;
    const ProbTriple t =
        triple(testing::random_dist(rng, c), testing::random_dist(rng, c), testing::random_dist(rng, c));
    BaselineAux aux;
    aux.content_free = {ProbVector::uniform(c)};
    aux.domain = ProbVector::uniform(c);
    aux.random = {ProbVector::uniform(c), ProbVector::uniform(c)};
    aux.prior = ProbVector::uniform(c);
    const ScoreVector plain = score_tc(t);
    for (Method inner : {Method::CC, Method::DCPMI, Method::DC, Method::BC}) {
      const ScoreVector s = score_composed(t, composed(inner, aux));
      for (std::size_t y = 0; y < c; ++y) REQUIRE(s[y] == plain[y]);
    }
  }
}

TEST_CASE("composition calibrates each stream with its own auxiliaries") {
  const ProbTriple t = triple({0.6, 0.4}, {0.7, 0.3}, {0.8, 0.2});
  MethodConfig cfg;
  cfg.method = Method::Composed;
  cfg.inner_method = Method::BC;
  cfg.stream_aux[0].prior = ProbVector({0.6, 0.4});
  cfg.stream_aux[1].prior = ProbVector({0.7, 0.3});
  cfg.stream_aux[2].prior = ProbVector({0.8, 0.2});
  // Every stream divides to uniform, so the score is 0.5*log(1) = 0.
  const ScoreVector s = score_composed(t, cfg);
  CHECK(s[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("dispatch and config validation") {
  const ProbTriple t = triple({0.6, 0.4}, {0.5, 0.5}, {0.5, 0.5});
  MethodConfig cc;
  cc.method = Method::CC;
  CHECK_THROWS_AS(score(t, cc), Error);
  cc.aux.content_free = {ProbVector::uniform(3)};
  CHECK_THROWS_AS(score(t, cc), Error);
  cc.aux.content_free = {ProbVector::uniform(2)};
  CHECK(score(t, cc)[0] == doctest::Approx(0.6));

  MethodConfig bad;
  bad.method = Method::Composed;
  bad.inner_method = Method::TC;
  CHECK_THROWS_AS(bad.validate(2), Error);
  CHECK(composed(Method::DC, {}).name() == "dc+tc");

  CHECK_THROWS_AS(estimate_bc_prior({}), Error);
}

TEST_CASE("bc prior is the batch mean") {
  const std::vector<ProbVector> batch{ProbVector({0.9, 0.1}), ProbVector({0.5, 0.5}), ProbVector({0.4, 0.6})};
  const ProbVector prior = estimate_bc_prior(batch);
  CHECK(prior[0] == doctest::Approx(0.6));
  const ScoreVector s = score_bc(batch[2], prior);
  // (0.4/0.6, 0.6/0.4) renormalized
  CHECK(s[0] == doctest::Approx((0.4 / 0.6) / (0.4 / 0.6 + 0.6 / 0.4)));
}

TEST_CASE("uniform content-free prior is the identity on p") {
  const ProbVector p({0.3, 0.5, 0.2});
  const ScoreVector s = score_cc(p, std::vector<ProbVector>{ProbVector::uniform(3)});
  for (std::size_t y = 0; y < 3; ++y) CHECK(s[y] == p[y]);
}

TEST_CASE("bc priors equal to each stream give all-zero scores and a tie at index 0") {
  const ProbTriple t = triple({0.2, 0.5, 0.3}, {0.1, 0.1, 0.8}, {0.6, 0.3, 0.1});
  MethodConfig cfg = composed(Method::BC, {});
  cfg.stream_aux[0].prior = t.joint;
  cfg.stream_aux[1].prior = t.premise_only;
  cfg.stream_aux[2].prior = t.hypothesis_only;
  const Prediction p = argmax_with_ties(score_composed(t, cfg), Method::Composed);
  for (double v : p.scores.values()) CHECK(std::abs(v) < 1e-15);
  CHECK(p.label_index == 0);
  CHECK(p.tie_broken);
}
