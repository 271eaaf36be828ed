#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "verikit/losses.hpp"
#include "verikit/rng.hpp"

using namespace verikit;
using namespace verikit::losses;
namespace hy = verikit::hypotheses;
namespace rq = verikit::requirements;

namespace {

Vector vec(std::initializer_list<double> values) {
  Vector x(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) x(i++) = v;
  return x;
}

hy::Scorer constant_scores(std::vector<double> values) {
  hy::Scorer s;
  s.label_count = static_cast<int>(values.size());
  s.score = [values](const Vector&, int y) { return values[static_cast<std::size_t>(y - 1)]; };
  return s;
}

// Uniform distribution over labeled points.
FiniteDistribution uniform_over(std::vector<std::pair<Vector, int>> atoms) {
  FiniteDistribution dist;
  double p = 1.0 / static_cast<double>(atoms.size());
  for (auto& [x, y] : atoms) dist.support.push_back({x, y, p});
  return dist;
}

}  // namespace

TEST_CASE("ramp loss boundary values and Lipschitz constant") {
  CHECK(ramp_loss(0.0, 1.0) == 1.0);
  CHECK(ramp_loss(-3.0, 1.0) == 1.0);
  CHECK(ramp_loss(1.0, 1.0) == 0.0);
  CHECK(ramp_loss(7.0, 1.0) == 0.0);
  CHECK(ramp_loss(0.5, 1.0) == doctest::Approx(0.5));
  CHECK(ramp_loss(1.0, 4.0) == doctest::Approx(0.75));
  CHECK_THROWS_AS(ramp_loss(0.0, 0.0), NonpositiveRho);
  CHECK_THROWS_AS(ramp_loss(0.0, -1.0), NonpositiveRho);

  Rng rng(11);
  for (int trial = 0; trial < 10000; ++trial) {
    double rho = rng.uniform(0.1, 3.0);
    double t1 = rng.uniform(-4.0, 4.0);
    double t2 = rng.uniform(-4.0, 4.0);
    double lhs = std::abs(ramp_loss(t1, rho) - ramp_loss(t2, rho));
    CHECK(lhs <= std::abs(t1 - t2) / rho + 1e-12);
    CHECK(ramp_loss(t1, rho) >= 0.0);
    CHECK(ramp_loss(t1, rho) <= 1.0);
  }
}

TEST_CASE("clamp loss pins to the [0, bound] range") {
  CHECK(clamp_loss(-1.0, 1.0) == 0.0);
  CHECK(clamp_loss(2.0, 1.0) == 1.0);
  CHECK(clamp_loss(0.5, 1.0) == 0.5);
  CHECK(clamp_loss(3.0, 2.5) == 2.5);
  CHECK(clamp_loss(-std::numeric_limits<double>::infinity(), 1.0) == 0.0);
}

TEST_CASE("zero-one loss conventions differ exactly on ties") {
  hy::Scorer tied = constant_scores({0.5, 0.5});
  hy::Predictor p = hy::as_predictor(tied);

  // the predictor picks label 1 on the tie, so label 1 is charged nothing
  CHECK(zero_one_loss(p, vec({0.0}), 1) == 0);
  CHECK(zero_one_loss(p, vec({0.0}), 2) == 1);
  // the margin convention charges both
  CHECK(margin_zero_one_loss(tied, vec({0.0}), 1) == 1);
  CHECK(margin_zero_one_loss(tied, vec({0.0}), 2) == 1);

  hy::Scorer clear = constant_scores({0.9, 0.1});
  CHECK(margin_zero_one_loss(clear, vec({0.0}), 1) == 0);
  CHECK(margin_zero_one_loss(clear, vec({0.0}), 2) == 1);
  CHECK(zero_one_loss(hy::as_predictor(clear), vec({0.0}), 1) == 0);
}

TEST_CASE("margin loss dominates the margin zero-one loss pointwise") {
  Rng rng(21);
  for (int trial = 0; trial < 1000; ++trial) {
    int K = rng.uniform_int(2, 5);
    hy::ScoringHypothesis h = hy::sample_unit_ball(2, K, 2.0, 6000 + trial);
    hy::Scorer s = hy::as_scorer(h);
    Vector x = vec({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
    int y = rng.uniform_int(1, K);
    double rho = rng.uniform(0.1, 2.0);
    double surrogate = ramp_loss(hy::margin(s, x, y), rho);
    CHECK(static_cast<double>(margin_zero_one_loss(s, x, y)) <= surrogate + 1e-15);
  }
}

TEST_CASE("empirical margin loss averages ramp losses of margins") {
  // margins rho/2 and 2*rho give (0.5 + 0) / 2
  hy::ScoringHypothesis h;
  h.weights.resize(2, 1);
  h.weights << 1.0, 0.0;  // margin at y=1 equals x0

  Sample sample;
  sample.examples.push_back({vec({0.5}), 1});
  sample.examples.push_back({vec({2.0}), 1});
  CHECK(empirical_margin_loss(hy::as_scorer(h), sample, 1.0) == doctest::Approx(0.25));

  // all margins >= rho
  Sample easy;
  easy.examples.push_back({vec({1.0}), 1});
  easy.examples.push_back({vec({3.0}), 1});
  CHECK(empirical_margin_loss(hy::as_scorer(h), easy, 1.0) == 0.0);

  // all margins <= 0
  Sample hard;
  hard.examples.push_back({vec({-1.0}), 1});
  CHECK(empirical_margin_loss(hy::as_scorer(h), hard, 1.0) == 1.0);
}

TEST_CASE("empirical zero-one risk is the misclassification fraction") {
  hy::Scorer s = constant_scores({0.9, 0.1});
  hy::Predictor p = hy::as_predictor(s);
  Sample sample;
  sample.examples.push_back({vec({0.0}), 1});
  sample.examples.push_back({vec({0.0}), 2});
  sample.examples.push_back({vec({0.0}), 1});
  sample.examples.push_back({vec({0.0}), 2});
  CHECK(empirical_zero_one(p, sample) == doctest::Approx(0.5));
}

TEST_CASE("finite distributions validate their probabilities") {
  FiniteDistribution good = uniform_over({{vec({0.0}), 1}, {vec({1.0}), 2}});
  CHECK_NOTHROW(good.validate());

  FiniteDistribution bad;
  bad.support.push_back({vec({0.0}), 1, 0.7});
  bad.support.push_back({vec({1.0}), 2, 0.4});
  CHECK_THROWS_AS(bad.validate(), Error);

  FiniteDistribution negative;
  negative.support.push_back({vec({0.0}), 1, 1.5});
  negative.support.push_back({vec({1.0}), 2, -0.5});
  CHECK_THROWS_AS(negative.validate(), Error);
}

TEST_CASE("exact risk sums probability over misclassified atoms") {
  hy::Scorer s = constant_scores({0.9, 0.1});
  hy::Predictor p = hy::as_predictor(s);

  FiniteDistribution dist = uniform_over({{vec({0.0}), 1}, {vec({1.0}), 2}});
  CHECK(exact_risk(p, dist) == doctest::Approx(0.5));

  FiniteDistribution concentrated;
  concentrated.support.push_back({vec({0.0}), 1, 1.0});
  CHECK(exact_risk(p, concentrated) == 0.0);
}

TEST_CASE("a Bayes-optimal table minimizes exact risk over all predictors") {
  // two inputs, two labels; optimal choice is the heavier label per input
  FiniteDistribution dist;
  dist.support.push_back({vec({0.0}), 1, 0.4});
  dist.support.push_back({vec({0.0}), 2, 0.1});
  dist.support.push_back({vec({1.0}), 1, 0.2});
  dist.support.push_back({vec({1.0}), 2, 0.3});
  dist.validate();

  double best = 1.0;
  int best_a = 0, best_b = 0;
  for (int a = 1; a <= 2; ++a) {
    for (int b = 1; b <= 2; ++b) {
      hy::Predictor p;
      p.label_count = 2;
      p.predict = [a, b](const Vector& x) { return x(0) < 0.5 ? a : b; };
      double risk = exact_risk(p, dist);
      if (risk < best) {
        best = risk;
        best_a = a;
        best_b = b;
      }
    }
  }
  CHECK(best_a == 1);
  CHECK(best_b == 2);
  CHECK(best == doctest::Approx(0.3));
}

TEST_CASE("sampled empirical risk approaches exact risk at the Monte Carlo rate") {
  FiniteDistribution dist;
  dist.support.push_back({vec({0.0}), 1, 0.4});
  dist.support.push_back({vec({0.0}), 2, 0.1});
  dist.support.push_back({vec({1.0}), 1, 0.2});
  dist.support.push_back({vec({1.0}), 2, 0.3});

  hy::Scorer s = constant_scores({0.9, 0.1});
  hy::Predictor p = hy::as_predictor(s);
  double exact = exact_risk(p, dist);

  for (std::size_t m : {100u, 10000u}) {
    Rng rng(Rng::derived(99, m));
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
      Sample sample = draw_sample(dist, m, rng);
      CHECK(sample.size() == m);
      worst = std::max(worst, std::abs(empirical_zero_one(p, sample) - exact));
    }
    // 5 standard deviations of a Bernoulli mean, a comfortably loose cap
    CHECK(worst <= 5.0 * std::sqrt(0.25 / static_cast<double>(m)));
  }
}

TEST_CASE("split loss equals the direct loss of the verified predictor") {
  rq::Requirement req;
  req.label_count = 3;
  rq::Rule rule;
  rule.condition = {{0, rq::Comparator::greater, 0.0}};
  rule.effect = rq::EffectKind::forbid;
  rule.labels = {1};
  req.rules.push_back(rule);

  Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    hy::ScoringHypothesis h = hy::sample_unit_ball(2, 3, 2.0, 7000 + trial);
    verifier::VerifiedHypothesis vh = verifier::wrap(
        hy::as_scorer(h), req, verifier::Strategy::constrained_argmax, {});

    Sample sample;
    for (int i = 0; i < 40; ++i) {
      sample.examples.push_back(
          {vec({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)}), rng.uniform_int(1, 3)});
    }

    SplitZeroOne split = empirical_zero_one_split(vh, sample);
    double direct = empirical_zero_one(verifier::as_predictor(vh), sample);
    CHECK(split.loss == doctest::Approx(direct));
    CHECK(split.accepted_count + split.rejected_count == sample.size());
    CHECK(split.queries <= 3 * split.accepted_count + split.rejected_count);

    // every rejected observed pair fails the requirement, and it alone
    // contributes its 1/m regardless of the base hypothesis
    std::size_t rejected = 0;
    for (const Example& ex : sample.examples) {
      if (!rq::evaluate(req, ex.x, ex.y)) ++rejected;
    }
    CHECK(split.rejected_count == rejected);
    CHECK(split.loss >= static_cast<double>(rejected) / sample.size() - 1e-15);
  }
}

TEST_CASE("split loss under a trivial requirement is the plain loss") {
  rq::Requirement req = rq::trivial(rq::RequirementKind::flat, 2);
  hy::ScoringHypothesis h = hy::sample_unit_ball(2, 2, 2.0, 123);
  verifier::VerifiedHypothesis vh = verifier::wrap(
      hy::as_scorer(h), req, verifier::Strategy::min_index_feasible, {});

  Rng rng(32);
  Sample sample;
  for (int i = 0; i < 25; ++i) {
    sample.examples.push_back(
        {vec({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)}), rng.uniform_int(1, 2)});
  }
  SplitZeroOne split = empirical_zero_one_split(vh, sample);
  CHECK(split.rejected_count == 0);
  CHECK(split.loss ==
        doctest::Approx(empirical_zero_one(hy::as_predictor(hy::as_scorer(h)), sample)));
}

TEST_CASE("hamming loss counts disagreeing positions") {
  CHECK(hamming_loss({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(hamming_loss({1, 2, 3}, {1, 2, 4}) == doctest::Approx(1.0 / 3.0));
  CHECK(hamming_loss({1, 1}, {2, 2}) == 1.0);
  CHECK_THROWS_AS(hamming_loss({1, 2}, {1}), LengthMismatch);
  // definite: zero exactly on equality
  CHECK(hamming_loss({2}, {2}) == 0.0);
  CHECK(hamming_loss({2}, {1}) > 0.0);
}

TEST_CASE("exact hamming risk weights per-atom losses by probability") {
  StructuredFiniteDistribution dist;
  dist.support.push_back({vec({0.0}), {1, 1}, 0.5});
  dist.support.push_back({vec({1.0}), {2, 2}, 0.5});
  dist.validate();

  SeqPredictFn always11 = [](const Vector&) { return LabelSeq{1, 1}; };
  CHECK(exact_hamming_risk(always11, dist) == doctest::Approx(0.5));

  SeqPredictFn perfect = [](const Vector& x) {
    return x(0) < 0.5 ? LabelSeq{1, 1} : LabelSeq{2, 2};
  };
  CHECK(exact_hamming_risk(perfect, dist) == 0.0);
}

TEST_CASE("surrogate terms on the two-label toy") {
  // competitor enumeration: index 0 = label 1 (true), index 1 = label 2
  std::vector<double> loss_vs_true{0.0, 1.0};

  // well-separated scores: both surrogates vanish
  CHECK(additive_surrogate_term({1.0, 0.0}, 0, loss_vs_true, 1.0, 1.0) == 0.0);
  CHECK(multiplicative_surrogate_term({1.0, 0.0}, 0, loss_vs_true, 1.0, 1.0) == 0.0);

  // inverted scores: clamp at the bound
  CHECK(additive_surrogate_term({0.0, 1.0}, 0, loss_vs_true, 1.0, 1.0) == 1.0);
  CHECK(multiplicative_surrogate_term({0.0, 1.0}, 0, loss_vs_true, 1.0, 1.0) == 1.0);

  // no competitors at all: zero by convention
  CHECK(additive_surrogate_term({0.4}, 0, {0.0}, 1.0, 1.0) == 0.0);
  CHECK(multiplicative_surrogate_term({0.4}, 0, {0.0}, 1.0, 1.0) == 0.0);

  // mid-range value, no clamping: phi(1 - (0.25 - 0.0)) = 0.75
  CHECK(additive_surrogate_term({0.25, 0.0}, 0, loss_vs_true, 1.0, 1.0) ==
        doctest::Approx(0.75));
  CHECK(multiplicative_surrogate_term({0.25, 0.0}, 0, loss_vs_true, 1.0, 1.0) ==
        doctest::Approx(0.75));
}

TEST_CASE("additive and multiplicative terms dominate the decoded task loss") {
  Rng rng(41);
  for (int trial = 0; trial < 500; ++trial) {
    int n = rng.uniform_int(2, 6);
    std::vector<double> scores(n), loss_vs_true(n);
    std::size_t true_index = static_cast<std::size_t>(rng.uniform_int(0, n - 1));
    for (int j = 0; j < n; ++j) {
      scores[static_cast<std::size_t>(j)] = rng.uniform(-1.0, 1.0);
      loss_vs_true[static_cast<std::size_t>(j)] = rng.uniform(0.05, 1.0);
    }
    loss_vs_true[true_index] = 0.0;
    double rho = rng.uniform(0.2, 2.0);

    // decoded output: argmax score, smallest index on ties
    std::size_t decoded = 0;
    for (std::size_t j = 1; j < scores.size(); ++j) {
      if (scores[j] > scores[decoded]) decoded = j;
    }
    double task = loss_vs_true[decoded];
    double add = additive_surrogate_term(scores, true_index, loss_vs_true, rho, 1.0);
    double mult = multiplicative_surrogate_term(scores, true_index, loss_vs_true, rho, 1.0);
    CHECK(task <= add + 1e-12);
    CHECK(task <= mult + 1e-12);
    CHECK(add >= 0.0);
    CHECK(mult >= 0.0);
    CHECK(add <= 1.0 + 1e-12);
    CHECK(mult <= 1.0 + 1e-12);
  }
}

TEST_CASE("flat surrogate overloads reduce to the ramp of the margin") {
  Rng rng(51);
  for (int trial = 0; trial < 50; ++trial) {
    hy::ScoringHypothesis h = hy::sample_unit_ball(2, 3, 2.0, 8000 + trial);
    hy::Scorer s = hy::as_scorer(h);
    Sample sample;
    for (int i = 0; i < 10; ++i) {
      sample.examples.push_back(
          {vec({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)}), rng.uniform_int(1, 3)});
    }
    double rho = rng.uniform(0.2, 2.0);

    // with 0/1 task loss, the additive term is phi(1 - margin/rho) clamped to
    // [0,1], which is exactly the ramp at the margin
    double expected = 0.0;
    for (const Example& ex : sample.examples) {
      expected += ramp_loss(hy::margin(s, ex.x, ex.y), rho);
    }
    expected /= static_cast<double>(sample.size());

    CHECK(additive_surrogate_loss(s, sample, rho) == doctest::Approx(expected));
    CHECK(multiplicative_surrogate_loss(s, sample, rho) == doctest::Approx(expected));
  }
}

TEST_CASE("sequence enumeration is lexicographic and capped") {
  std::vector<LabelSeq> seqs = enumerate_sequences(2, 2, 100);
  REQUIRE(seqs.size() == 4);
  CHECK(seqs[0] == LabelSeq{1, 1});
  CHECK(seqs[1] == LabelSeq{1, 2});
  CHECK(seqs[2] == LabelSeq{2, 1});
  CHECK(seqs[3] == LabelSeq{2, 2});
  CHECK_THROWS_AS(enumerate_sequences(10, 10, 4096), TooLarge);
  CHECK(enumerate_sequences(3, 1, 10).size() == 3);
}

TEST_CASE("sequence surrogates dominate the argmax decoder's hamming loss") {
  Rng rng(61);
  const int K = 2, l = 3;
  std::vector<LabelSeq> all = enumerate_sequences(K, l, 100);

  for (int trial = 0; trial < 100; ++trial) {
    // random score table over the 8 sequences, tied to x via a shift
    std::vector<double> table(all.size());
    for (double& v : table) v = rng.uniform(-1.0, 1.0);
    SeqScoreFn h = [table, &all](const Vector& x, const LabelSeq& y) {
      for (std::size_t j = 0; j < all.size(); ++j) {
        if (all[j] == y) return table[j] + 0.1 * x(0);
      }
      return -1e9;
    };

    StructuredSample sample;
    for (int i = 0; i < 5; ++i) {
      LabelSeq y{rng.uniform_int(1, K), rng.uniform_int(1, K), rng.uniform_int(1, K)};
      sample.examples.push_back({vec({rng.uniform(-1.0, 1.0)}), y});
    }
    double rho = rng.uniform(0.3, 2.0);

    double task = 0.0;
    for (const SeqExample& ex : sample.examples) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < all.size(); ++j) {
        if (h(ex.x, all[j]) > h(ex.x, all[best])) best = j;
      }
      task += hamming_loss(all[best], ex.y);
    }
    task /= static_cast<double>(sample.size());

    double add = additive_surrogate_loss(h, sample, K, rho);
    double mult = multiplicative_surrogate_loss(h, sample, K, rho);
    CHECK(task <= add + 1e-12);
    CHECK(task <= mult + 1e-12);
  }
}
