#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "verikit/hypotheses.hpp"
#include "verikit/requirements.hpp"
#include "verikit/rng.hpp"
#include "verikit/verifier.hpp"

using namespace verikit;
using namespace verikit::verifier;
namespace hy = verikit::hypotheses;
namespace rq = verikit::requirements;

namespace {

Vector vec(std::initializer_list<double> values) {
  Vector x(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) x(i++) = v;
  return x;
}

rq::Requirement forbid_when_positive(int label_count, std::vector<int> labels) {
  rq::Requirement req;
  req.label_count = label_count;
  rq::Rule rule;
  rule.condition = {{0, rq::Comparator::greater, 0.0}};
  rule.effect = rq::EffectKind::forbid;
  rule.labels = std::move(labels);
  req.rules.push_back(rule);
  return req;
}

// Fixed score profile independent of x, for pinning fallback choices.
hy::Scorer constant_scores(std::vector<double> values) {
  hy::Scorer s;
  s.label_count = static_cast<int>(values.size());
  s.score = [values](const Vector&, int y) { return values[static_cast<std::size_t>(y - 1)]; };
  return s;
}

}  // namespace

TEST_CASE("wrap calibrates the mask constant from probe scores") {
  hy::Scorer base = constant_scores({0.9, -0.4, 0.2});
  rq::Requirement req = rq::trivial(rq::RequirementKind::flat, 3);
  VerifiedHypothesis vh =
      wrap(base, req, Strategy::constrained_argmax, {vec({0.0}), vec({1.0})});
  CHECK(vh.mask_constant == doctest::Approx(1.9));
  CHECK(query_report(vh).total() == 0);
  CHECK(vh.label_count() == 3);
  CHECK(vh.has_scores());
}

TEST_CASE("wrap rejects infeasible probe inputs and reports which ones") {
  rq::Requirement req = forbid_when_positive(2, {1});
  rq::Rule second;
  second.condition = {{0, rq::Comparator::greater, 0.0}};
  second.effect = rq::EffectKind::forbid;
  second.labels = {2};
  req.rules.push_back(second);

  hy::Scorer base = constant_scores({0.5, 0.1});
  std::vector<Vector> probes{vec({-1.0}), vec({3.0}), vec({0.0}), vec({2.0})};
  try {
    wrap(base, req, Strategy::min_index_feasible, probes);
    FAIL("expected InfeasibleInput");
  } catch (const InfeasibleInput& e) {
    CHECK(e.infeasible_indices == std::vector<std::size_t>{1, 3});
  }
}

TEST_CASE("accepted predictions pass through with one query") {
  rq::Requirement req = forbid_when_positive(3, {1});
  hy::Scorer base = constant_scores({0.9, 0.1, 0.5});
  VerifiedHypothesis vh =
      wrap(base, req, Strategy::min_index_feasible, {vec({-1.0})});

  InferResult r = infer(vh, vec({-1.0}));  // condition off, label 1 allowed
  CHECK(r.label == 1);
  CHECK(r.queries == 1);
}

TEST_CASE("min-index fallback picks the smallest feasible label") {
  rq::Requirement req = forbid_when_positive(3, {1});
  hy::Scorer base = constant_scores({0.9, 0.1, 0.5});
  VerifiedHypothesis vh =
      wrap(base, req, Strategy::min_index_feasible, {vec({-1.0})});

  InferResult r = infer(vh, vec({1.0}));
  CHECK(r.label == 2);
  CHECK(r.queries <= 3);
  CHECK(rq::evaluate(req, vec({1.0}), r.label));
}

TEST_CASE("constrained argmax picks the best feasible label") {
  rq::Requirement req = forbid_when_positive(3, {1});
  hy::Scorer base = constant_scores({0.9, 0.1, 0.5});
  VerifiedHypothesis vh =
      wrap(base, req, Strategy::constrained_argmax, {vec({-1.0})});

  InferResult r = infer(vh, vec({1.0}));
  CHECK(r.label == 3);
  CHECK(r.queries <= 3);
}

TEST_CASE("infer raises InfeasibleInput when nothing survives") {
  rq::Requirement req = forbid_when_positive(2, {1});
  rq::Rule second;
  second.condition = {{0, rq::Comparator::greater, 0.0}};
  second.effect = rq::EffectKind::forbid;
  second.labels = {2};
  req.rules.push_back(second);

  hy::Scorer base = constant_scores({0.5, 0.1});
  VerifiedHypothesis vh =
      wrap(base, req, Strategy::min_index_feasible, {vec({-1.0})});
  CHECK_THROWS_AS(infer(vh, vec({1.0})), InfeasibleInput);
}

TEST_CASE("every inference output satisfies the requirement") {
  Rng rng(62);
  for (int trial = 0; trial < 100; ++trial) {
    int K = rng.uniform_int(2, 6);
    rq::Requirement req = forbid_when_positive(K, {rng.uniform_int(1, K)});
    hy::ScoringHypothesis h = hy::sample_unit_ball(2, K, 2.0, 9000 + trial);
    Strategy strat =
        rng.bernoulli(0.5) ? Strategy::min_index_feasible : Strategy::constrained_argmax;
    VerifiedHypothesis vh = wrap(hy::as_scorer(h), req, strat, {});

    Vector x = vec({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
    InferResult r = infer(vh, x);
    CHECK(rq::evaluate(req, x, r.label));
    CHECK(r.queries >= 1);
    CHECK(r.queries <= K);
  }
}

TEST_CASE("a trivial requirement never changes the base prediction") {
  Rng rng(63);
  rq::Requirement req = rq::trivial(rq::RequirementKind::flat, 4);
  hy::ScoringHypothesis h = hy::sample_unit_ball(2, 4, 2.0, 404);
  VerifiedHypothesis vh =
      wrap(hy::as_scorer(h), req, Strategy::constrained_argmax, {});

  for (int trial = 0; trial < 50; ++trial) {
    Vector x = vec({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
    InferResult r = infer(vh, x);
    CHECK(r.label == hy::predict(h, x));
    CHECK(r.queries == 1);

    // masked scores equal base scores when nothing is forbidden
    hy::Scorer masked = masked_scorer(vh);
    for (int y = 1; y <= 4; ++y) {
      CHECK(masked.score(x, y) == hy::score(h, x, y));
    }
  }
}

TEST_CASE("masking pins forbidden labels at minus M") {
  rq::Requirement req = forbid_when_positive(2, {2});
  hy::Scorer base = constant_scores({0.3, 0.8});
  hy::Scorer masked = mask_scores(base, req, 2.0);

  CHECK(masked.score(vec({1.0}), 1) == 0.3);
  CHECK(masked.score(vec({1.0}), 2) == -2.0);
  CHECK(hy::predict(masked, vec({1.0})) == 1);
  // condition off: scores untouched
  CHECK(masked.score(vec({-1.0}), 2) == 0.8);
}

TEST_CASE("masked margins are negative exactly on forbidden pairs") {
  Rng rng(64);
  for (int trial = 0; trial < 100; ++trial) {
    int K = rng.uniform_int(2, 5);
    rq::Requirement req = forbid_when_positive(K, {rng.uniform_int(1, K)});
    hy::ScoringHypothesis h = hy::sample_unit_ball(3, K, 2.0, 500 + trial);
    Vector x = vec({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});

    double max_abs = hy::score_all(h, x).cwiseAbs().maxCoeff();
    hy::Scorer masked = mask_scores(hy::as_scorer(h), req, max_abs + 1.0);
    for (int y = 1; y <= K; ++y) {
      if (!rq::evaluate(req, x, y)) {
        CHECK(hy::margin(masked, x, y) < 0.0);
      }
    }
  }
}

TEST_CASE("a feasible score at or beyond M trips MaskConstantViolated") {
  rq::Requirement req = forbid_when_positive(2, {2});
  hy::Scorer base = constant_scores({2.5, 0.1});
  hy::Scorer masked = mask_scores(base, req, 2.0);
  CHECK_THROWS_AS(masked.score(vec({1.0}), 1), MaskConstantViolated);
}

TEST_CASE("constrained argmax agrees with the masked-score argmax") {
  Rng rng(65);
  for (int trial = 0; trial < 100; ++trial) {
    int K = rng.uniform_int(2, 5);
    rq::Requirement req = forbid_when_positive(K, {rng.uniform_int(1, K)});
    hy::ScoringHypothesis h = hy::sample_unit_ball(2, K, 2.0, 700 + trial);
    Vector probe = vec({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
    VerifiedHypothesis vh = wrap(hy::as_scorer(h), req, Strategy::constrained_argmax,
                                 {probe, vec({1.0, 0.0})});

    Vector x = vec({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
    hy::Scorer masked = masked_scorer(vh);
    CHECK(infer(vh, x).label == hy::predict(masked, x));
  }
}

TEST_CASE("a masked linear hypothesis can leave the linear class") {
  // One feature, two labels. The base scores are linear in x, so any linear
  // surrogate for the masked scores must satisfy score(x,y) = w_y * x on
  // probes; masking label 2 at x=1 and x=2 with different floor/base values
  // makes that system unsolvable, so the least-squares residual is positive.
  hy::ScoringHypothesis h;
  h.weights.resize(2, 1);
  h.weights << 1.0, 2.0;

  rq::Requirement req;
  req.label_count = 2;
  rq::Rule rule;
  rule.condition = {{0, rq::Comparator::greater_equal, 1.5}};
  rule.effect = rq::EffectKind::forbid;
  rule.labels = {2};
  req.rules.push_back(rule);

  const double M = 10.0;
  hy::Scorer masked = mask_scores(hy::as_scorer(h), req, M);

  // observed masked scores for label 2 at x = 1 and x = 2
  Eigen::Matrix2d design;
  design << 1.0, 0.0,
            2.0, 0.0;  // second column forces a 1-dim fit per label
  Eigen::Vector2d observed(masked.score(vec({1.0}), 2), masked.score(vec({2.0}), 2));
  CHECK(observed(0) == 2.0);
  CHECK(observed(1) == -10.0);

  Eigen::VectorXd w = design.colPivHouseholderQr().solve(observed);
  double residual = (design * w - observed).norm();
  CHECK(residual > 1.0);
}

TEST_CASE("memoized checks charge only fresh pairs") {
  rq::Requirement req = forbid_when_positive(3, {1});
  hy::Scorer base = constant_scores({0.9, 0.1, 0.5});
  VerifiedHypothesis vh =
      wrap(base, req, Strategy::min_index_feasible, {vec({-1.0})});

  Vector x = vec({1.0});
  FeasibilityMemo memo(3, -1);
  InferResult first = infer(vh, x, memo, Phase::learning);
  CHECK(first.label == 2);
  CHECK(first.queries >= 1);

  InferResult second = infer(vh, x, memo, Phase::learning);
  CHECK(second.label == 2);
  CHECK(second.queries == 0);

  int queries = 0;
  bool ok = memoized_check(vh, x, 2, memo, Phase::learning, &queries);
  CHECK(ok);
  CHECK(queries == 0);

  QueryReport report = query_report(vh);
  CHECK(report.learning_queries == static_cast<std::uint64_t>(first.queries));
  CHECK(report.inference_queries == 0);
}

TEST_CASE("the query report splits inference from learning") {
  rq::Requirement req = forbid_when_positive(2, {1});
  hy::Scorer base = constant_scores({0.9, 0.1});
  VerifiedHypothesis vh =
      wrap(base, req, Strategy::min_index_feasible, {vec({-1.0})});

  infer(vh, vec({-1.0}));
  infer(vh, vec({1.0}));
  QueryReport report = query_report(vh);
  CHECK(report.inference_calls == 2);
  CHECK(report.inference_queries >= 2);
  CHECK(report.inference_queries <= 4);
  CHECK(report.learning_queries == 0);
  CHECK(report.total() == report.inference_queries);
}

TEST_CASE("the predictor view satisfies the requirement and counts calls") {
  rq::Requirement req = forbid_when_positive(3, {1, 3});
  hy::Scorer base = constant_scores({0.9, 0.1, 0.5});
  VerifiedHypothesis vh =
      wrap(base, req, Strategy::constrained_argmax, {vec({-1.0})});
  hy::Predictor p = as_predictor(vh);

  CHECK(p.predict(vec({1.0})) == 2);
  CHECK(p.predict(vec({-1.0})) == 1);
  CHECK(query_report(vh).inference_calls == 2);
}

TEST_CASE("predictor bases fall back by label, no scores involved") {
  hy::Predictor base;
  base.label_count = 3;
  base.predict = [](const Vector&) { return 1; };

  rq::Requirement req = forbid_when_positive(3, {1});
  VerifiedHypothesis vh = wrap(base, req, {vec({-1.0})});
  CHECK_FALSE(vh.has_scores());
  CHECK(infer(vh, vec({1.0})).label == 2);
  CHECK(infer(vh, vec({-1.0})).label == 1);
  CHECK_THROWS_AS(masked_scorer(vh), Error);
}
