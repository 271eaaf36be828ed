#include "verikit/verifier.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace verikit::verifier {

using hypotheses::Predictor;
using hypotheses::Scorer;

int VerifiedHypothesis::label_count() const {
  if (has_scores()) return std::get<Scorer>(base).label_count;
  return std::get<Predictor>(base).label_count;
}

const Scorer& VerifiedHypothesis::scorer() const {
  if (!has_scores()) throw Error("base hypothesis has no scores");
  return std::get<Scorer>(base);
}

namespace {

void check_wrap_inputs(const requirements::Requirement& req, int base_labels,
                       const std::vector<Vector>& probe_inputs) {
  if (req.kind != requirements::RequirementKind::flat) {
    throw Error("the verifier wraps flat hypotheses; structured decoding has its own path");
  }
  if (req.label_count != base_labels) {
    throw DimensionMismatch("requirement covers " + std::to_string(req.label_count) +
                            " labels but the hypothesis scores " + std::to_string(base_labels));
  }
  auto report = requirements::check_feasibility(req, probe_inputs);
  if (!report.all_feasible()) {
    throw InfeasibleInput("wrap: " + std::to_string(report.infeasible_indices.size()) +
                              " probe input(s) admit no feasible label",
                          report.infeasible_indices);
  }
}

}  // namespace

VerifiedHypothesis wrap(const Scorer& base, const requirements::Requirement& req,
                        Strategy strategy, const std::vector<Vector>& probe_inputs) {
  check_wrap_inputs(req, base.label_count, probe_inputs);
  VerifiedHypothesis vh;
  vh.base = base;
  vh.requirement = req;
  vh.strategy = strategy;
  double max_abs = 0.0;
  for (const Vector& x : probe_inputs) {
    for (int y = 1; y <= base.label_count; ++y) {
      max_abs = std::max(max_abs, std::abs(base.score(x, y)));
    }
  }
  vh.mask_constant = max_abs + 1.0;
  vh.counters = std::make_shared<QueryCounters>();
  return vh;
}

VerifiedHypothesis wrap(const Predictor& base, const requirements::Requirement& req,
                        const std::vector<Vector>& probe_inputs) {
  check_wrap_inputs(req, base.label_count, probe_inputs);
  VerifiedHypothesis vh;
  vh.base = base;
  vh.requirement = req;
  vh.strategy = Strategy::min_index_feasible;
  vh.mask_constant = 0.0;
  vh.counters = std::make_shared<QueryCounters>();
  return vh;
}

bool memoized_check(const VerifiedHypothesis& vh, const Vector& x, int y,
                    FeasibilityMemo& memo, Phase phase, int* queries) {
  if (memo[y - 1] < 0) {
    memo[y - 1] = requirements::evaluate(vh.requirement, x, y) ? 1 : 0;
    ++*queries;
    auto& counter = phase == Phase::inference ? vh.counters->inference_queries
                                              : vh.counters->learning_queries;
    counter.fetch_add(1, std::memory_order_relaxed);
  }
  return memo[y - 1] == 1;
}

InferResult infer(const VerifiedHypothesis& vh, const Vector& x,
                  FeasibilityMemo& memo, Phase phase) {
  const int K = vh.label_count();
  if (static_cast<int>(memo.size()) != K) {
    throw DimensionMismatch("feasibility memo must have one slot per label");
  }
  InferResult result;

  int base_label = vh.has_scores() ? hypotheses::predict(vh.scorer(), x)
                                   : std::get<Predictor>(vh.base).predict(x);
  if (memoized_check(vh, x, base_label, memo, phase, &result.queries)) {
    result.label = base_label;
    return result;
  }

  if (vh.strategy == Strategy::min_index_feasible) {
    for (int y = 1; y <= K; ++y) {
      if (y == base_label) continue;  // already known infeasible
      if (memoized_check(vh, x, y, memo, phase, &result.queries)) {
        result.label = y;
        return result;
      }
    }
  } else {
    if (!vh.has_scores()) {
      throw Error("constrained_argmax needs a scoring base hypothesis");
    }
    Vector scores = hypotheses::score_all(vh.scorer(), x);
    double best = -std::numeric_limits<double>::infinity();
    int best_label = 0;
    for (int y = 1; y <= K; ++y) {
      if (y == base_label) continue;
      if (!memoized_check(vh, x, y, memo, phase, &result.queries)) continue;
      if (scores(y - 1) > best) {  // strict: ties keep the smaller index
        best = scores(y - 1);
        best_label = y;
      }
    }
    if (best_label != 0) {
      result.label = best_label;
      return result;
    }
  }
  throw InfeasibleInput("infer: input admits no feasible label", {});
}

InferResult infer(const VerifiedHypothesis& vh, const Vector& x) {
  FeasibilityMemo memo(vh.label_count(), -1);
  vh.counters->inference_calls.fetch_add(1, std::memory_order_relaxed);
  return infer(vh, x, memo, Phase::inference);
}

hypotheses::Scorer mask_scores(const Scorer& base, const requirements::Requirement& req,
                               double M) {
  if (M <= 0.0) throw Error("mask constant must be positive");
  if (req.label_count != base.label_count) {
    throw DimensionMismatch("requirement and hypothesis disagree on label count");
  }
  return Scorer{base.label_count, [base, req, M](const Vector& x, int y) {
                  if (!requirements::evaluate(req, x, y)) return -M;
                  double s = base.score(x, y);
                  if (std::abs(s) >= M) {
                    throw MaskConstantViolated(
                        "base score magnitude " + std::to_string(std::abs(s)) +
                        " reaches the mask constant " + std::to_string(M));
                  }
                  return s;
                }};
}

hypotheses::Scorer mask_scores(const hypotheses::ScoringHypothesis& base,
                               const requirements::Requirement& req, double M) {
  return mask_scores(hypotheses::as_scorer(base), req, M);
}

hypotheses::Scorer masked_scorer(const VerifiedHypothesis& vh) {
  return mask_scores(vh.scorer(), vh.requirement, vh.mask_constant);
}

QueryReport query_report(const VerifiedHypothesis& vh) {
  QueryReport report;
  report.inference_queries = vh.counters->inference_queries.load();
  report.learning_queries = vh.counters->learning_queries.load();
  report.inference_calls = vh.counters->inference_calls.load();
  return report;
}

hypotheses::Predictor as_predictor(const VerifiedHypothesis& vh) {
  return Predictor{vh.label_count(),
                   [vh](const Vector& x) { return infer(vh, x).label; }};
}

}  // namespace verikit::verifier
