#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <variant>
#include <vector>

#include "verikit/hypotheses.hpp"
#include "verikit/requirements.hpp"
#include "verikit/types.hpp"

namespace verikit::verifier {

// Inference-time wrapper around a base hypothesis: every prediction is
// checked against a flat requirement, and rejected outputs are replaced by a
// deterministic feasible fallback. Each requirement evaluation on a fresh
// (x, y) pair costs one query; per-call query usage never exceeds the label
// count because answers are memoized per input.

enum class Strategy {
  // fall back to the smallest feasible label index
  min_index_feasible,
  // fall back to the best-scoring feasible label (needs a scoring base)
  constrained_argmax,
};

enum class Phase { inference, learning };

struct QueryCounters {
  std::atomic<std::uint64_t> inference_queries{0};
  std::atomic<std::uint64_t> learning_queries{0};
  std::atomic<std::uint64_t> inference_calls{0};
};

struct QueryReport {
  std::uint64_t inference_queries = 0;
  std::uint64_t learning_queries = 0;
  std::uint64_t inference_calls = 0;
  std::uint64_t total() const { return inference_queries + learning_queries; }
};

struct VerifiedHypothesis {
  std::variant<hypotheses::Scorer, hypotheses::Predictor> base;
  requirements::Requirement requirement;
  Strategy strategy = Strategy::min_index_feasible;
  // Strictly larger than any base score magnitude seen on the probe inputs;
  // masked scores use -mask_constant for rejected labels.
  double mask_constant = 0.0;
  std::shared_ptr<QueryCounters> counters;

  int label_count() const;
  bool has_scores() const {
    return std::holds_alternative<hypotheses::Scorer>(base);
  }
  const hypotheses::Scorer& scorer() const;
};

// Wraps a base hypothesis. probe_inputs must all be feasible (otherwise
// InfeasibleInput carries the offending indices); for scoring bases they
// also calibrate the mask constant.
VerifiedHypothesis wrap(const hypotheses::Scorer& base,
                        const requirements::Requirement& req, Strategy strategy,
                        const std::vector<Vector>& probe_inputs);
VerifiedHypothesis wrap(const hypotheses::Predictor& base,
                        const requirements::Requirement& req,
                        const std::vector<Vector>& probe_inputs);

struct InferResult {
  int label = 0;
  int queries = 0;  // requirement evaluations spent on this call
};

// One feasibility answer per label, -1 when not yet queried. Sharing a memo
// across calls at the same input lets a loss evaluation reuse the
// (x, observed-label) check it has already paid for.
using FeasibilityMemo = std::vector<signed char>;

InferResult infer(const VerifiedHypothesis& vh, const Vector& x);
InferResult infer(const VerifiedHypothesis& vh, const Vector& x,
                  FeasibilityMemo& memo, Phase phase);

// Queries the requirement through the memo, charging the counter only for
// fresh (x, y) pairs.
bool memoized_check(const VerifiedHypothesis& vh, const Vector& x, int y,
                    FeasibilityMemo& memo, Phase phase, int* queries);

// Score surface with rejected labels pinned to -M. Evaluating a feasible
// pair whose base score magnitude reaches M raises MaskConstantViolated,
// since such a score would not stay above the mask floor.
hypotheses::Scorer mask_scores(const hypotheses::Scorer& base,
                               const requirements::Requirement& req, double M);
hypotheses::Scorer mask_scores(const hypotheses::ScoringHypothesis& base,
                               const requirements::Requirement& req, double M);
hypotheses::Scorer masked_scorer(const VerifiedHypothesis& vh);

QueryReport query_report(const VerifiedHypothesis& vh);

// Predictor view; each call runs infer and counts inference queries.
hypotheses::Predictor as_predictor(const VerifiedHypothesis& vh);

}  // namespace verikit::verifier
