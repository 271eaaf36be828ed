#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "verikit/types.hpp"

namespace verikit::hypotheses {

// Feature map applied before scoring: identity, or a stored projection
// matrix (features = projection * x). An empty matrix means identity.
struct FeatureMap {
  Matrix projection;

  bool is_identity() const { return projection.size() == 0; }
  Vector apply(const Vector& x) const;
  Eigen::Index output_dim(Eigen::Index input_dim) const;
};

// Linear multi-class scorer: score(x, y) = <weights.row(y-1), phi(x)>.
// Class membership is controlled by the l_{2,p} group norm of the weight
// rows, with p in [1, 2].
struct ScoringHypothesis {
  Matrix weights;  // K x D, row y-1 scores label y
  FeatureMap feature_map;
  double p = 2.0;

  int label_count() const { return static_cast<int>(weights.rows()); }
};

double score(const ScoringHypothesis& h, const Vector& x, int y);
Vector score_all(const ScoringHypothesis& h, const Vector& x);

// Argmax label with ties broken toward the smallest label index.
int argmax_label(const Vector& scores);
int predict(const ScoringHypothesis& h, const Vector& x);

// score(x, y) minus the best competing score; requires at least two labels.
double margin(const ScoringHypothesis& h, const Vector& x, int y);
double margin_of_scores(const Vector& scores, int y);

// Margin capped at theta: min over all labels y' of
// score(x,y) - score(x,y') + theta * [y' == y]. Never exceeds the plain
// margin; theta must be positive.
double capped_margin(const ScoringHypothesis& h, const Vector& x, int y, double theta);
double capped_margin_of_scores(const Vector& scores, int y, double theta);

// l_{2,p} group norm: the l_p norm of the per-row Euclidean norms.
double l2p_norm(const Matrix& weights, double p);
double l2p_norm(const ScoringHypothesis& h);

// Deterministic sample with l2p_norm <= 1 (Gaussian direction, radial
// rescale). Same seed, same hypothesis.
ScoringHypothesis sample_unit_ball(int dim, int label_count, double p,
                                   std::uint64_t seed);

// Score table over an explicit finite input list; inputs are matched by
// exact coefficient equality.
struct TabulatedHypothesis {
  std::vector<Vector> inputs;
  Matrix scores;  // inputs.size() x K

  int label_count() const { return static_cast<int>(scores.cols()); }
  Eigen::Index row_of(const Vector& x) const;
  Vector score_all(const Vector& x) const;
};

struct FiniteHypothesisClass {
  std::vector<TabulatedHypothesis> members;  // shared input list and K
};

// Type-erased views used by the verifier and the loss evaluators so that
// linear, tabulated, and masked hypotheses flow through the same code.
struct Scorer {
  int label_count = 0;
  std::function<double(const Vector&, int)> score;
};

struct Predictor {
  int label_count = 0;
  std::function<int(const Vector&)> predict;
};

Scorer as_scorer(const ScoringHypothesis& h);
Scorer as_scorer(const TabulatedHypothesis& h);
Predictor as_predictor(const Scorer& s);

Vector score_all(const Scorer& s, const Vector& x);
int predict(const Scorer& s, const Vector& x);
double margin(const Scorer& s, const Vector& x, int y);

// JSON serialization of linear hypotheses.
ScoringHypothesis parse_hypothesis(const std::string& text);
std::string serialize(const ScoringHypothesis& h);
ScoringHypothesis load_hypothesis_file(const std::string& path);

}  // namespace verikit::hypotheses
