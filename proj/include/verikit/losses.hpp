#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "verikit/hypotheses.hpp"
#include "verikit/rng.hpp"
#include "verikit/types.hpp"
#include "verikit/verifier.hpp"

namespace verikit::losses {

struct Example {
  Vector x;
  int y = 1;
};

struct Sample {
  std::vector<Example> examples;
  std::size_t size() const { return examples.size(); }
};

struct SeqExample {
  Vector x;
  LabelSeq y;
};

struct StructuredSample {
  std::vector<SeqExample> examples;
  std::size_t size() const { return examples.size(); }
};

// Distribution with finite support; probabilities must be non-negative and
// sum to 1 within 1e-12. Exact risks are sums over the support, which keeps
// the experiment checks free of estimation error on the left-hand side.
struct FiniteDistribution {
  struct Atom {
    Vector x;
    int y = 1;
    double prob = 0.0;
  };
  std::vector<Atom> support;
  void validate() const;
};

struct StructuredFiniteDistribution {
  struct Atom {
    Vector x;
    LabelSeq y;
    double prob = 0.0;
  };
  std::vector<Atom> support;
  void validate() const;
};

Sample draw_sample(const FiniteDistribution& dist, std::size_t m, Rng& rng);
StructuredSample draw_sample(const StructuredFiniteDistribution& dist,
                             std::size_t m, Rng& rng);

// 0/1 losses come in two flavors that differ only on score ties: the
// predictor form charges what the tie-break actually returns, while the
// margin form charges every tie as an error. Empirical margin losses and the
// bound checks use the margin convention.
int zero_one_loss(const hypotheses::Predictor& h, const Vector& x, int y);
int margin_zero_one_loss(const hypotheses::Scorer& h, const Vector& x, int y);

// Ramp: 1 for t <= 0, 0 for t >= rho, linear in between; (1/rho)-Lipschitz.
double ramp_loss(double t, double rho);

// Clamp to [0, bound].
double clamp_loss(double t, double bound);

double empirical_margin_loss(const hypotheses::Scorer& h, const Sample& sample,
                             double rho);
double empirical_zero_one(const hypotheses::Predictor& h, const Sample& sample);

// Empirical 0/1 loss of a verified hypothesis, split by whether the observed
// pair passes the requirement. Rejected pairs (check = 0) are automatic
// errors and cost one query each; accepted pairs run checked inference with
// the already-paid query reused, so the total stays within
// K * accepted + rejected.
struct SplitZeroOne {
  double loss = 0.0;
  std::size_t rejected_count = 0;  // observed pairs failing the requirement
  std::size_t accepted_count = 0;
  std::uint64_t queries = 0;
};
SplitZeroOne empirical_zero_one_split(const verifier::VerifiedHypothesis& vh,
                                      const Sample& sample);

double exact_risk(const hypotheses::Predictor& h, const FiniteDistribution& dist);

using SeqPredictFn = std::function<LabelSeq(const Vector&)>;
double exact_hamming_risk(const SeqPredictFn& h,
                          const StructuredFiniteDistribution& dist);

// Fraction of disagreeing positions.
double hamming_loss(const LabelSeq& a, const LabelSeq& b);

// Per-example surrogate terms over an enumerated competitor set. scores[j]
// and loss_vs_true[j] describe competitor j; true_index marks the observed
// output, which is skipped. With no competitors the term is 0.
double additive_surrogate_term(const std::vector<double>& scores,
                               std::size_t true_index,
                               const std::vector<double>& loss_vs_true,
                               double rho, double bound);
double multiplicative_surrogate_term(const std::vector<double>& scores,
                                     std::size_t true_index,
                                     const std::vector<double>& loss_vs_true,
                                     double rho, double bound);

// All sequences of the given length over labels 1..alphabet_size, in
// lexicographic order; raises TooLarge past the cap.
std::vector<LabelSeq> enumerate_sequences(int alphabet_size, int length,
                                          std::size_t cap);

// Sequence surrogates by enumeration, with Hamming task loss (bound 1).
// Larger label sets need the decomposed path in the structured module.
using SeqScoreFn = std::function<double(const Vector&, const LabelSeq&)>;
inline constexpr std::size_t kEnumerationCap = 4096;

double additive_surrogate_loss(const SeqScoreFn& h, const StructuredSample& sample,
                               int alphabet_size, double rho,
                               std::size_t cap = kEnumerationCap);
double multiplicative_surrogate_loss(const SeqScoreFn& h,
                                     const StructuredSample& sample,
                                     int alphabet_size, double rho,
                                     std::size_t cap = kEnumerationCap);

// Flat overloads: single-position sequences with 0/1 task loss.
double additive_surrogate_loss(const hypotheses::Scorer& h, const Sample& sample,
                               double rho);
double multiplicative_surrogate_loss(const hypotheses::Scorer& h,
                                     const Sample& sample, double rho);

}  // namespace verikit::losses
