#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "verikit/hypotheses.hpp"
#include "verikit/losses.hpp"
#include "verikit/requirements.hpp"
#include "verikit/types.hpp"

namespace verikit::structured {

// Sequence models that decompose into factor scores. A factor covers one
// position {k} or an adjacent pair {k, k+1} (1-based, ascending); its table
// is flattened row-major over the scoped alphabets. Decoders require the
// chain shape; scoring and brute force work for any single/pair scopes.

struct Factor {
  std::vector<int> scope;
  Vector table;
};

struct FactorModel {
  std::vector<int> alphabet_sizes;  // per position
  std::vector<Factor> factors;

  int length() const { return static_cast<int>(alphabet_sizes.size()); }
};

double score_sequence(const FactorModel& model, const LabelSeq& y);
bool is_chain(const FactorModel& model);

// Highest-scoring sequence; ties resolve to the lexicographically smallest
// sequence (smallest label at the earliest differing position).
LabelSeq viterbi(const FactorModel& model);

// Same, restricted to sequences satisfying the constraints; empty when no
// feasible sequence exists. Must-include labels are tracked in a bitmask, so
// their union is capped (kMaxMustInclude).
std::optional<LabelSeq> constrained_viterbi(const FactorModel& model,
                                            const requirements::SequenceConstraints& cs);
std::optional<LabelSeq> constrained_viterbi(const FactorModel& model,
                                            const requirements::Requirement& req,
                                            const Vector& x);

// Exhaustive reference decoder with the same tie-break; TooLarge past cap.
std::optional<LabelSeq> brute_force_decode(const FactorModel& model,
                                           const requirements::SequenceConstraints* cs,
                                           std::size_t cap = 1000000);

// True iff some sequence of the given length satisfies the requirement at x;
// decided by the constrained decoder on a zero-score model.
bool feasible_sequence_exists(const requirements::Requirement& req, const Vector& x,
                              int length);

// Full-sequence score with infeasible sequences pinned to -M; feasible
// sequences whose base magnitude reaches M raise MaskConstantViolated.
using SeqScore = std::function<double(const LabelSeq&)>;
SeqScore mask_sequence_scores(SeqScore base, requirements::SequenceConstraints cs,
                              double M);

enum class SurrogateMode { additive, multiplicative };

// max over y' != observed of
//   additive:        H(y', observed) - (score(observed) - score(y')) / rho
//   multiplicative:  H(y', observed) * (1 - (score(observed) - score(y')) / rho)
// where H is the Hamming loss. The additive form decomposes per position and
// runs as a dynamic program on chains of any size; the multiplicative form
// enumerates and raises TooLarge past the cap.
double loss_augmented_max(const FactorModel& model, const LabelSeq& observed,
                          double rho, SurrogateMode mode,
                          std::size_t cap = losses::kEnumerationCap);

// Linear chain scorer with weights tied across positions:
//   score(x, y) = sum_k <emission_weights.row(y_k - 1), phi(x)>
//               + sum_k transition_weights(y_k - 1, y_{k+1} - 1).
// An empty transition matrix means no pair factors. Class membership uses
// the group norm over emission rows and individual transition entries.
struct ChainModel {
  Matrix emission_weights;  // K x D
  Matrix transition_weights;  // K x K, or empty
  hypotheses::FeatureMap feature_map;
  double p = 2.0;

  int label_count() const { return static_cast<int>(emission_weights.rows()); }
  bool has_transitions() const { return transition_weights.size() > 0; }
};

FactorModel realize(const ChainModel& model, const Vector& x, int length);
double score(const ChainModel& model, const Vector& x, const LabelSeq& y);
double group_norm(const ChainModel& model);
ChainModel sample_chain_unit_ball(int feature_dim, int label_count,
                                  bool with_transitions, double p,
                                  std::uint64_t seed);

// Chain-model JSON (used by the decode subcommand).
ChainModel parse_chain_model(const std::string& text);
std::string serialize(const ChainModel& model);
ChainModel load_chain_model_file(const std::string& path);

// Sequence surrogates for chain models: enumeration below the cap, and for
// the additive form the loss-augmented dynamic program beyond it.
double additive_surrogate_loss(const ChainModel& model,
                               const losses::StructuredSample& sample, double rho,
                               std::size_t cap = losses::kEnumerationCap);
double multiplicative_surrogate_loss(const ChainModel& model,
                                     const losses::StructuredSample& sample,
                                     double rho,
                                     std::size_t cap = losses::kEnumerationCap);

}  // namespace verikit::structured
