#include "verikit/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace verikit::losses {

namespace {

void check_rho(double rho) {
  if (rho <= 0.0) throw NonpositiveRho("margin scale rho must be positive");
}

void check_nonempty(std::size_t size) {
  if (size == 0) throw Error("empty sample");
}

void check_probs(double total, std::size_t count) {
  if (count == 0) throw Error("distribution support is empty");
  if (std::abs(total - 1.0) > 1e-12) {
    throw Error("support probabilities sum to " + std::to_string(total) + ", not 1");
  }
}

}  // namespace

void FiniteDistribution::validate() const {
  double total = 0.0;
  for (const Atom& a : support) {
    if (a.prob < 0.0) throw Error("negative probability in distribution");
    total += a.prob;
  }
  check_probs(total, support.size());
}

void StructuredFiniteDistribution::validate() const {
  double total = 0.0;
  for (const Atom& a : support) {
    if (a.prob < 0.0) throw Error("negative probability in distribution");
    total += a.prob;
  }
  check_probs(total, support.size());
}

namespace {

// inverse-CDF draw over support indices
template <typename Dist>
std::size_t draw_index(const Dist& dist, Rng& rng) {
  double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < dist.support.size(); ++i) {
    acc += dist.support[i].prob;
    if (u < acc) return i;
  }
  return dist.support.size() - 1;
}

}  // namespace

Sample draw_sample(const FiniteDistribution& dist, std::size_t m, Rng& rng) {
  dist.validate();
  Sample s;
  s.examples.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& atom = dist.support[draw_index(dist, rng)];
    s.examples.push_back({atom.x, atom.y});
  }
  return s;
}

StructuredSample draw_sample(const StructuredFiniteDistribution& dist,
                             std::size_t m, Rng& rng) {
  dist.validate();
  StructuredSample s;
  s.examples.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& atom = dist.support[draw_index(dist, rng)];
    s.examples.push_back({atom.x, atom.y});
  }
  return s;
}

int zero_one_loss(const hypotheses::Predictor& h, const Vector& x, int y) {
  return h.predict(x) != y ? 1 : 0;
}

int margin_zero_one_loss(const hypotheses::Scorer& h, const Vector& x, int y) {
  return hypotheses::margin(h, x, y) <= 0.0 ? 1 : 0;
}

double ramp_loss(double t, double rho) {
  check_rho(rho);
  return std::min(1.0, std::max(0.0, 1.0 - t / rho));
}

double clamp_loss(double t, double bound) {
  if (bound < 0.0) throw Error("clamp bound must be non-negative");
  return std::min(bound, std::max(0.0, t));
}

double empirical_margin_loss(const hypotheses::Scorer& h, const Sample& sample,
                             double rho) {
  check_rho(rho);
  check_nonempty(sample.size());
  double total = 0.0;
  for (const Example& e : sample.examples) {
    total += ramp_loss(hypotheses::margin(h, e.x, e.y), rho);
  }
  return total / static_cast<double>(sample.size());
}

double empirical_zero_one(const hypotheses::Predictor& h, const Sample& sample) {
  check_nonempty(sample.size());
  double total = 0.0;
  for (const Example& e : sample.examples) total += zero_one_loss(h, e.x, e.y);
  return total / static_cast<double>(sample.size());
}

SplitZeroOne empirical_zero_one_split(const verifier::VerifiedHypothesis& vh,
                                      const Sample& sample) {
  check_nonempty(sample.size());
  SplitZeroOne out;
  double errors = 0.0;
  for (const Example& e : sample.examples) {
    verifier::FeasibilityMemo memo(vh.label_count(), -1);
    int queries = 0;
    bool accepted = verifier::memoized_check(vh, e.x, e.y, memo,
                                             verifier::Phase::learning, &queries);
    if (!accepted) {
      // The wrapper always emits a label passing the requirement, so an
      // observed pair failing it is an error with no further queries.
      ++out.rejected_count;
      errors += 1.0;
    } else {
      ++out.accepted_count;
      auto result = verifier::infer(vh, e.x, memo, verifier::Phase::learning);
      queries += result.queries;
      if (result.label != e.y) errors += 1.0;
    }
    out.queries += static_cast<std::uint64_t>(queries);
  }
  out.loss = errors / static_cast<double>(sample.size());
  return out;
}

double exact_risk(const hypotheses::Predictor& h, const FiniteDistribution& dist) {
  dist.validate();
  double risk = 0.0;
  for (const auto& atom : dist.support) {
    risk += atom.prob * zero_one_loss(h, atom.x, atom.y);
  }
  return risk;
}

double exact_hamming_risk(const SeqPredictFn& h,
                          const StructuredFiniteDistribution& dist) {
  dist.validate();
  double risk = 0.0;
  for (const auto& atom : dist.support) {
    risk += atom.prob * hamming_loss(h(atom.x), atom.y);
  }
  return risk;
}

double hamming_loss(const LabelSeq& a, const LabelSeq& b) {
  if (a.size() != b.size()) {
    throw LengthMismatch("sequences of length " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()));
  }
  if (a.empty()) throw LengthMismatch("empty sequences");
  double mismatches = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) mismatches += 1.0;
  }
  return mismatches / static_cast<double>(a.size());
}

double additive_surrogate_term(const std::vector<double>& scores,
                               std::size_t true_index,
                               const std::vector<double>& loss_vs_true,
                               double rho, double bound) {
  check_rho(rho);
  if (scores.size() != loss_vs_true.size()) {
    throw LengthMismatch("scores and losses must align");
  }
  double true_score = scores.at(true_index);
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (j == true_index) continue;
    worst = std::max(worst, loss_vs_true[j] - (true_score - scores[j]) / rho);
  }
  if (worst == -std::numeric_limits<double>::infinity()) return 0.0;
  return clamp_loss(worst, bound);
}

double multiplicative_surrogate_term(const std::vector<double>& scores,
                                     std::size_t true_index,
                                     const std::vector<double>& loss_vs_true,
                                     double rho, double bound) {
  check_rho(rho);
  if (scores.size() != loss_vs_true.size()) {
    throw LengthMismatch("scores and losses must align");
  }
  double true_score = scores.at(true_index);
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (j == true_index) continue;
    worst = std::max(worst, loss_vs_true[j] * (1.0 - (true_score - scores[j]) / rho));
  }
  if (worst == -std::numeric_limits<double>::infinity()) return 0.0;
  return clamp_loss(worst, bound);
}

std::vector<LabelSeq> enumerate_sequences(int alphabet_size, int length,
                                          std::size_t cap) {
  if (alphabet_size < 1 || length < 1) {
    throw LengthMismatch("alphabet size and length must be positive");
  }
  double count = std::pow(static_cast<double>(alphabet_size), length);
  if (count > static_cast<double>(cap)) {
    throw TooLarge("label set of size " + std::to_string(count) +
                   " exceeds the enumeration cap " + std::to_string(cap));
  }
  std::vector<LabelSeq> all;
  all.reserve(static_cast<std::size_t>(count));
  LabelSeq current(length, 1);
  while (true) {
    all.push_back(current);
    int pos = length - 1;
    while (pos >= 0 && current[pos] == alphabet_size) {
      current[pos] = 1;
      --pos;
    }
    if (pos < 0) break;
    ++current[pos];
  }
  return all;
}

namespace {

template <typename TermFn>
double enumerated_surrogate(const SeqScoreFn& h, const StructuredSample& sample,
                            int alphabet_size, double rho, std::size_t cap,
                            TermFn term) {
  check_rho(rho);
  check_nonempty(sample.size());
  double total = 0.0;
  for (const SeqExample& e : sample.examples) {
    auto sequences = enumerate_sequences(alphabet_size, static_cast<int>(e.y.size()), cap);
    std::vector<double> scores(sequences.size());
    std::vector<double> losses(sequences.size());
    std::size_t true_index = sequences.size();
    for (std::size_t j = 0; j < sequences.size(); ++j) {
      scores[j] = h(e.x, sequences[j]);
      losses[j] = hamming_loss(sequences[j], e.y);
      if (sequences[j] == e.y) true_index = j;
    }
    if (true_index == sequences.size()) {
      throw LabelOutOfRange("observed sequence is outside the label set");
    }
    total += term(scores, true_index, losses, rho, 1.0);
  }
  return total / static_cast<double>(sample.size());
}

}  // namespace

double additive_surrogate_loss(const SeqScoreFn& h, const StructuredSample& sample,
                               int alphabet_size, double rho, std::size_t cap) {
  return enumerated_surrogate(h, sample, alphabet_size, rho, cap,
                              additive_surrogate_term);
}

double multiplicative_surrogate_loss(const SeqScoreFn& h,
                                     const StructuredSample& sample,
                                     int alphabet_size, double rho,
                                     std::size_t cap) {
  return enumerated_surrogate(h, sample, alphabet_size, rho, cap,
                              multiplicative_surrogate_term);
}

namespace {

// view a flat sample as single-position sequences
StructuredSample lift(const Sample& sample) {
  StructuredSample out;
  out.examples.reserve(sample.size());
  for (const Example& e : sample.examples) out.examples.push_back({e.x, {e.y}});
  return out;
}

SeqScoreFn lift(const hypotheses::Scorer& h) {
  return [h](const Vector& x, const LabelSeq& y) { return h.score(x, y.at(0)); };
}

}  // namespace

double additive_surrogate_loss(const hypotheses::Scorer& h, const Sample& sample,
                               double rho) {
  return additive_surrogate_loss(lift(h), lift(sample), h.label_count, rho,
                                 static_cast<std::size_t>(h.label_count));
}

double multiplicative_surrogate_loss(const hypotheses::Scorer& h,
                                     const Sample& sample, double rho) {
  return multiplicative_surrogate_loss(lift(h), lift(sample), h.label_count, rho,
                                       static_cast<std::size_t>(h.label_count));
}

}  // namespace verikit::losses
