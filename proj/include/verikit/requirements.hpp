#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "verikit/types.hpp"

namespace verikit::requirements {

// A requirement is a deterministic, stateless 0/1 check on (input, output)
// pairs: 1 means the output is acceptable for that input. Flat requirements
// judge a single label in 1..K; structured requirements judge a label
// sequence. Rules are conjunctive conditions on input features paired with
// label effects; an output is feasible iff no matching rule excludes it.

enum class Comparator { less, less_equal, greater, greater_equal, equal };

struct AtomicPredicate {
  int feature_index = 0;  // 0-based position in the input vector
  Comparator op = Comparator::less;
  double threshold = 0.0;

  bool matches(const Vector& x) const;
};

enum class EffectKind { none, forbid, allow_only };

struct Rule {
  std::vector<AtomicPredicate> condition;  // conjunction; empty matches every x
  EffectKind effect = EffectKind::none;
  std::vector<int> labels;  // effect label set, 1-based

  // Structured-only extras. positions lists 1-based sequence positions the
  // label effect applies to (empty = all). forbidden_pairs are adjacent
  // (y_k, y_{k+1}) combinations ruled out anywhere in the sequence;
  // must_include labels must each appear somewhere.
  std::vector<int> positions;
  std::vector<std::pair<int, int>> forbidden_pairs;
  std::vector<int> must_include;

  bool condition_matches(const Vector& x) const;
};

enum class RequirementKind { flat, structured };

struct Requirement {
  RequirementKind kind = RequirementKind::flat;
  int label_count = 1;  // alphabet size; labels run 1..label_count
  std::vector<Rule> rules;
};

// Largest supported union of must_include labels across matching rules; the
// constrained decoder tracks them in a bitmask.
inline constexpr std::size_t kMaxMustInclude = 16;

// Flat evaluation: 1 iff label y survives every matching rule.
bool evaluate(const Requirement& req, const Vector& x, int y);

// All labels in 1..K that evaluate to 1 at x; may be empty.
std::vector<int> feasible_labels(const Requirement& req, const Vector& x);

// A structured requirement specialized to one (input, length): per-position
// allowed labels, an adjacency mask, and the union of must-include labels.
// This is the form the decoders consume.
struct SequenceConstraints {
  int label_count = 1;
  std::vector<std::vector<char>> allowed;  // [position][label-1]
  std::vector<std::vector<char>> pair_allowed;  // [a-1][b-1]
  std::vector<int> must_include;  // deduplicated, ascending

  bool satisfied(const LabelSeq& y) const;
};

SequenceConstraints compile_constraints(const Requirement& req, const Vector& x,
                                        int length);

// Structured evaluation: 1 iff the sequence satisfies every matching rule's
// position effects, adjacency exclusions, and must-include demands.
bool evaluate_structured(const Requirement& req, const Vector& x,
                         const LabelSeq& y);

struct FeasibilityReport {
  std::vector<std::size_t> infeasible_indices;  // into the checked input list
  bool all_feasible() const { return infeasible_indices.empty(); }
};

// Flat: inputs with an empty feasible label set.
FeasibilityReport check_feasibility(const Requirement& req,
                                    const std::vector<Vector>& inputs);

// Structured: inputs (paired with sequence lengths) for which the constrained
// decoder reports that no feasible sequence exists.
FeasibilityReport check_feasibility(const Requirement& req,
                                    const std::vector<Vector>& inputs,
                                    const std::vector<int>& lengths);

// JSON rule files. Malformed documents raise ParseError; structurally valid
// JSON with out-of-contract content (unknown comparator, negative feature
// index, label outside 1..K, unknown keys) raises SchemaError.
Requirement parse_rules(const std::string& text);
std::string serialize(const Requirement& req);
Requirement load_rules_file(const std::string& path);

// Requirement that accepts everything (no rules).
Requirement trivial(RequirementKind kind, int label_count);

}  // namespace verikit::requirements
