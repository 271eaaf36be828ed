#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "verikit/hypotheses.hpp"
#include "verikit/requirements.hpp"
#include "verikit/types.hpp"

namespace verikit::complexity {

inline constexpr int kDefaultTrials = 2000;

enum class EstimateKind {
  rademacher,
  gaussian,
  local_rademacher,
  local_rademacher_distribution,
  factor_graph,
};

std::string kind_name(EstimateKind kind);

// Monte Carlo estimate of a complexity quantity. std_error is the sample
// standard deviation of the per-trial values divided by sqrt(trials), so
// callers can scale tolerances. Reproducible given (seed, trials).
struct ComplexityEstimate {
  EstimateKind kind = EstimateKind::rademacher;
  double mean = 0.0;
  double std_error = 0.0;
  int trials = 0;
  std::uint64_t seed = 0;
};

std::string serialize(const ComplexityEstimate& estimate);

// Exact supremum of a class-specific linear functional: given one coefficient
// vector (a sign or Gaussian draw of length dim), returns
// sup over the class of the weighted sum of member values.
struct SupOracle {
  int dim = 0;
  std::function<double(const Vector&)> sup;
};

// l_q norm of a list of per-group l2 norms, q dual to p (1/p + 1/q = 1,
// p = 1 giving the max). Scaled by the largest entry for numerical safety.
double dual_norm_from_group_norms(const std::vector<double>& group_norms, double p);

// Dual group norm of a matrix whose rows are the per-label aggregate vectors.
double dual_group_norm(const Matrix& aggregates, double p);

// sup over the unit l_{2,p} group-norm ball of
//   sum_i sum_y coeff(i, y) * <w_y, phi_i>
// computed in closed form as the dual norm of v_y = sum_i coeff(i, y) phi_i.
double sup_linear_ball(const Matrix& coeff, const std::vector<Vector>& features, double p);

// class {(x, y) -> <w_y, phi(x)> : group norm of w at most 1} evaluated at the
// sample pairs (features[i], labels[i]); dim = sample size
SupOracle linear_ball_oracle(const std::vector<Vector>& features,
                             const std::vector<int>& labels, int label_count, double p);

// scalar class {x -> <w, phi(x)> : l2 norm of w at most 1}; dim = sample size
SupOracle linear_ball_oracle(const std::vector<Vector>& features, double p);

// the same pair class after masking: pairs marked infeasible contribute the
// constant -M per unit coefficient and are excluded from the aggregation,
// which keeps the supremum exact
SupOracle masked_linear_ball_oracle(const std::vector<Vector>& features,
                                    const std::vector<int>& labels, int label_count,
                                    const std::vector<char>& feasible, double M,
                                    double p);

// finite class given by a value table, one row per member, one column per
// indexed term; dim = number of columns
SupOracle finite_class_oracle(const Matrix& values);

// chain-structured linear class for the factor-graph estimator
struct ChainClassSpec {
  int label_count = 0;
  int feature_dim = 0;
  bool with_transitions = true;
  double p = 2.0;
};

// Factored class over per-example chains: every position contributes an
// emission factor with label_count assignments and every adjacent pair a
// transition factor with label_count^2 assignments. The coefficient vector
// is laid out example by example, emission blocks first (position-major,
// then label), then transition blocks (position-major, row-major in the
// label pair). The per-example factor-count weights sqrt(|F_i|) are baked
// into the supremum, so estimators treat this like any other oracle.
SupOracle factor_graph_oracle(const ChainClassSpec& spec,
                              const std::vector<Vector>& features,
                              const std::vector<int>& lengths);

// E over uniform sign vectors of the oracle supremum, without any 1/m factor.
ComplexityEstimate empirical_rademacher(const SupOracle& oracle, int trials,
                                        std::uint64_t seed);

// E over standard normal vectors of the oracle supremum, divided by the
// sample size.
ComplexityEstimate empirical_gaussian(const SupOracle& oracle, int sample_size,
                                      int trials, std::uint64_t seed);

// sign-vector estimator with the 1/m factor, for factor-graph oracles
ComplexityEstimate factor_graph_rademacher(const SupOracle& oracle, int sample_size,
                                           int trials, std::uint64_t seed);

// Local variant over a finite class given by its value table (members x m):
// per draw, members are rescaled by the largest a in [0, 1] whose empirical
// second moment (1/m) sum (a g(z_i))^2 stays at most r, computed exactly as
// min(1, sqrt(r / mean g^2)). No 1/m factor on the estimate itself.
ComplexityEstimate local_rademacher(const Matrix& values, double r, int trials,
                                    std::uint64_t seed);

// cross-check variant restricting a to a uniform grid over [0, 1]
ComplexityEstimate local_rademacher_grid(const Matrix& values, double r,
                                         int grid_size, int trials,
                                         std::uint64_t seed);

// variant whose second moments are taken under the data distribution rather
// than the sample; moments[j] supplies E[g_j^2]
ComplexityEstimate local_rademacher_moments(const Matrix& values,
                                            const Vector& moments, double r,
                                            int trials, std::uint64_t seed);

// Two-sided Monte Carlo comparison. For paired checks lhs and rhs share each
// draw and diff_std_error is the paired standard error; holds asserts
// lhs_mean <= rhs_mean + 3 * diff_std_error. For independent checks the
// combined standard error replaces the paired one. Exact enumeration sets
// the standard errors to zero and compares means directly.
struct InequalityReport {
  std::string kind;
  double lhs_mean = 0.0;
  double lhs_std_error = 0.0;
  double rhs_mean = 0.0;
  double rhs_std_error = 0.0;
  double diff_mean = 0.0;
  double diff_std_error = 0.0;
  int trials = 0;
  std::uint64_t seed = 0;
  bool holds = false;
};

std::string serialize(const InequalityReport& report);

// paired sign draws shared by both oracles; dims must agree
InequalityReport check_masked_leq(const SupOracle& masked, const SupOracle& base,
                                  int trials, std::uint64_t seed);

// exact expectation by enumerating all sign vectors; dim at most 20
InequalityReport check_masked_leq_exact(const SupOracle& masked, const SupOracle& base);

// Gaussian comparison between the masked max-score class and the
// full-coordinate class. masked_max_values is members x m (per-input maximum
// of masked scores); full_values is members x (m * label_count) with column
// (y - 1) * m + i holding member j's label-y score at input i. Both sides are
// estimated with independent Gaussian draws and carry the 1/m factor.
InequalityReport check_gaussian_comparison(const Matrix& masked_max_values,
                                           const Matrix& full_values, int sample_size,
                                           int label_count, int trials,
                                           std::uint64_t seed);

// value tables for finite score classes, for the checkers above
Matrix pair_values(const std::vector<hypotheses::Scorer>& members,
                   const std::vector<Vector>& inputs, const std::vector<int>& labels);
Matrix masked_pair_values(const std::vector<hypotheses::Scorer>& members,
                          const std::vector<Vector>& inputs,
                          const std::vector<int>& labels,
                          const requirements::Requirement& req, double M);

struct MaskedClassTables {
  Matrix masked_max;  // members x m
  Matrix full;        // members x (m * label_count)
};

MaskedClassTables build_masked_tables(const std::vector<hypotheses::Scorer>& members,
                                      const std::vector<Vector>& inputs,
                                      const requirements::Requirement& req, double M);

}  // namespace verikit::complexity
