#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "verikit/complexity.hpp"
#include "verikit/hypotheses.hpp"
#include "verikit/losses.hpp"
#include "verikit/requirements.hpp"
#include "verikit/structured.hpp"
#include "verikit/types.hpp"
#include "verikit/verifier.hpp"

namespace verikit::harness {

// Every experiment is a pure function of its config: identical configs give
// byte-identical output files.
struct ExperimentConfig {
  std::string experiment = "itv";
  std::uint64_t seed = 1;
  int m = 200;
  int trials = complexity::kDefaultTrials;
  double rho = 1.0;
  double delta = 0.05;
  double p = 2.0;
  int K = 3;
  int d = 5;
  int l = 3;
  std::string rules_path;
  std::string out_dir = "out";
  int n_draws = 200;
  int instances = 100;
  int support_size = 12;
  int pool_size = 32;
  int class_size = 16;
};

ExperimentConfig parse_config(const std::string& text);
std::string serialize(const ExperimentConfig& cfg);
ExperimentConfig load_config_file(const std::string& path);

// Finite-support distribution with deterministic labels, so the truth
// predictor has exact risk 0. Coordinate 0 separates the support points,
// which lets threshold rules cut the support anywhere.
struct RealizableInstance {
  losses::FiniteDistribution distribution;
  hypotheses::TabulatedHypothesis truth_table;
  std::vector<Vector> support;
};

RealizableInstance gen_realizable(std::uint64_t seed, int support_size, int K, int d);

hypotheses::Predictor truth_predictor(const RealizableInstance& instance);

// Random flat requirement made of coordinate-0 threshold rules. Retries
// derived seeds until every support point keeps a feasible label. With
// consistent = true, observed labels are additionally never forbidden, so
// the requirement is consistent with the instance's truth.
requirements::Requirement gen_requirement(std::uint64_t seed,
                                          const RealizableInstance& instance,
                                          bool consistent);

// The two-point instance where inference-time verification provably beats
// applying the check after unconstrained learning: two hypotheses, each
// wrong on one point, and a requirement that rejects exactly the mistake of
// the first one.
struct CounterexampleInstance {
  losses::FiniteDistribution distribution;
  hypotheses::TabulatedHypothesis h0;
  hypotheses::TabulatedHypothesis h1;
  requirements::Requirement requirement;
  std::vector<Vector> support;
};

CounterexampleInstance gen_counterexample();

// exact ERM over a finite predictor pool by 0/1 loss, ties to the first
// minimizer; with a requirement every member is wrapped first, rejected
// observations count as errors, and query usage is reported against the
// label_count * accepted + rejected budget
struct ErmResult {
  std::size_t index = 0;
  double empirical_loss = 0.0;
  std::uint64_t queries = 0;
  std::uint64_t budget = 0;
};

ErmResult erm_zero_one(const std::vector<hypotheses::Predictor>& pool,
                       const losses::Sample& sample,
                       const requirements::Requirement* with_cv);

// Seeded random search over the unit group-norm ball (a simple stand-in
// learner), minimizing the empirical margin loss; with a requirement the
// loss is taken on masked scores. probe calibrates the mask constant.
hypotheses::ScoringHypothesis search_margin_erm(const losses::Sample& sample,
                                                int d, int K, double p, double rho,
                                                std::uint64_t seed, int candidates,
                                                const requirements::Requirement* with_cv,
                                                const std::vector<Vector>& probe);

structured::ChainModel search_chain_erm(const losses::StructuredSample& sample,
                                        int d, int K, bool with_transitions,
                                        double p, double rho, std::uint64_t seed,
                                        int candidates,
                                        const requirements::Requirement* with_cv);

// one realizable instance, one requirement, exact sandwich check
struct SandwichRecord {
  int instance_id = 0;
  std::string requirement_kind;  // "trivial", "consistent", or "random"
  double risk_truth_cv = 0.0;    // exact risk of the verified truth
  double epsilon_hat = 0.0;      // exact risk of the unverified learned hypothesis
  double risk_erm_cv = 0.0;      // exact risk of the verified learned hypothesis
  bool lower_holds = false;      // risk_truth_cv <= risk_erm_cv
  bool upper_holds = false;      // risk_erm_cv <= risk_truth_cv + epsilon_hat
};

struct SandwichReport {
  std::vector<SandwichRecord> records;
  int violations = 0;
  bool ok() const { return violations == 0; }
};

SandwichReport run_itv_experiment(const ExperimentConfig& cfg);

struct CounterexampleReport {
  double risk_h0 = 0.0;
  double risk_h1 = 0.0;
  double risk_h0_cv = 0.0;
  double risk_h1_cv = 0.0;
  double itv_gap = 0.0;  // verify-after-learning regret: exactly 0.5
  double ltv_gap = 0.0;  // learn-over-the-verified-class regret: exactly 0
  bool requirement_consistent = false;
  bool ok() const;
};

CounterexampleReport run_counterexample();

struct DrawRecord {
  int draw_id = 0;
  std::string form;            // "margin", "additive", or "multiplicative"
  double lhs = 0.0;            // exact risk of the adversarial verified member
  double empirical_loss = 0.0; // its surrogate loss on the drawn sample
  double rhs = 0.0;
  bool holds = false;
};

struct FormSummary {
  std::string form;
  double violation_fraction = 0.0;
  double slack = 0.0;  // 3-sigma binomial slack at the configured delta
  bool ok = false;
};

struct BoundReport {
  std::vector<DrawRecord> records;
  std::vector<FormSummary> forms;
  complexity::ComplexityEstimate complexity;
  double complexity_term = 0.0;  // the bound's fixed complexity summand
  double deviation_term = 0.0;   // the sqrt(log(1/delta) / 2m) summand
  bool complexity_recomputation_ok = false;
  // exact risk never exceeds the exact surrogate risk for any pool member
  // (checked on the structured run, vacuously true otherwise)
  bool surrogate_dominates_ok = true;
  bool ok() const;
};

// Generalization bound check for the flat multi-class margin bound: a fixed
// pool of verified linear hypotheses, fresh samples per draw, exact risks on
// the left, margin loss plus complexity and deviation terms on the right.
// Records the per-draw worst member. The complexity term belongs to the
// unverified class, so verification never enlarges the right-hand side.
BoundReport run_bound_check_multiclass(const ExperimentConfig& cfg);

// Chain-structured analogue with Hamming task loss (bound 1), checked for
// the additive and the multiplicative surrogate in one run.
BoundReport run_bound_check_structured(const ExperimentConfig& cfg);

struct ComplexityRunReport {
  std::vector<complexity::ComplexityEstimate> estimates;
  std::vector<complexity::InequalityReport> checks;
  bool ok() const;
};

// estimator demonstration plus the masked-vs-base and Gaussian comparison
// checks on a generated instance
ComplexityRunReport run_complexity_checks(const ExperimentConfig& cfg);

// one results.csv row; the column set is fixed across experiments
struct CsvRow {
  int draw_id = 0;
  int m = 0;
  double rho = 0.0;
  double delta = 0.0;
  double lhs = 0.0;
  double empirical_loss = 0.0;
  double complexity_mean = 0.0;
  double complexity_stderr = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

std::string csv_text(const std::vector<CsvRow>& rows);

std::string serialize(const SandwichReport& report);
std::string serialize(const CounterexampleReport& report);
std::string serialize(const BoundReport& report);
std::string serialize(const ComplexityRunReport& report);

std::vector<CsvRow> csv_rows(const SandwichReport& report, const ExperimentConfig& cfg);
std::vector<CsvRow> csv_rows(const CounterexampleReport& report,
                             const ExperimentConfig& cfg);
std::vector<CsvRow> csv_rows(const BoundReport& report, const ExperimentConfig& cfg);
std::vector<CsvRow> csv_rows(const ComplexityRunReport& report,
                             const ExperimentConfig& cfg);

// Writes results.json, results.csv, config.json, and manifest.json into
// cfg.out_dir, creating it if needed. Doubles are printed with %.17g so
// reruns of the same config are byte-identical.
void emit_results(const std::string& results_json, const std::vector<CsvRow>& rows,
                  const ExperimentConfig& cfg);

}  // namespace verikit::harness
