#include "verikit/complexity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "verikit/rng.hpp"
#include "verikit/verifier.hpp"

namespace verikit::complexity {

using nlohmann::json;

std::string kind_name(EstimateKind kind) {
  switch (kind) {
    case EstimateKind::rademacher: return "rademacher";
    case EstimateKind::gaussian: return "gaussian";
    case EstimateKind::local_rademacher: return "local_rademacher";
    case EstimateKind::local_rademacher_distribution: return "local_rademacher_distribution";
    case EstimateKind::factor_graph: return "factor_graph";
  }
  return "unknown";
}

std::string serialize(const ComplexityEstimate& estimate) {
  json doc;
  doc["kind"] = kind_name(estimate.kind);
  doc["mean"] = estimate.mean;
  doc["std_error"] = estimate.std_error;
  doc["trials"] = estimate.trials;
  doc["seed"] = estimate.seed;
  return doc.dump(2);
}

namespace {

void check_p(double p) {
  if (!(p >= 1.0 && p <= 2.0)) throw InvalidP("group norm exponent must lie in [1, 2]");
}

struct TrialStats {
  double mean = 0.0;
  double std_error = 0.0;
};

TrialStats stats_of(const std::vector<double>& values) {
  TrialStats s;
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return s;
}

void fill_signs(Rng& rng, Vector& sigma) {
  for (Eigen::Index i = 0; i < sigma.size(); ++i) sigma(i) = rng.sign();
}

void fill_gaussians(Rng& rng, Vector& sigma) {
  for (Eigen::Index i = 0; i < sigma.size(); ++i) sigma(i) = rng.gaussian();
}

void check_oracle(const SupOracle& oracle) {
  if (oracle.dim < 1) throw Error("supremum oracle needs a positive dimension");
  if (!oracle.sup) throw Error("supremum oracle has no function");
}

ComplexityEstimate run_trials(EstimateKind kind, const SupOracle& oracle, int trials,
                              std::uint64_t seed, bool gaussian_draws,
                              double normalization) {
  check_oracle(oracle);
  if (trials < 1) throw Error("trials must be positive");
  std::vector<double> values(trials);
  Vector sigma(oracle.dim);
  for (int t = 0; t < trials; ++t) {
    Rng rng = Rng::derived(seed, static_cast<std::uint64_t>(t));
    if (gaussian_draws) {
      fill_gaussians(rng, sigma);
    } else {
      fill_signs(rng, sigma);
    }
    values[t] = oracle.sup(sigma) / normalization;
  }
  TrialStats s = stats_of(values);
  return {kind, s.mean, s.std_error, trials, seed};
}

}  // namespace

double dual_norm_from_group_norms(const std::vector<double>& group_norms, double p) {
  check_p(p);
  if (group_norms.empty()) return 0.0;
  double top = 0.0;
  for (double n : group_norms) top = std::max(top, n);
  if (top == 0.0) return 0.0;
  if (p == 1.0) return top;  // dual exponent is infinity
  const double q = p / (p - 1.0);
  double acc = 0.0;
  for (double n : group_norms) acc += std::pow(n / top, q);
  return top * std::pow(acc, 1.0 / q);
}

double dual_group_norm(const Matrix& aggregates, double p) {
  std::vector<double> norms;
  norms.reserve(aggregates.rows());
  for (Eigen::Index r = 0; r < aggregates.rows(); ++r) {
    norms.push_back(aggregates.row(r).norm());
  }
  return dual_norm_from_group_norms(norms, p);
}

double sup_linear_ball(const Matrix& coeff, const std::vector<Vector>& features,
                       double p) {
  check_p(p);
  if (static_cast<std::size_t>(coeff.rows()) != features.size()) {
    throw DimensionMismatch("coefficient table has " + std::to_string(coeff.rows()) +
                            " rows, feature list has " + std::to_string(features.size()));
  }
  if (features.empty()) return 0.0;
  const Eigen::Index d = features[0].size();
  Matrix aggregates = Matrix::Zero(coeff.cols(), d);
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != d) throw DimensionMismatch("feature vectors have mixed dimensions");
    for (Eigen::Index y = 0; y < coeff.cols(); ++y) {
      aggregates.row(y) += coeff(static_cast<Eigen::Index>(i), y) * features[i].transpose();
    }
  }
  return dual_group_norm(aggregates, p);
}

namespace {

void check_pair_sample(const std::vector<Vector>& features, const std::vector<int>& labels,
                       int label_count) {
  if (features.empty()) throw Error("empty sample");
  if (features.size() != labels.size()) {
    throw LengthMismatch("feature and label lists differ in length");
  }
  if (label_count < 1) throw SingleClass("label count must be positive");
  for (int y : labels) {
    if (y < 1 || y > label_count) {
      throw LabelOutOfRange("label " + std::to_string(y) + " outside 1.." +
                            std::to_string(label_count));
    }
  }
  for (const Vector& f : features) {
    if (f.size() != features[0].size()) {
      throw DimensionMismatch("feature vectors have mixed dimensions");
    }
  }
}

}  // namespace

SupOracle linear_ball_oracle(const std::vector<Vector>& features,
                             const std::vector<int>& labels, int label_count,
                             double p) {
  check_p(p);
  check_pair_sample(features, labels, label_count);
  const int m = static_cast<int>(features.size());
  SupOracle oracle;
  oracle.dim = m;
  oracle.sup = [features, labels, label_count, p](const Vector& sigma) {
    const Eigen::Index d = features[0].size();
    Matrix aggregates = Matrix::Zero(label_count, d);
    for (std::size_t i = 0; i < features.size(); ++i) {
      aggregates.row(labels[i] - 1) +=
          sigma(static_cast<Eigen::Index>(i)) * features[i].transpose();
    }
    return dual_group_norm(aggregates, p);
  };
  return oracle;
}

SupOracle linear_ball_oracle(const std::vector<Vector>& features, double p) {
  std::vector<int> ones(features.size(), 1);
  return linear_ball_oracle(features, ones, 1, p);
}

SupOracle masked_linear_ball_oracle(const std::vector<Vector>& features,
                                    const std::vector<int>& labels, int label_count,
                                    const std::vector<char>& feasible, double M,
                                    double p) {
  check_p(p);
  check_pair_sample(features, labels, label_count);
  if (feasible.size() != features.size()) {
    throw LengthMismatch("feasibility list does not match the sample");
  }
  if (M <= 0.0) throw Error("mask constant must be positive");
  SupOracle oracle;
  oracle.dim = static_cast<int>(features.size());
  oracle.sup = [features, labels, label_count, feasible, M, p](const Vector& sigma) {
    const Eigen::Index d = features[0].size();
    Matrix aggregates = Matrix::Zero(label_count, d);
    double constant = 0.0;
    for (std::size_t i = 0; i < features.size(); ++i) {
      if (feasible[i]) {
        aggregates.row(labels[i] - 1) +=
            sigma(static_cast<Eigen::Index>(i)) * features[i].transpose();
      } else {
        constant -= M * sigma(static_cast<Eigen::Index>(i));
      }
    }
    return constant + dual_group_norm(aggregates, p);
  };
  return oracle;
}

SupOracle finite_class_oracle(const Matrix& values) {
  if (values.rows() < 1 || values.cols() < 1) {
    throw DimensionMismatch("finite class table must be non-empty");
  }
  SupOracle oracle;
  oracle.dim = static_cast<int>(values.cols());
  oracle.sup = [values](const Vector& sigma) {
    double best = values.row(0).dot(sigma);
    for (Eigen::Index j = 1; j < values.rows(); ++j) {
      best = std::max(best, values.row(j).dot(sigma));
    }
    return best;
  };
  return oracle;
}

SupOracle factor_graph_oracle(const ChainClassSpec& spec,
                              const std::vector<Vector>& features,
                              const std::vector<int>& lengths) {
  check_p(spec.p);
  if (spec.label_count < 1 || spec.feature_dim < 1) {
    throw DimensionMismatch("chain class needs positive label and feature dimensions");
  }
  if (features.empty() || features.size() != lengths.size()) {
    throw LengthMismatch("feature and length lists must be non-empty and match");
  }
  for (const Vector& f : features) {
    if (f.size() != spec.feature_dim) {
      throw DimensionMismatch("feature vector dimension does not match the class spec");
    }
  }
  int dim = 0;
  for (int l : lengths) {
    if (l < 1) throw LengthMismatch("sequence lengths must be positive");
    dim += l * spec.label_count;
    if (spec.with_transitions) dim += (l - 1) * spec.label_count * spec.label_count;
  }

  SupOracle oracle;
  oracle.dim = dim;
  oracle.sup = [spec, features, lengths](const Vector& sigma) {
    const int K = spec.label_count;
    Matrix emission = Matrix::Zero(K, spec.feature_dim);
    Matrix transition = Matrix::Zero(K, K);
    Eigen::Index offset = 0;
    for (std::size_t i = 0; i < features.size(); ++i) {
      const int l = lengths[i];
      const int factors = spec.with_transitions ? 2 * l - 1 : l;
      const double weight = std::sqrt(static_cast<double>(factors));
      for (int k = 0; k < l; ++k) {
        for (int a = 0; a < K; ++a) {
          emission.row(a) += weight * sigma(offset + k * K + a) * features[i].transpose();
        }
      }
      offset += static_cast<Eigen::Index>(l) * K;
      if (spec.with_transitions) {
        for (int k = 0; k + 1 < l; ++k) {
          for (int a = 0; a < K; ++a) {
            for (int b = 0; b < K; ++b) {
              transition(a, b) += weight * sigma(offset + k * K * K + a * K + b);
            }
          }
        }
        offset += static_cast<Eigen::Index>(l - 1) * K * K;
      }
    }
    std::vector<double> norms;
    norms.reserve(K + (spec.with_transitions ? K * K : 0));
    for (int a = 0; a < K; ++a) norms.push_back(emission.row(a).norm());
    if (spec.with_transitions) {
      for (int a = 0; a < K; ++a) {
        for (int b = 0; b < K; ++b) norms.push_back(std::abs(transition(a, b)));
      }
    }
    return dual_norm_from_group_norms(norms, spec.p);
  };
  return oracle;
}

ComplexityEstimate empirical_rademacher(const SupOracle& oracle, int trials,
                                        std::uint64_t seed) {
  return run_trials(EstimateKind::rademacher, oracle, trials, seed, false, 1.0);
}

ComplexityEstimate empirical_gaussian(const SupOracle& oracle, int sample_size,
                                      int trials, std::uint64_t seed) {
  if (sample_size < 1) throw Error("sample size must be positive");
  return run_trials(EstimateKind::gaussian, oracle, trials, seed, true,
                    static_cast<double>(sample_size));
}

ComplexityEstimate factor_graph_rademacher(const SupOracle& oracle, int sample_size,
                                           int trials, std::uint64_t seed) {
  if (sample_size < 1) throw Error("sample size must be positive");
  ComplexityEstimate e = run_trials(EstimateKind::factor_graph, oracle, trials, seed,
                                    false, static_cast<double>(sample_size));
  return e;
}

namespace {

void check_value_table(const Matrix& values) {
  if (values.rows() < 1 || values.cols() < 1) {
    throw DimensionMismatch("finite class table must be non-empty");
  }
}

// per-member scale cap: the largest a in [0, 1] keeping the second moment
// at most r
Vector scale_caps(const Matrix& values, const Vector& moments, double r) {
  Vector caps(values.rows());
  for (Eigen::Index j = 0; j < values.rows(); ++j) {
    if (moments(j) <= 0.0) {
      caps(j) = 1.0;
    } else {
      caps(j) = std::min(1.0, std::sqrt(r / moments(j)));
    }
  }
  return caps;
}

ComplexityEstimate local_trials(EstimateKind kind, const Matrix& values,
                                const Vector& caps, int grid_size, int trials,
                                std::uint64_t seed) {
  if (trials < 1) throw Error("trials must be positive");
  Vector grid_caps = caps;
  if (grid_size > 0) {
    if (grid_size < 2) throw Error("grid needs at least the endpoints 0 and 1");
    for (Eigen::Index j = 0; j < grid_caps.size(); ++j) {
      // largest grid point not exceeding the exact cap
      grid_caps(j) = std::floor(caps(j) * (grid_size - 1)) / (grid_size - 1);
    }
  }
  std::vector<double> trial_values(trials);
  Vector sigma(values.cols());
  for (int t = 0; t < trials; ++t) {
    Rng rng = Rng::derived(seed, static_cast<std::uint64_t>(t));
    fill_signs(rng, sigma);
    double best = 0.0;  // a = 0 is always feasible
    for (Eigen::Index j = 0; j < values.rows(); ++j) {
      best = std::max(best, grid_caps(j) * values.row(j).dot(sigma));
    }
    trial_values[t] = best;
  }
  TrialStats s = stats_of(trial_values);
  return {kind, s.mean, s.std_error, trials, seed};
}

}  // namespace

ComplexityEstimate local_rademacher(const Matrix& values, double r, int trials,
                                    std::uint64_t seed) {
  check_value_table(values);
  if (r < 0.0) throw Error("radius must be non-negative");
  Vector moments = values.array().square().rowwise().mean();
  return local_trials(EstimateKind::local_rademacher, values,
                      scale_caps(values, moments, r), 0, trials, seed);
}

ComplexityEstimate local_rademacher_grid(const Matrix& values, double r,
                                         int grid_size, int trials,
                                         std::uint64_t seed) {
  check_value_table(values);
  if (r < 0.0) throw Error("radius must be non-negative");
  Vector moments = values.array().square().rowwise().mean();
  return local_trials(EstimateKind::local_rademacher, values,
                      scale_caps(values, moments, r), grid_size, trials, seed);
}

ComplexityEstimate local_rademacher_moments(const Matrix& values,
                                            const Vector& moments, double r,
                                            int trials, std::uint64_t seed) {
  check_value_table(values);
  if (moments.size() != values.rows()) {
    throw LengthMismatch("one second moment per member is required");
  }
  if (r < 0.0) throw Error("radius must be non-negative");
  for (Eigen::Index j = 0; j < moments.size(); ++j) {
    if (moments(j) < 0.0) throw Error("second moments must be non-negative");
  }
  return local_trials(EstimateKind::local_rademacher_distribution, values,
                      scale_caps(values, moments, r), 0, trials, seed);
}

std::string serialize(const InequalityReport& report) {
  json doc;
  doc["kind"] = report.kind;
  doc["lhs_mean"] = report.lhs_mean;
  doc["lhs_std_error"] = report.lhs_std_error;
  doc["rhs_mean"] = report.rhs_mean;
  doc["rhs_std_error"] = report.rhs_std_error;
  doc["diff_mean"] = report.diff_mean;
  doc["diff_std_error"] = report.diff_std_error;
  doc["trials"] = report.trials;
  doc["seed"] = report.seed;
  doc["holds"] = report.holds;
  return doc.dump(2);
}

InequalityReport check_masked_leq(const SupOracle& masked, const SupOracle& base,
                                  int trials, std::uint64_t seed) {
  check_oracle(masked);
  check_oracle(base);
  if (masked.dim != base.dim) {
    throw DimensionMismatch("paired oracles must share the draw dimension");
  }
  if (trials < 1) throw Error("trials must be positive");
  std::vector<double> lhs(trials), rhs(trials), diff(trials);
  Vector sigma(masked.dim);
  for (int t = 0; t < trials; ++t) {
    Rng rng = Rng::derived(seed, static_cast<std::uint64_t>(t));
    fill_signs(rng, sigma);
    lhs[t] = masked.sup(sigma);
    rhs[t] = base.sup(sigma);
    diff[t] = lhs[t] - rhs[t];
  }
  TrialStats ls = stats_of(lhs);
  TrialStats rs = stats_of(rhs);
  TrialStats ds = stats_of(diff);
  InequalityReport report;
  report.kind = "masked_leq_base";
  report.lhs_mean = ls.mean;
  report.lhs_std_error = ls.std_error;
  report.rhs_mean = rs.mean;
  report.rhs_std_error = rs.std_error;
  report.diff_mean = ds.mean;
  report.diff_std_error = ds.std_error;
  report.trials = trials;
  report.seed = seed;
  report.holds = ds.mean <= 3.0 * ds.std_error;
  return report;
}

InequalityReport check_masked_leq_exact(const SupOracle& masked, const SupOracle& base) {
  check_oracle(masked);
  check_oracle(base);
  if (masked.dim != base.dim) {
    throw DimensionMismatch("paired oracles must share the draw dimension");
  }
  if (masked.dim > 20) throw TooLarge("exact enumeration is limited to 20 sign coordinates");
  const std::uint64_t total = 1ull << masked.dim;
  long double lhs_sum = 0.0L, rhs_sum = 0.0L;
  Vector sigma(masked.dim);
  for (std::uint64_t bits = 0; bits < total; ++bits) {
    for (int i = 0; i < masked.dim; ++i) {
      sigma(i) = (bits >> i) & 1ull ? 1.0 : -1.0;
    }
    lhs_sum += masked.sup(sigma);
    rhs_sum += base.sup(sigma);
  }
  InequalityReport report;
  report.kind = "masked_leq_base_exact";
  report.lhs_mean = static_cast<double>(lhs_sum / static_cast<long double>(total));
  report.rhs_mean = static_cast<double>(rhs_sum / static_cast<long double>(total));
  report.diff_mean = report.lhs_mean - report.rhs_mean;
  report.trials = static_cast<int>(std::min<std::uint64_t>(total, 1ull << 20));
  report.seed = 0;
  report.holds = report.lhs_mean <= report.rhs_mean + 1e-12;
  return report;
}

InequalityReport check_gaussian_comparison(const Matrix& masked_max_values,
                                           const Matrix& full_values, int sample_size,
                                           int label_count, int trials,
                                           std::uint64_t seed) {
  check_value_table(masked_max_values);
  check_value_table(full_values);
  if (sample_size < 1 || label_count < 1) {
    throw DimensionMismatch("sample size and label count must be positive");
  }
  if (masked_max_values.cols() != sample_size) {
    throw DimensionMismatch("masked table must have one column per input");
  }
  if (full_values.cols() != static_cast<Eigen::Index>(sample_size) * label_count) {
    throw DimensionMismatch("full table must have sample_size * label_count columns");
  }
  if (masked_max_values.rows() != full_values.rows()) {
    throw DimensionMismatch("both tables must list the same members");
  }
  if (trials < 1) throw Error("trials must be positive");

  SupOracle lhs_oracle = finite_class_oracle(masked_max_values);
  SupOracle rhs_oracle = finite_class_oracle(full_values);
  const double m = static_cast<double>(sample_size);
  std::vector<double> lhs(trials), rhs(trials);
  Vector g_small(lhs_oracle.dim), g_large(rhs_oracle.dim);
  for (int t = 0; t < trials; ++t) {
    Rng lhs_rng = Rng::derived(seed, static_cast<std::uint64_t>(t));
    fill_gaussians(lhs_rng, g_small);
    lhs[t] = lhs_oracle.sup(g_small) / m;
    Rng rhs_rng = Rng::derived(seed, static_cast<std::uint64_t>(trials) +
                                         static_cast<std::uint64_t>(t));
    fill_gaussians(rhs_rng, g_large);
    rhs[t] = rhs_oracle.sup(g_large) / m;
  }
  TrialStats ls = stats_of(lhs);
  TrialStats rs = stats_of(rhs);
  InequalityReport report;
  report.kind = "gaussian_comparison";
  report.lhs_mean = ls.mean;
  report.lhs_std_error = ls.std_error;
  report.rhs_mean = rs.mean;
  report.rhs_std_error = rs.std_error;
  report.diff_mean = ls.mean - rs.mean;
  report.diff_std_error = std::sqrt(ls.std_error * ls.std_error +
                                    rs.std_error * rs.std_error);
  report.trials = trials;
  report.seed = seed;
  report.holds = report.diff_mean <= 3.0 * report.diff_std_error;
  return report;
}

Matrix pair_values(const std::vector<hypotheses::Scorer>& members,
                   const std::vector<Vector>& inputs, const std::vector<int>& labels) {
  if (members.empty()) throw Error("empty class");
  if (inputs.empty() || inputs.size() != labels.size()) {
    throw LengthMismatch("inputs and labels must be non-empty and match");
  }
  Matrix values(members.size(), inputs.size());
  for (std::size_t j = 0; j < members.size(); ++j) {
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      values(j, i) = members[j].score(inputs[i], labels[i]);
    }
  }
  return values;
}

Matrix masked_pair_values(const std::vector<hypotheses::Scorer>& members,
                          const std::vector<Vector>& inputs,
                          const std::vector<int>& labels,
                          const requirements::Requirement& req, double M) {
  if (members.empty()) throw Error("empty class");
  if (inputs.empty() || inputs.size() != labels.size()) {
    throw LengthMismatch("inputs and labels must be non-empty and match");
  }
  Matrix values(members.size(), inputs.size());
  for (std::size_t j = 0; j < members.size(); ++j) {
    hypotheses::Scorer masked = verifier::mask_scores(members[j], req, M);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      values(j, i) = masked.score(inputs[i], labels[i]);
    }
  }
  return values;
}

MaskedClassTables build_masked_tables(const std::vector<hypotheses::Scorer>& members,
                                      const std::vector<Vector>& inputs,
                                      const requirements::Requirement& req, double M) {
  if (members.empty()) throw Error("empty class");
  if (inputs.empty()) throw Error("empty sample");
  const int K = members[0].label_count;
  for (const auto& s : members) {
    if (s.label_count != K) throw DimensionMismatch("members disagree on the label count");
  }
  const int m = static_cast<int>(inputs.size());
  MaskedClassTables tables;
  tables.masked_max = Matrix(members.size(), m);
  tables.full = Matrix(members.size(), static_cast<Eigen::Index>(m) * K);
  for (std::size_t j = 0; j < members.size(); ++j) {
    hypotheses::Scorer masked = verifier::mask_scores(members[j], req, M);
    for (int i = 0; i < m; ++i) {
      double best = masked.score(inputs[i], 1);
      for (int y = 2; y <= K; ++y) best = std::max(best, masked.score(inputs[i], y));
      tables.masked_max(j, i) = best;
      for (int y = 1; y <= K; ++y) {
        tables.full(j, static_cast<Eigen::Index>(y - 1) * m + i) =
            members[j].score(inputs[i], y);
      }
    }
  }
  return tables;
}

}  // namespace verikit::complexity
