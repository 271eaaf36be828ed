#include "verikit/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "verikit/rng.hpp"

namespace verikit::harness {

using nlohmann::json;

namespace {

constexpr double kExactTol = 1e-12;

void require_keys(const json& obj, const std::set<std::string>& known,
                  const std::string& where) {
  for (const auto& item : obj.items()) {
    if (!known.count(item.key())) {
      throw SchemaError("unknown key \"" + item.key() + "\" in " + where);
    }
  }
}

void read_int(const json& doc, const char* key, int& out) {
  if (!doc.contains(key)) return;
  if (!doc[key].is_number_integer()) {
    throw SchemaError(std::string(key) + " must be an integer");
  }
  out = doc[key].get<int>();
}

void read_double(const json& doc, const char* key, double& out) {
  if (!doc.contains(key)) return;
  if (!doc[key].is_number()) throw SchemaError(std::string(key) + " must be a number");
  out = doc[key].get<double>();
}

void read_string(const json& doc, const char* key, std::string& out) {
  if (!doc.contains(key)) return;
  if (!doc[key].is_string()) throw SchemaError(std::string(key) + " must be a string");
  out = doc[key].get<std::string>();
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.m < 1) throw Error("m must be positive");
  if (cfg.trials < 1) throw Error("trials must be positive");
  if (cfg.rho <= 0.0) throw NonpositiveRho("rho must be positive");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw Error("delta must lie in (0, 1)");
  if (!(cfg.p >= 1.0 && cfg.p <= 2.0)) throw InvalidP("p must lie in [1, 2]");
  if (cfg.K < 2) throw SingleClass("experiments need at least two labels");
  if (cfg.d < 1) throw Error("d must be positive");
  if (cfg.l < 1) throw Error("l must be positive");
  if (cfg.n_draws < 1) throw Error("n_draws must be positive");
  if (cfg.instances < 1) throw Error("instances must be positive");
  if (cfg.support_size < 2) throw Error("support_size must be at least 2");
  if (cfg.pool_size < 1) throw Error("pool_size must be positive");
  if (cfg.class_size < 1) throw Error("class_size must be positive");
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("config root must be an object");
  require_keys(doc,
               {"experiment", "seed", "m", "trials", "rho", "delta", "p", "K", "d",
                "l", "rules", "out", "n_draws", "instances", "support_size",
                "pool_size", "class_size"},
               "config");
  ExperimentConfig cfg;
  read_string(doc, "experiment", cfg.experiment);
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_integer()) throw SchemaError("seed must be an integer");
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  read_int(doc, "m", cfg.m);
  read_int(doc, "trials", cfg.trials);
  read_double(doc, "rho", cfg.rho);
  read_double(doc, "delta", cfg.delta);
  read_double(doc, "p", cfg.p);
  read_int(doc, "K", cfg.K);
  read_int(doc, "d", cfg.d);
  read_int(doc, "l", cfg.l);
  read_string(doc, "rules", cfg.rules_path);
  read_string(doc, "out", cfg.out_dir);
  read_int(doc, "n_draws", cfg.n_draws);
  read_int(doc, "instances", cfg.instances);
  read_int(doc, "support_size", cfg.support_size);
  read_int(doc, "pool_size", cfg.pool_size);
  read_int(doc, "class_size", cfg.class_size);
  validate_config(cfg);
  return cfg;
}

std::string serialize(const ExperimentConfig& cfg) {
  json doc;
  doc["experiment"] = cfg.experiment;
  doc["seed"] = cfg.seed;
  doc["m"] = cfg.m;
  doc["trials"] = cfg.trials;
  doc["rho"] = cfg.rho;
  doc["delta"] = cfg.delta;
  doc["p"] = cfg.p;
  doc["K"] = cfg.K;
  doc["d"] = cfg.d;
  doc["l"] = cfg.l;
  doc["rules"] = cfg.rules_path;
  doc["out"] = cfg.out_dir;
  doc["n_draws"] = cfg.n_draws;
  doc["instances"] = cfg.instances;
  doc["support_size"] = cfg.support_size;
  doc["pool_size"] = cfg.pool_size;
  doc["class_size"] = cfg.class_size;
  return doc.dump(2);
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

RealizableInstance gen_realizable(std::uint64_t seed, int support_size, int K, int d) {
  if (support_size < 1 || K < 1 || d < 1) {
    throw Error("generator needs positive support size and dimensions");
  }
  Rng rng(seed);
  RealizableInstance inst;
  Matrix scores = Matrix::Zero(support_size, K);
  std::vector<double> raw(support_size);
  double total = 0.0;
  for (int i = 0; i < support_size; ++i) {
    Vector x(d);
    // coordinate 0 spreads the support so threshold rules can cut anywhere
    x(0) = i + 0.5 * rng.uniform();
    for (int j = 1; j < d; ++j) x(j) = rng.uniform(-1.0, 1.0);
    int label = rng.uniform_int(1, K);
    raw[i] = rng.uniform(0.1, 1.0);
    total += raw[i];
    inst.support.push_back(x);
    inst.distribution.support.push_back({x, label, 0.0});
    scores(i, label - 1) = 1.0;
  }
  for (int i = 0; i < support_size; ++i) {
    inst.distribution.support[i].prob = raw[i] / total;
  }
  inst.distribution.validate();
  inst.truth_table.inputs = inst.support;
  inst.truth_table.scores = scores;
  return inst;
}

hypotheses::Predictor truth_predictor(const RealizableInstance& instance) {
  return hypotheses::as_predictor(hypotheses::as_scorer(instance.truth_table));
}

requirements::Requirement gen_requirement(std::uint64_t seed,
                                          const RealizableInstance& instance,
                                          bool consistent) {
  const int K = instance.truth_table.label_count();
  if (K < 2) throw SingleClass("requirement generation needs at least two labels");
  double lo = instance.support[0](0), hi = lo;
  for (const Vector& x : instance.support) {
    lo = std::min(lo, x(0));
    hi = std::max(hi, x(0));
  }
  for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
    Rng rng(derive_seed(seed, attempt));
    requirements::Requirement req;
    req.kind = requirements::RequirementKind::flat;
    req.label_count = K;
    const int n_rules = rng.uniform_int(1, 3);
    for (int r = 0; r < n_rules; ++r) {
      requirements::Rule rule;
      rule.effect = requirements::EffectKind::forbid;
      requirements::AtomicPredicate pred;
      pred.feature_index = 0;
      const requirements::Comparator ops[] = {
          requirements::Comparator::less, requirements::Comparator::less_equal,
          requirements::Comparator::greater, requirements::Comparator::greater_equal};
      pred.op = ops[rng.uniform_int(0, 3)];
      pred.threshold = rng.uniform(lo - 0.25, hi + 0.25);
      rule.condition.push_back(pred);
      const int subset = rng.uniform_int(1, K - 1);
      std::set<int> chosen;
      while (static_cast<int>(chosen.size()) < subset) {
        chosen.insert(rng.uniform_int(1, K));
      }
      rule.labels.assign(chosen.begin(), chosen.end());
      req.rules.push_back(rule);
    }
    if (consistent) {
      for (auto& rule : req.rules) {
        for (const auto& atom : instance.distribution.support) {
          if (rule.condition_matches(atom.x)) {
            rule.labels.erase(std::remove(rule.labels.begin(), rule.labels.end(), atom.y),
                              rule.labels.end());
          }
        }
      }
      std::erase_if(req.rules, [](const requirements::Rule& r) { return r.labels.empty(); });
      if (req.rules.empty()) continue;
    }
    if (requirements::check_feasibility(req, instance.support).all_feasible()) {
      return req;
    }
  }
  throw Error("no feasible requirement found after 64 attempts");
}

CounterexampleInstance gen_counterexample() {
  CounterexampleInstance inst;
  Vector x0(1), x1(1);
  x0 << 0.0;
  x1 << 1.0;
  inst.support = {x0, x1};
  inst.distribution.support = {{x0, 1, 0.5}, {x1, 1, 0.5}};
  inst.distribution.validate();

  Matrix s0(2, 2), s1(2, 2);
  // h0 predicts 2 on x0 and 1 on x1; h1 predicts 1 on x0 and 2 on x1
  s0 << 0, 1, 1, 0;
  s1 << 1, 0, 0, 1;
  inst.h0.inputs = inst.support;
  inst.h0.scores = s0;
  inst.h1.inputs = inst.support;
  inst.h1.scores = s1;

  requirements::Requirement req;
  req.kind = requirements::RequirementKind::flat;
  req.label_count = 2;
  requirements::Rule rule;
  rule.effect = requirements::EffectKind::forbid;
  rule.labels = {2};
  rule.condition.push_back({0, requirements::Comparator::less_equal, 0.5});
  req.rules.push_back(rule);
  inst.requirement = req;
  return inst;
}

ErmResult erm_zero_one(const std::vector<hypotheses::Predictor>& pool,
                       const losses::Sample& sample,
                       const requirements::Requirement* with_cv) {
  if (pool.empty()) throw Error("empty hypothesis pool");
  if (sample.size() == 0) throw Error("empty sample");
  std::vector<Vector> probe;
  if (with_cv) {
    probe.reserve(sample.size());
    for (const auto& e : sample.examples) probe.push_back(e.x);
  }
  ErmResult result;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < pool.size(); ++j) {
    double loss;
    if (with_cv) {
      verifier::VerifiedHypothesis vh = verifier::wrap(pool[j], *with_cv, probe);
      losses::SplitZeroOne split = losses::empirical_zero_one_split(vh, sample);
      loss = split.loss;
      result.queries += split.queries;
      result.budget += static_cast<std::uint64_t>(vh.label_count()) * split.accepted_count +
                       split.rejected_count;
    } else {
      loss = losses::empirical_zero_one(pool[j], sample);
    }
    if (loss < best) {
      best = loss;
      result.index = j;
      result.empirical_loss = loss;
    }
  }
  return result;
}

hypotheses::ScoringHypothesis search_margin_erm(const losses::Sample& sample,
                                                int d, int K, double p, double rho,
                                                std::uint64_t seed, int candidates,
                                                const requirements::Requirement* with_cv,
                                                const std::vector<Vector>& probe) {
  if (candidates < 1) throw Error("candidate count must be positive");
  hypotheses::ScoringHypothesis best_h;
  double best = std::numeric_limits<double>::infinity();
  for (int t = 0; t < candidates; ++t) {
    hypotheses::ScoringHypothesis h =
        hypotheses::sample_unit_ball(d, K, p, derive_seed(seed, t));
    double loss;
    if (with_cv) {
      verifier::VerifiedHypothesis vh = verifier::wrap(
          hypotheses::as_scorer(h), *with_cv, verifier::Strategy::constrained_argmax, probe);
      loss = losses::empirical_margin_loss(verifier::masked_scorer(vh), sample, rho);
    } else {
      loss = losses::empirical_margin_loss(hypotheses::as_scorer(h), sample, rho);
    }
    if (loss < best) {
      best = loss;
      best_h = h;
    }
  }
  return best_h;
}

namespace {

// Exact sequence surrogate of a chain model with optional requirement
// masking, by enumeration. Scores are computed per example once; the mask
// constant dominates every score seen in the sample.
double structured_surrogate(const structured::ChainModel& model,
                            const losses::StructuredSample& sample,
                            const requirements::Requirement* req, double rho,
                            structured::SurrogateMode mode) {
  if (sample.size() == 0) throw Error("empty sample");
  const int K = model.label_count();
  std::vector<std::vector<double>> all_scores(sample.size());
  std::vector<std::vector<LabelSeq>> all_seqs(sample.size());
  double max_abs = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const auto& e = sample.examples[i];
    const int l = static_cast<int>(e.y.size());
    all_seqs[i] = losses::enumerate_sequences(K, l, losses::kEnumerationCap);
    all_scores[i].resize(all_seqs[i].size());
    for (std::size_t s = 0; s < all_seqs[i].size(); ++s) {
      all_scores[i][s] = structured::score(model, e.x, all_seqs[i][s]);
      max_abs = std::max(max_abs, std::abs(all_scores[i][s]));
    }
  }
  const double M = max_abs + 1.0;
  double total = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const auto& e = sample.examples[i];
    const int l = static_cast<int>(e.y.size());
    std::vector<double> scores = all_scores[i];
    if (req) {
      auto cs = requirements::compile_constraints(*req, e.x, l);
      for (std::size_t s = 0; s < scores.size(); ++s) {
        if (!cs.satisfied(all_seqs[i][s])) scores[s] = -M;
      }
    }
    std::vector<double> hammings(all_seqs[i].size());
    std::size_t true_index = all_seqs[i].size();
    for (std::size_t s = 0; s < all_seqs[i].size(); ++s) {
      hammings[s] = losses::hamming_loss(all_seqs[i][s], e.y);
      if (all_seqs[i][s] == e.y) true_index = s;
    }
    if (true_index == all_seqs[i].size()) {
      throw LabelOutOfRange("observed sequence is outside the label set");
    }
    total += mode == structured::SurrogateMode::additive
                 ? losses::additive_surrogate_term(scores, true_index, hammings, rho, 1.0)
                 : losses::multiplicative_surrogate_term(scores, true_index, hammings,
                                                         rho, 1.0);
  }
  return total / static_cast<double>(sample.size());
}

}  // namespace

structured::ChainModel search_chain_erm(const losses::StructuredSample& sample,
                                        int d, int K, bool with_transitions,
                                        double p, double rho, std::uint64_t seed,
                                        int candidates,
                                        const requirements::Requirement* with_cv) {
  if (candidates < 1) throw Error("candidate count must be positive");
  structured::ChainModel best_model;
  double best = std::numeric_limits<double>::infinity();
  for (int t = 0; t < candidates; ++t) {
    structured::ChainModel model = structured::sample_chain_unit_ball(
        d, K, with_transitions, p, derive_seed(seed, t));
    double loss = structured_surrogate(model, sample, with_cv, rho,
                                       structured::SurrogateMode::additive);
    if (loss < best) {
      best = loss;
      best_model = model;
    }
  }
  return best_model;
}

SandwichReport run_itv_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  SandwichReport report;
  for (int idx = 0; idx < cfg.instances; ++idx) {
    const std::uint64_t inst_seed = derive_seed(cfg.seed, idx);
    RealizableInstance inst =
        gen_realizable(inst_seed, cfg.support_size, cfg.K, cfg.d);

    requirements::Requirement req;
    std::string kind;
    if (idx % 10 == 0) {
      req = requirements::trivial(requirements::RequirementKind::flat, cfg.K);
      kind = "trivial";
    } else if (idx % 10 == 1) {
      req = gen_requirement(derive_seed(inst_seed, 1001), inst, true);
      kind = "consistent";
    } else {
      req = gen_requirement(derive_seed(inst_seed, 1002), inst, false);
      kind = "random";
    }

    // finite predictor pool containing the truth, so the instance stays
    // realizable for the learner
    std::vector<hypotheses::TabulatedHypothesis> tables;
    tables.push_back(inst.truth_table);
    for (int j = 1; j < cfg.class_size; ++j) {
      Rng rng = Rng::derived(inst_seed, 2000 + static_cast<std::uint64_t>(j));
      hypotheses::TabulatedHypothesis t;
      t.inputs = inst.support;
      t.scores = Matrix(cfg.support_size, cfg.K);
      for (int r = 0; r < cfg.support_size; ++r) {
        for (int c = 0; c < cfg.K; ++c) t.scores(r, c) = rng.uniform(-1.0, 1.0);
      }
      tables.push_back(t);
    }
    std::vector<hypotheses::Predictor> pool;
    for (const auto& t : tables) {
      pool.push_back(hypotheses::as_predictor(hypotheses::as_scorer(t)));
    }

    Rng sample_rng = Rng::derived(inst_seed, 3000);
    losses::Sample S = losses::draw_sample(inst.distribution, cfg.m, sample_rng);
    ErmResult erm = erm_zero_one(pool, S, nullptr);

    SandwichRecord rec;
    rec.instance_id = idx;
    rec.requirement_kind = kind;
    rec.epsilon_hat = losses::exact_risk(pool[erm.index], inst.distribution);

    verifier::VerifiedHypothesis vh_hat =
        verifier::wrap(pool[erm.index], req, inst.support);
    rec.risk_erm_cv =
        losses::exact_risk(verifier::as_predictor(vh_hat), inst.distribution);
    verifier::VerifiedHypothesis vh_truth =
        verifier::wrap(truth_predictor(inst), req, inst.support);
    rec.risk_truth_cv =
        losses::exact_risk(verifier::as_predictor(vh_truth), inst.distribution);

    rec.lower_holds = rec.risk_truth_cv <= rec.risk_erm_cv + kExactTol;
    rec.upper_holds = rec.risk_erm_cv <= rec.risk_truth_cv + rec.epsilon_hat + kExactTol;
    if (!(rec.lower_holds && rec.upper_holds)) ++report.violations;
    report.records.push_back(rec);
  }
  return report;
}

bool CounterexampleReport::ok() const {
  return risk_h0 == 0.5 && risk_h1 == 0.5 && risk_h0_cv == 0.0 && risk_h1_cv == 0.5 &&
         itv_gap == 0.5 && ltv_gap == 0.0 && requirement_consistent;
}

CounterexampleReport run_counterexample() {
  CounterexampleInstance inst = gen_counterexample();
  CounterexampleReport report;

  hypotheses::Predictor p0 = hypotheses::as_predictor(hypotheses::as_scorer(inst.h0));
  hypotheses::Predictor p1 = hypotheses::as_predictor(hypotheses::as_scorer(inst.h1));
  report.risk_h0 = losses::exact_risk(p0, inst.distribution);
  report.risk_h1 = losses::exact_risk(p1, inst.distribution);

  verifier::VerifiedHypothesis vh0 =
      verifier::wrap(p0, inst.requirement, inst.support);
  verifier::VerifiedHypothesis vh1 =
      verifier::wrap(p1, inst.requirement, inst.support);
  report.risk_h0_cv =
      losses::exact_risk(verifier::as_predictor(vh0), inst.distribution);
  report.risk_h1_cv =
      losses::exact_risk(verifier::as_predictor(vh1), inst.distribution);

  const double best_cv = std::min(report.risk_h0_cv, report.risk_h1_cv);
  // verify-after-learning: the learner may return either hypothesis since
  // their risks tie; the adversarial yet legitimate pick is h1
  report.itv_gap = report.risk_h1_cv - best_cv;
  // learning over the verified class: exact ERM picks the first minimizer
  const double erm_cv = report.risk_h0_cv <= report.risk_h1_cv ? report.risk_h0_cv
                                                               : report.risk_h1_cv;
  report.ltv_gap = erm_cv - best_cv;

  report.requirement_consistent = true;
  for (const auto& atom : inst.distribution.support) {
    if (!requirements::evaluate(inst.requirement, atom.x, atom.y)) {
      report.requirement_consistent = false;
    }
  }
  return report;
}

bool BoundReport::ok() const {
  if (!complexity_recomputation_ok || !surrogate_dominates_ok) return false;
  for (const auto& f : forms) {
    if (!f.ok) return false;
  }
  return true;
}

namespace {

// sample atom indices by inverse CDF, matching the distribution's weights
std::vector<int> draw_atom_indices(const std::vector<double>& probs, int m, Rng& rng) {
  std::vector<int> out(m);
  for (int i = 0; i < m; ++i) {
    const double u = rng.uniform();
    double acc = 0.0;
    int pick = static_cast<int>(probs.size()) - 1;
    for (std::size_t a = 0; a < probs.size(); ++a) {
      acc += probs[a];
      if (u < acc) {
        pick = static_cast<int>(a);
        break;
      }
    }
    out[i] = pick;
  }
  return out;
}

struct MonteCarloMean {
  double mean = 0.0;
  double std_error = 0.0;
};

MonteCarloMean mean_of(const std::vector<double>& values) {
  MonteCarloMean s;
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

FormSummary summarize_form(const std::string& form, const std::vector<DrawRecord>& records,
                           double delta, int n_draws) {
  FormSummary summary;
  summary.form = form;
  int violations = 0;
  int count = 0;
  for (const auto& rec : records) {
    if (rec.form != form) continue;
    ++count;
    if (!rec.holds) ++violations;
  }
  summary.violation_fraction =
      count > 0 ? static_cast<double>(violations) / count : 0.0;
  summary.slack = 3.0 * std::sqrt(delta * (1.0 - delta) / n_draws);
  summary.ok = summary.violation_fraction <= delta + summary.slack;
  return summary;
}

}  // namespace

BoundReport run_bound_check_multiclass(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const std::uint64_t master = cfg.seed;
  RealizableInstance inst =
      gen_realizable(derive_seed(master, 1), cfg.support_size, cfg.K, cfg.d);
  requirements::Requirement req;
  if (!cfg.rules_path.empty()) {
    req = requirements::load_rules_file(cfg.rules_path);
    if (req.kind != requirements::RequirementKind::flat || req.label_count != cfg.K) {
      throw DimensionMismatch("rules file does not match the configured label count");
    }
    if (!requirements::check_feasibility(req, inst.support).all_feasible()) {
      throw InfeasibleInput("rules file leaves support points with no feasible label", {});
    }
  } else {
    req = gen_requirement(derive_seed(master, 2), inst, false);
  }

  // fixed pool: unit ball samples plus members tuned to small pilot samples,
  // the hardest cases the uniform bound must survive
  std::vector<hypotheses::ScoringHypothesis> pool;
  for (int j = 0; j < cfg.pool_size; ++j) {
    pool.push_back(hypotheses::sample_unit_ball(cfg.d, cfg.K, cfg.p,
                                                derive_seed(master, 100 + j)));
  }
  for (int a = 0; a < 3; ++a) {
    Rng pilot_rng = Rng::derived(master, 200 + static_cast<std::uint64_t>(a));
    losses::Sample pilot = losses::draw_sample(
        inst.distribution, std::min(cfg.m, 20), pilot_rng);
    pool.push_back(search_margin_erm(pilot, cfg.d, cfg.K, cfg.p, cfg.rho,
                                     derive_seed(master, 300 + a), 512, &req,
                                     inst.support));
  }

  // exact risks and per-atom margin losses are pool-and-distribution facts,
  // independent of the draws
  const std::size_t n_members = pool.size();
  const std::size_t n_atoms = inst.distribution.support.size();
  std::vector<double> lhs_exact(n_members);
  Matrix atom_margin_loss(n_members, n_atoms);
  for (std::size_t j = 0; j < n_members; ++j) {
    verifier::VerifiedHypothesis vh =
        verifier::wrap(hypotheses::as_scorer(pool[j]), req,
                       verifier::Strategy::constrained_argmax, inst.support);
    lhs_exact[j] = losses::exact_risk(verifier::as_predictor(vh), inst.distribution);
    hypotheses::Scorer masked = verifier::masked_scorer(vh);
    for (std::size_t a = 0; a < n_atoms; ++a) {
      const auto& atom = inst.distribution.support[a];
      Vector scores = hypotheses::score_all(masked, atom.x);
      double margin = hypotheses::margin_of_scores(scores, atom.y);
      atom_margin_loss(j, a) = losses::ramp_loss(margin, cfg.rho);
    }
  }

  std::vector<double> probs;
  for (const auto& atom : inst.distribution.support) probs.push_back(atom.prob);

  // expected Rademacher complexity of the scalar projection class over fresh
  // samples, with the 1/m normalization the bound's units need
  auto estimate_complexity = [&]() {
    std::vector<double> values(cfg.trials);
    for (int t = 0; t < cfg.trials; ++t) {
      Rng rng = Rng::derived(master, 400000 + static_cast<std::uint64_t>(t));
      std::vector<int> atoms = draw_atom_indices(probs, cfg.m, rng);
      Vector v = Vector::Zero(cfg.d);
      for (int i = 0; i < cfg.m; ++i) {
        v += rng.sign() * inst.distribution.support[atoms[i]].x;
      }
      values[t] = v.norm() / cfg.m;
    }
    MonteCarloMean s = mean_of(values);
    complexity::ComplexityEstimate est;
    est.kind = complexity::EstimateKind::rademacher;
    est.mean = s.mean;
    est.std_error = s.std_error;
    est.trials = cfg.trials;
    est.seed = master;
    return est;
  };

  BoundReport report;
  report.complexity = estimate_complexity();
  {
    complexity::ComplexityEstimate again = estimate_complexity();
    report.complexity_recomputation_ok = again.mean == report.complexity.mean &&
                                         again.std_error == report.complexity.std_error;
  }
  report.complexity_term = (4.0 * cfg.K / cfg.rho) * report.complexity.mean;
  report.deviation_term = std::sqrt(std::log(1.0 / cfg.delta) / (2.0 * cfg.m));

  for (int t = 0; t < cfg.n_draws; ++t) {
    Rng rng = Rng::derived(master, 500000 + static_cast<std::uint64_t>(t));
    std::vector<int> atoms = draw_atom_indices(probs, cfg.m, rng);
    DrawRecord worst;
    worst.draw_id = t;
    worst.form = "margin";
    double worst_gap = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n_members; ++j) {
      double emp = 0.0;
      for (int i = 0; i < cfg.m; ++i) emp += atom_margin_loss(j, atoms[i]);
      emp /= cfg.m;
      const double rhs = emp + report.complexity_term + report.deviation_term;
      const double gap = lhs_exact[j] - rhs;
      if (gap > worst_gap) {
        worst_gap = gap;
        worst.lhs = lhs_exact[j];
        worst.empirical_loss = emp;
        worst.rhs = rhs;
        worst.holds = lhs_exact[j] <= rhs;
      }
    }
    report.records.push_back(worst);
  }
  report.forms.push_back(
      summarize_form("margin", report.records, cfg.delta, cfg.n_draws));
  return report;
}

namespace {

struct StructuredInstance {
  losses::StructuredFiniteDistribution distribution;
  std::vector<Vector> support;
  std::vector<int> lengths;
};

StructuredInstance gen_structured_instance(std::uint64_t seed, int support_size,
                                           int K, int d, int l) {
  Rng rng(seed);
  StructuredInstance inst;
  std::vector<double> raw(support_size);
  double total = 0.0;
  for (int i = 0; i < support_size; ++i) {
    Vector x(d);
    x(0) = i + 0.5 * rng.uniform();
    for (int j = 1; j < d; ++j) x(j) = rng.uniform(-1.0, 1.0);
    LabelSeq y(l);
    for (int k = 0; k < l; ++k) y[k] = rng.uniform_int(1, K);
    raw[i] = rng.uniform(0.1, 1.0);
    total += raw[i];
    inst.support.push_back(x);
    inst.lengths.push_back(l);
    inst.distribution.support.push_back({x, y, 0.0});
  }
  for (int i = 0; i < support_size; ++i) {
    inst.distribution.support[i].prob = raw[i] / total;
  }
  inst.distribution.validate();
  return inst;
}

requirements::Requirement gen_structured_requirement(std::uint64_t seed,
                                                     const StructuredInstance& inst,
                                                     int K, int l) {
  double lo = inst.support[0](0), hi = lo;
  for (const Vector& x : inst.support) {
    lo = std::min(lo, x(0));
    hi = std::max(hi, x(0));
  }
  for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
    Rng rng(derive_seed(seed, attempt));
    requirements::Requirement req;
    req.kind = requirements::RequirementKind::structured;
    req.label_count = K;

    requirements::Rule pos_rule;
    pos_rule.effect = requirements::EffectKind::forbid;
    pos_rule.condition.push_back(
        {0, requirements::Comparator::greater, rng.uniform(lo - 0.25, hi + 0.25)});
    pos_rule.labels = {rng.uniform_int(1, K)};
    pos_rule.positions = {rng.uniform_int(1, l)};
    req.rules.push_back(pos_rule);

    if (l > 1 && rng.bernoulli(0.7)) {
      requirements::Rule pair_rule;
      pair_rule.effect = requirements::EffectKind::forbid;
      pair_rule.forbidden_pairs = {
          {rng.uniform_int(1, K), rng.uniform_int(1, K)}};
      req.rules.push_back(pair_rule);
    }
    if (rng.bernoulli(0.3)) {
      requirements::Rule inc_rule;
      inc_rule.effect = requirements::EffectKind::forbid;
      inc_rule.must_include = {rng.uniform_int(1, K)};
      req.rules.push_back(inc_rule);
    }
    if (requirements::check_feasibility(req, inst.support, inst.lengths)
            .all_feasible()) {
      return req;
    }
  }
  throw Error("no feasible structured requirement found after 64 attempts");
}

}  // namespace

BoundReport run_bound_check_structured(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const std::uint64_t master = cfg.seed;
  const int K = cfg.K;
  const int l = cfg.l;
  double seq_count = std::pow(static_cast<double>(K), l);
  if (seq_count > static_cast<double>(losses::kEnumerationCap)) {
    throw TooLarge("structured bound check enumerates K^l sequences; reduce K or l");
  }
  const int n_seqs = static_cast<int>(seq_count);

  StructuredInstance inst =
      gen_structured_instance(derive_seed(master, 1), cfg.support_size, K, cfg.d, l);
  requirements::Requirement req;
  if (!cfg.rules_path.empty()) {
    req = requirements::load_rules_file(cfg.rules_path);
    if (req.kind != requirements::RequirementKind::structured || req.label_count != K) {
      throw DimensionMismatch("rules file does not match the configured label count");
    }
    if (!requirements::check_feasibility(req, inst.support, inst.lengths).all_feasible()) {
      throw InfeasibleInput("rules file leaves support points with no feasible sequence", {});
    }
  } else {
    req = gen_structured_requirement(derive_seed(master, 2), inst, K, l);
  }

  std::vector<structured::ChainModel> pool;
  for (int j = 0; j < cfg.pool_size; ++j) {
    pool.push_back(structured::sample_chain_unit_ball(cfg.d, K, true, cfg.p,
                                                      derive_seed(master, 100 + j)));
  }
  for (int a = 0; a < 3; ++a) {
    Rng pilot_rng = Rng::derived(master, 200 + static_cast<std::uint64_t>(a));
    losses::StructuredSample pilot =
        losses::draw_sample(inst.distribution, std::min(cfg.m, 20), pilot_rng);
    pool.push_back(search_chain_erm(pilot, cfg.d, K, true, cfg.p, cfg.rho,
                                    derive_seed(master, 300 + a), 256, &req));
  }

  const std::size_t n_members = pool.size();
  const std::size_t n_atoms = inst.distribution.support.size();
  std::vector<LabelSeq> seqs = losses::enumerate_sequences(K, l, losses::kEnumerationCap);

  // per-atom constraint data is member-independent
  std::vector<requirements::SequenceConstraints> atom_cs;
  std::vector<std::vector<char>> atom_feasible(n_atoms, std::vector<char>(n_seqs));
  std::vector<int> atom_true_index(n_atoms, -1);
  std::vector<std::vector<double>> atom_hamming(n_atoms, std::vector<double>(n_seqs));
  for (std::size_t a = 0; a < n_atoms; ++a) {
    const auto& atom = inst.distribution.support[a];
    atom_cs.push_back(requirements::compile_constraints(req, atom.x, l));
    for (int s = 0; s < n_seqs; ++s) {
      atom_feasible[a][s] = atom_cs[a].satisfied(seqs[s]) ? 1 : 0;
      atom_hamming[a][s] = losses::hamming_loss(seqs[s], atom.y);
      if (seqs[s] == atom.y) atom_true_index[a] = s;
    }
  }

  // per-member scores over the whole support, mask constants, exact risks,
  // and exact surrogate risks
  std::vector<Matrix> member_scores(n_members);  // atoms x sequences
  std::vector<double> lhs_exact(n_members);
  std::vector<double> exact_add(n_members), exact_mult(n_members);
  std::vector<double> probs;
  for (const auto& atom : inst.distribution.support) probs.push_back(atom.prob);

  bool dominates = true;
  for (std::size_t j = 0; j < n_members; ++j) {
    Matrix scores(n_atoms, n_seqs);
    double max_abs = 0.0;
    for (std::size_t a = 0; a < n_atoms; ++a) {
      const auto& atom = inst.distribution.support[a];
      for (int s = 0; s < n_seqs; ++s) {
        scores(a, s) = structured::score(pool[j], atom.x, seqs[s]);
        max_abs = std::max(max_abs, std::abs(scores(a, s)));
      }
    }
    const double M = max_abs + 1.0;
    for (std::size_t a = 0; a < n_atoms; ++a) {
      for (int s = 0; s < n_seqs; ++s) {
        if (!atom_feasible[a][s]) scores(a, s) = -M;
      }
    }
    member_scores[j] = scores;

    double risk = 0.0, add_risk = 0.0, mult_risk = 0.0;
    for (std::size_t a = 0; a < n_atoms; ++a) {
      const auto& atom = inst.distribution.support[a];
      structured::FactorModel realized = structured::realize(pool[j], atom.x, l);
      auto decoded = structured::constrained_viterbi(realized, atom_cs[a]);
      if (!decoded) throw InfeasibleInput("generated requirement lost feasibility", {a});
      risk += atom.prob * losses::hamming_loss(*decoded, atom.y);

      std::vector<double> row(n_seqs);
      for (int s = 0; s < n_seqs; ++s) row[s] = scores(a, s);
      add_risk += atom.prob * losses::additive_surrogate_term(
                                  row, atom_true_index[a], atom_hamming[a], cfg.rho, 1.0);
      mult_risk += atom.prob * losses::multiplicative_surrogate_term(
                                   row, atom_true_index[a], atom_hamming[a], cfg.rho, 1.0);
    }
    lhs_exact[j] = risk;
    exact_add[j] = add_risk;
    exact_mult[j] = mult_risk;
    if (risk > add_risk + kExactTol || risk > mult_risk + kExactTol) dominates = false;
  }

  // expected factor-graph Rademacher complexity over fresh samples
  complexity::ChainClassSpec spec{K, cfg.d, true, cfg.p};
  auto estimate_complexity = [&]() {
    std::vector<double> values(cfg.trials);
    std::vector<int> lengths(cfg.m, l);
    for (int t = 0; t < cfg.trials; ++t) {
      Rng rng = Rng::derived(master, 400000 + static_cast<std::uint64_t>(t));
      std::vector<int> atoms = draw_atom_indices(probs, cfg.m, rng);
      std::vector<Vector> xs(cfg.m);
      for (int i = 0; i < cfg.m; ++i) xs[i] = inst.support[atoms[i]];
      complexity::SupOracle oracle = complexity::factor_graph_oracle(spec, xs, lengths);
      Vector sigma(oracle.dim);
      for (Eigen::Index i = 0; i < sigma.size(); ++i) sigma(i) = rng.sign();
      values[t] = oracle.sup(sigma) / cfg.m;
    }
    MonteCarloMean s = mean_of(values);
    complexity::ComplexityEstimate est;
    est.kind = complexity::EstimateKind::factor_graph;
    est.mean = s.mean;
    est.std_error = s.std_error;
    est.trials = cfg.trials;
    est.seed = master;
    return est;
  };

  BoundReport report;
  report.surrogate_dominates_ok = dominates;
  report.complexity = estimate_complexity();
  {
    complexity::ComplexityEstimate again = estimate_complexity();
    report.complexity_recomputation_ok = again.mean == report.complexity.mean &&
                                         again.std_error == report.complexity.std_error;
  }
  const double B = 1.0;  // Hamming task loss is already normalized to [0, 1]
  report.complexity_term = (4.0 * std::sqrt(2.0) / cfg.rho) * report.complexity.mean;
  report.deviation_term = B * std::sqrt(std::log(1.0 / cfg.delta) / (2.0 * cfg.m));
  const double mult_complexity_term =
      (4.0 * std::sqrt(2.0) * B / cfg.rho) * report.complexity.mean;

  std::vector<DrawRecord> mult_records;
  for (int t = 0; t < cfg.n_draws; ++t) {
    Rng rng = Rng::derived(master, 500000 + static_cast<std::uint64_t>(t));
    std::vector<int> atoms = draw_atom_indices(probs, cfg.m, rng);

    DrawRecord worst_add, worst_mult;
    worst_add.draw_id = t;
    worst_add.form = "additive";
    worst_mult.draw_id = cfg.n_draws + t;
    worst_mult.form = "multiplicative";
    double worst_add_gap = -std::numeric_limits<double>::infinity();
    double worst_mult_gap = worst_add_gap;
    std::vector<double> row(n_seqs);
    for (std::size_t j = 0; j < n_members; ++j) {
      double emp_add = 0.0, emp_mult = 0.0;
      for (int i = 0; i < cfg.m; ++i) {
        const int a = atoms[i];
        for (int s = 0; s < n_seqs; ++s) row[s] = member_scores[j](a, s);
        emp_add += losses::additive_surrogate_term(row, atom_true_index[a],
                                                   atom_hamming[a], cfg.rho, 1.0);
        emp_mult += losses::multiplicative_surrogate_term(row, atom_true_index[a],
                                                          atom_hamming[a], cfg.rho, 1.0);
      }
      emp_add /= cfg.m;
      emp_mult /= cfg.m;
      const double rhs_add = emp_add + report.complexity_term + report.deviation_term;
      const double rhs_mult = emp_mult + mult_complexity_term + report.deviation_term;
      if (lhs_exact[j] - rhs_add > worst_add_gap) {
        worst_add_gap = lhs_exact[j] - rhs_add;
        worst_add.lhs = lhs_exact[j];
        worst_add.empirical_loss = emp_add;
        worst_add.rhs = rhs_add;
        worst_add.holds = lhs_exact[j] <= rhs_add;
      }
      if (lhs_exact[j] - rhs_mult > worst_mult_gap) {
        worst_mult_gap = lhs_exact[j] - rhs_mult;
        worst_mult.lhs = lhs_exact[j];
        worst_mult.empirical_loss = emp_mult;
        worst_mult.rhs = rhs_mult;
        worst_mult.holds = lhs_exact[j] <= rhs_mult;
      }
    }
    report.records.push_back(worst_add);
    mult_records.push_back(worst_mult);
  }
  report.records.insert(report.records.end(), mult_records.begin(), mult_records.end());
  report.forms.push_back(
      summarize_form("additive", report.records, cfg.delta, cfg.n_draws));
  report.forms.push_back(
      summarize_form("multiplicative", report.records, cfg.delta, cfg.n_draws));
  return report;
}

bool ComplexityRunReport::ok() const {
  for (const auto& c : checks) {
    if (!c.holds) return false;
  }
  return true;
}

ComplexityRunReport run_complexity_checks(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const std::uint64_t master = cfg.seed;
  RealizableInstance inst =
      gen_realizable(derive_seed(master, 1), cfg.support_size, cfg.K, cfg.d);
  requirements::Requirement req;
  if (!cfg.rules_path.empty()) {
    req = requirements::load_rules_file(cfg.rules_path);
  } else {
    req = gen_requirement(derive_seed(master, 2), inst, false);
  }

  std::vector<int> labels;
  for (const auto& atom : inst.distribution.support) labels.push_back(atom.y);

  ComplexityRunReport report;
  complexity::SupOracle ball =
      complexity::linear_ball_oracle(inst.support, labels, cfg.K, cfg.p);
  report.estimates.push_back(
      complexity::empirical_rademacher(ball, cfg.trials, derive_seed(master, 3)));
  report.estimates.push_back(complexity::empirical_gaussian(
      ball, cfg.support_size, cfg.trials, derive_seed(master, 4)));

  const int n_members = std::min(cfg.class_size, 8);
  std::vector<hypotheses::Scorer> members;
  for (int j = 0; j < n_members; ++j) {
    members.push_back(hypotheses::as_scorer(
        hypotheses::sample_unit_ball(cfg.d, cfg.K, cfg.p, derive_seed(master, 50 + j))));
  }
  Matrix values = complexity::pair_values(members, inst.support, labels);
  report.estimates.push_back(
      complexity::local_rademacher(values, 0.25, cfg.trials, derive_seed(master, 5)));

  std::vector<int> lengths(inst.support.size(), cfg.l);
  complexity::SupOracle chain_oracle = complexity::factor_graph_oracle(
      {cfg.K, cfg.d, true, cfg.p}, inst.support, lengths);
  report.estimates.push_back(complexity::factor_graph_rademacher(
      chain_oracle, cfg.support_size, cfg.trials, derive_seed(master, 6)));

  double max_abs = values.array().abs().maxCoeff();
  const double M = max_abs + 1.0;
  Matrix masked_values =
      complexity::masked_pair_values(members, inst.support, labels, req, M);
  complexity::SupOracle base_finite = complexity::finite_class_oracle(values);
  complexity::SupOracle masked_finite = complexity::finite_class_oracle(masked_values);
  report.checks.push_back(complexity::check_masked_leq(masked_finite, base_finite,
                                                       cfg.trials,
                                                       derive_seed(master, 7)));

  // exact enumeration on a trimmed sample, so the sign space stays small
  const int exact_m = std::min<int>(12, static_cast<int>(inst.support.size()));
  std::vector<Vector> small_inputs(inst.support.begin(), inst.support.begin() + exact_m);
  std::vector<int> small_labels(labels.begin(), labels.begin() + exact_m);
  Matrix small_values = complexity::pair_values(members, small_inputs, small_labels);
  Matrix small_masked =
      complexity::masked_pair_values(members, small_inputs, small_labels, req, M);
  report.checks.push_back(complexity::check_masked_leq_exact(
      complexity::finite_class_oracle(small_masked),
      complexity::finite_class_oracle(small_values)));

  complexity::MaskedClassTables tables =
      complexity::build_masked_tables(members, inst.support, req, M);
  report.checks.push_back(complexity::check_gaussian_comparison(
      tables.masked_max, tables.full, static_cast<int>(inst.support.size()), cfg.K,
      cfg.trials, derive_seed(master, 8)));

  std::vector<char> feasible;
  for (std::size_t i = 0; i < inst.support.size(); ++i) {
    feasible.push_back(requirements::evaluate(req, inst.support[i], labels[i]) ? 1 : 0);
  }
  double max_feature_norm = 0.0;
  for (const Vector& x : inst.support) {
    max_feature_norm = std::max(max_feature_norm, x.norm());
  }
  complexity::SupOracle masked_ball = complexity::masked_linear_ball_oracle(
      inst.support, labels, cfg.K, feasible, max_feature_norm + 1.0, cfg.p);
  report.checks.push_back(complexity::check_masked_leq(masked_ball, ball, cfg.trials,
                                                       derive_seed(master, 9)));
  return report;
}

std::string csv_text(const std::vector<CsvRow>& rows) {
  std::string out =
      "draw_id,m,rho,delta,lhs,empirical_loss,complexity_mean,complexity_stderr,rhs,holds\n";
  for (const auto& r : rows) {
    out += std::to_string(r.draw_id);
    out += ',';
    out += std::to_string(r.m);
    out += ',';
    out += fmt_double(r.rho);
    out += ',';
    out += fmt_double(r.delta);
    out += ',';
    out += fmt_double(r.lhs);
    out += ',';
    out += fmt_double(r.empirical_loss);
    out += ',';
    out += fmt_double(r.complexity_mean);
    out += ',';
    out += fmt_double(r.complexity_stderr);
    out += ',';
    out += fmt_double(r.rhs);
    out += ',';
    out += r.holds ? '1' : '0';
    out += '\n';
  }
  return out;
}

std::string serialize(const SandwichReport& report) {
  json doc;
  doc["records"] = json::array();
  for (const auto& r : report.records) {
    doc["records"].push_back({{"instance_id", r.instance_id},
                              {"requirement_kind", r.requirement_kind},
                              {"risk_truth_cv", r.risk_truth_cv},
                              {"epsilon_hat", r.epsilon_hat},
                              {"risk_erm_cv", r.risk_erm_cv},
                              {"lower_holds", r.lower_holds},
                              {"upper_holds", r.upper_holds}});
  }
  doc["violations"] = report.violations;
  doc["ok"] = report.ok();
  return doc.dump(2);
}

std::string serialize(const CounterexampleReport& report) {
  json doc;
  doc["risk_h0"] = report.risk_h0;
  doc["risk_h1"] = report.risk_h1;
  doc["risk_h0_cv"] = report.risk_h0_cv;
  doc["risk_h1_cv"] = report.risk_h1_cv;
  doc["itv_gap"] = report.itv_gap;
  doc["ltv_gap"] = report.ltv_gap;
  doc["requirement_consistent"] = report.requirement_consistent;
  doc["ok"] = report.ok();
  return doc.dump(2);
}

std::string serialize(const BoundReport& report) {
  json doc;
  doc["records"] = json::array();
  for (const auto& r : report.records) {
    doc["records"].push_back({{"draw_id", r.draw_id},
                              {"form", r.form},
                              {"lhs", r.lhs},
                              {"empirical_loss", r.empirical_loss},
                              {"rhs", r.rhs},
                              {"holds", r.holds}});
  }
  doc["forms"] = json::array();
  for (const auto& f : report.forms) {
    doc["forms"].push_back({{"form", f.form},
                            {"violation_fraction", f.violation_fraction},
                            {"slack", f.slack},
                            {"ok", f.ok}});
  }
  doc["complexity"] = json::parse(complexity::serialize(report.complexity));
  doc["complexity_term"] = report.complexity_term;
  doc["deviation_term"] = report.deviation_term;
  doc["complexity_recomputation_ok"] = report.complexity_recomputation_ok;
  doc["surrogate_dominates_ok"] = report.surrogate_dominates_ok;
  doc["ok"] = report.ok();
  return doc.dump(2);
}

std::string serialize(const ComplexityRunReport& report) {
  json doc;
  doc["estimates"] = json::array();
  for (const auto& e : report.estimates) {
    doc["estimates"].push_back(json::parse(complexity::serialize(e)));
  }
  doc["checks"] = json::array();
  for (const auto& c : report.checks) {
    doc["checks"].push_back(json::parse(complexity::serialize(c)));
  }
  doc["ok"] = report.ok();
  return doc.dump(2);
}

std::vector<CsvRow> csv_rows(const SandwichReport& report, const ExperimentConfig& cfg) {
  std::vector<CsvRow> rows;
  for (const auto& r : report.records) {
    CsvRow row;
    row.draw_id = r.instance_id;
    row.m = cfg.m;
    row.rho = cfg.rho;
    row.delta = cfg.delta;
    row.lhs = r.risk_erm_cv;
    row.empirical_loss = r.epsilon_hat;
    row.rhs = r.risk_truth_cv + r.epsilon_hat;
    row.holds = r.lower_holds && r.upper_holds;
    rows.push_back(row);
  }
  return rows;
}

std::vector<CsvRow> csv_rows(const CounterexampleReport& report,
                             const ExperimentConfig& cfg) {
  CsvRow row;
  row.draw_id = 0;
  row.m = cfg.m;
  row.rho = cfg.rho;
  row.delta = cfg.delta;
  row.lhs = report.itv_gap;
  row.empirical_loss = report.ltv_gap;
  row.rhs = 0.5;
  row.holds = report.ok();
  return {row};
}

std::vector<CsvRow> csv_rows(const BoundReport& report, const ExperimentConfig& cfg) {
  std::vector<CsvRow> rows;
  for (const auto& r : report.records) {
    CsvRow row;
    row.draw_id = r.draw_id;
    row.m = cfg.m;
    row.rho = cfg.rho;
    row.delta = cfg.delta;
    row.lhs = r.lhs;
    row.empirical_loss = r.empirical_loss;
    row.complexity_mean = report.complexity.mean;
    row.complexity_stderr = report.complexity.std_error;
    row.rhs = r.rhs;
    row.holds = r.holds;
    rows.push_back(row);
  }
  return rows;
}

std::vector<CsvRow> csv_rows(const ComplexityRunReport& report,
                             const ExperimentConfig& cfg) {
  std::vector<CsvRow> rows;
  int id = 0;
  for (const auto& c : report.checks) {
    CsvRow row;
    row.draw_id = id++;
    row.m = cfg.m;
    row.rho = cfg.rho;
    row.delta = cfg.delta;
    row.lhs = c.lhs_mean;
    row.rhs = c.rhs_mean;
    row.complexity_mean = c.diff_mean;
    row.complexity_stderr = c.diff_std_error;
    row.holds = c.holds;
    rows.push_back(row);
  }
  return rows;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << text;
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

void emit_results(const std::string& results_json, const std::vector<CsvRow>& rows,
                  const ExperimentConfig& cfg) {
  if (cfg.out_dir.empty()) throw IoError("output directory not set");
  std::filesystem::path dir(cfg.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory: " + cfg.out_dir);

  write_file(dir / "results.json", results_json + "\n");
  write_file(dir / "results.csv", csv_text(rows));
  write_file(dir / "config.json", serialize(cfg) + "\n");
  json manifest;
  manifest["seed"] = cfg.seed;
  manifest["version"] = kVersion;
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace verikit::harness
