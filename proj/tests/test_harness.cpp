#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "verikit/harness.hpp"
#include "verikit/rng.hpp"

using namespace verikit;
using namespace verikit::harness;
namespace hy = verikit::hypotheses;
namespace rq = verikit::requirements;
namespace ls = verikit::losses;

namespace {

Vector vec(std::initializer_list<double> values) {
  Vector x(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) x(i++) = v;
  return x;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

ExperimentConfig small_bound_config() {
  ExperimentConfig cfg;
  cfg.experiment = "bound-multiclass";
  cfg.seed = 7;
  cfg.m = 60;
  cfg.trials = 300;
  cfg.n_draws = 40;
  cfg.support_size = 8;
  cfg.pool_size = 8;
  cfg.class_size = 8;
  cfg.K = 3;
  cfg.d = 4;
  return cfg;
}

}  // namespace

TEST_CASE("config serialization round-trips every field") {
  ExperimentConfig cfg;
  cfg.experiment = "bound-structured";
  cfg.seed = 99;
  cfg.m = 123;
  cfg.trials = 77;
  cfg.rho = 0.5;
  cfg.delta = 0.1;
  cfg.p = 1.5;
  cfg.K = 4;
  cfg.d = 7;
  cfg.l = 2;
  cfg.rules_path = "rules.json";
  cfg.out_dir = "somewhere";
  cfg.n_draws = 31;
  cfg.instances = 9;
  cfg.support_size = 6;
  cfg.pool_size = 5;
  cfg.class_size = 4;

  ExperimentConfig back = parse_config(serialize(cfg));
  CHECK(back.experiment == cfg.experiment);
  CHECK(back.seed == cfg.seed);
  CHECK(back.m == cfg.m);
  CHECK(back.trials == cfg.trials);
  CHECK(back.rho == cfg.rho);
  CHECK(back.delta == cfg.delta);
  CHECK(back.p == cfg.p);
  CHECK(back.K == cfg.K);
  CHECK(back.d == cfg.d);
  CHECK(back.l == cfg.l);
  CHECK(back.rules_path == cfg.rules_path);
  CHECK(back.out_dir == cfg.out_dir);
  CHECK(back.n_draws == cfg.n_draws);
  CHECK(back.instances == cfg.instances);
  CHECK(back.support_size == cfg.support_size);
  CHECK(back.pool_size == cfg.pool_size);
  CHECK(back.class_size == cfg.class_size);
}

TEST_CASE("config parser rejects malformed documents") {
  CHECK_THROWS_AS(parse_config("not json"), ParseError);
  CHECK_THROWS_AS(parse_config("[1, 2]"), SchemaError);
  CHECK_THROWS_AS(parse_config(R"({"mystery": 1})"), SchemaError);
  CHECK_THROWS_AS(parse_config(R"({"m": "sixty"})"), SchemaError);
  CHECK_THROWS_AS(parse_config(R"({"seed": 1.5})"), SchemaError);

  CHECK_THROWS_AS(parse_config(R"({"m": 0})"), Error);
  CHECK_THROWS_AS(parse_config(R"({"delta": 1.5})"), Error);
  CHECK_THROWS_AS(parse_config(R"({"rho": 0.0})"), NonpositiveRho);
  CHECK_THROWS_AS(parse_config(R"({"p": 2.5})"), InvalidP);
  CHECK_THROWS_AS(parse_config(R"({"K": 1})"), SingleClass);
  CHECK_THROWS_AS(parse_config(R"({"support_size": 1})"), Error);
}

TEST_CASE("config files load from disk") {
  const std::filesystem::path path = "/tmp/verikit_test_config.json";
  {
    std::ofstream out(path);
    out << R"({"experiment": "itv", "seed": 5, "instances": 3})";
  }
  ExperimentConfig cfg = load_config_file(path.string());
  CHECK(cfg.experiment == "itv");
  CHECK(cfg.seed == 5);
  CHECK(cfg.instances == 3);
  CHECK(cfg.m == 200);  // untouched fields keep their defaults
  std::filesystem::remove(path);

  CHECK_THROWS_AS(load_config_file("/tmp/verikit_missing_config.json"), IoError);
}

TEST_CASE("generated realizable instances have zero-risk truth") {
  for (std::uint64_t seed : {1ull, 2ull, 77ull}) {
    RealizableInstance inst = gen_realizable(seed, 8, 3, 4);
    CHECK(inst.support.size() == 8);
    CHECK(inst.distribution.support.size() == 8);

    double total = 0.0;
    for (const auto& atom : inst.distribution.support) total += atom.prob;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

    hy::Predictor truth = truth_predictor(inst);
    CHECK(ls::exact_risk(truth, inst.distribution) == 0.0);
  }
}

TEST_CASE("sampling from a realizable instance never contradicts the truth") {
  RealizableInstance inst = gen_realizable(11, 10, 3, 3);
  hy::Predictor truth = truth_predictor(inst);
  Rng rng(400);
  ls::Sample sample = ls::draw_sample(inst.distribution, 10000, rng);
  CHECK(sample.size() == 10000);
  CHECK(ls::empirical_zero_one(truth, sample) == 0.0);
}

TEST_CASE("generators are deterministic in the seed") {
  RealizableInstance a = gen_realizable(21, 6, 3, 4);
  RealizableInstance b = gen_realizable(21, 6, 3, 4);
  RealizableInstance c = gen_realizable(22, 6, 3, 4);
  for (std::size_t i = 0; i < a.support.size(); ++i) {
    CHECK(a.support[i] == b.support[i]);
  }
  CHECK(a.truth_table.scores == b.truth_table.scores);
  bool any_difference = false;
  for (std::size_t i = 0; i < a.support.size(); ++i) {
    if (a.support[i] != c.support[i]) any_difference = true;
  }
  CHECK(any_difference);
}

TEST_CASE("random requirements keep every support point feasible") {
  for (std::uint64_t seed : {3ull, 4ull, 5ull}) {
    RealizableInstance inst = gen_realizable(seed, 8, 3, 4);
    rq::Requirement req = gen_requirement(seed + 100, inst, false);
    CHECK(req.label_count == 3);
    CHECK(rq::check_feasibility(req, inst.support).all_feasible());
  }
}

TEST_CASE("consistent requirements never reject the truth") {
  for (std::uint64_t seed : {6ull, 7ull, 8ull}) {
    RealizableInstance inst = gen_realizable(seed, 8, 3, 4);
    rq::Requirement req = gen_requirement(seed + 200, inst, true);
    hy::Predictor truth = truth_predictor(inst);
    for (const Vector& x : inst.support) {
      CHECK(rq::evaluate(req, x, truth.predict(x)));
    }
    verifier::VerifiedHypothesis vh = verifier::wrap(truth, req, inst.support);
    CHECK(ls::exact_risk(verifier::as_predictor(vh), inst.distribution) == 0.0);
  }
}

TEST_CASE("the two-point instance has the advertised exact risks") {
  CounterexampleInstance inst = gen_counterexample();
  CHECK(inst.distribution.support.size() == 2);

  hy::Predictor p0 = hy::as_predictor(hy::as_scorer(inst.h0));
  hy::Predictor p1 = hy::as_predictor(hy::as_scorer(inst.h1));
  CHECK(ls::exact_risk(p0, inst.distribution) == 0.5);
  CHECK(ls::exact_risk(p1, inst.distribution) == 0.5);

  // the requirement rejects exactly h0's mistake and accepts the truth
  CHECK(rq::evaluate(inst.requirement, inst.support[0], 1));
  CHECK_FALSE(rq::evaluate(inst.requirement, inst.support[0], 2));
  CHECK(rq::evaluate(inst.requirement, inst.support[1], 1));
  CHECK(rq::evaluate(inst.requirement, inst.support[1], 2));
}

TEST_CASE("verify-after-learning pays 0.5 where learning-then-verifying pays 0") {
  CounterexampleReport report = run_counterexample();
  CHECK(report.risk_h0 == 0.5);
  CHECK(report.risk_h1 == 0.5);
  CHECK(report.risk_h0_cv == 0.0);
  CHECK(report.risk_h1_cv == 0.5);
  CHECK(report.itv_gap == 0.5);
  CHECK(report.ltv_gap == 0.0);
  CHECK(report.requirement_consistent);
  CHECK(report.ok());
}

TEST_CASE("finite ERM minimizes the empirical zero-one loss with ties to first") {
  Vector x0 = vec({0.0});
  Vector x1 = vec({1.0});
  ls::Sample sample;
  sample.examples = {{x0, 1}, {x0, 1}, {x1, 2}, {x0, 2}};

  auto constant = [](int label) {
    hy::Predictor p;
    p.label_count = 2;
    p.predict = [label](const Vector&) { return label; };
    return p;
  };
  std::vector<hy::Predictor> pool{constant(1), constant(2)};

  // both constants miss two of the four observations; ties go to index 0
  ErmResult plain = erm_zero_one(pool, sample, nullptr);
  CHECK(plain.index == 0);
  CHECK(plain.empirical_loss == 0.5);
  CHECK(plain.queries == 0);
  CHECK(plain.budget == 0);

  // forbidding label 2 at x0 redeems the constant-2 predictor: its rejected
  // prediction falls back to 1 there, so only the infeasible observation
  // (x0, 2) still counts against it
  rq::Requirement req;
  req.label_count = 2;
  rq::Rule rule;
  rule.condition = {{0, rq::Comparator::less_equal, 0.5}};
  rule.effect = rq::EffectKind::forbid;
  rule.labels = {2};
  req.rules.push_back(rule);

  ErmResult with_cv = erm_zero_one(pool, sample, &req);
  CHECK(with_cv.index == 1);
  CHECK(with_cv.empirical_loss == 0.25);

  // each member sees 3 feasible observations and 1 infeasible one
  CHECK(with_cv.budget == 2 * (2 * 3 + 1));
  CHECK(with_cv.queries > 0);
  CHECK(with_cv.queries <= with_cv.budget);
}

TEST_CASE("a trivial requirement leaves the ERM outcome alone") {
  RealizableInstance inst = gen_realizable(31, 8, 3, 4);
  std::vector<hy::Predictor> pool;
  pool.push_back(truth_predictor(inst));
  for (int j = 0; j < 4; ++j) {
    pool.push_back(hy::as_predictor(hy::as_scorer(
        hy::sample_unit_ball(4, 3, 2.0, 600 + static_cast<std::uint64_t>(j)))));
  }
  Rng rng(41);
  ls::Sample sample = ls::draw_sample(inst.distribution, 100, rng);

  rq::Requirement trivial = rq::trivial(rq::RequirementKind::flat, 3);
  ErmResult plain = erm_zero_one(pool, sample, nullptr);
  ErmResult wrapped = erm_zero_one(pool, sample, &trivial);
  CHECK(plain.index == wrapped.index);
  CHECK(plain.empirical_loss == wrapped.empirical_loss);
  CHECK(wrapped.budget == 5 * 3 * 100);  // every observation accepted
}

TEST_CASE("random-search ERM stays in the ball and improves with more candidates") {
  RealizableInstance inst = gen_realizable(51, 8, 3, 4);
  Rng rng(61);
  ls::Sample sample = ls::draw_sample(inst.distribution, 80, rng);

  hy::ScoringHypothesis one = search_margin_erm(sample, 4, 3, 2.0, 1.0, 71, 1,
                                                nullptr, inst.support);
  hy::ScoringHypothesis many = search_margin_erm(sample, 4, 3, 2.0, 1.0, 71, 64,
                                                 nullptr, inst.support);
  CHECK(hy::l2p_norm(one) <= 1.0 + 1e-9);
  CHECK(hy::l2p_norm(many) <= 1.0 + 1e-9);

  double loss_one = ls::empirical_margin_loss(hy::as_scorer(one), sample, 1.0);
  double loss_many = ls::empirical_margin_loss(hy::as_scorer(many), sample, 1.0);
  CHECK(loss_many <= loss_one);

  hy::ScoringHypothesis again = search_margin_erm(sample, 4, 3, 2.0, 1.0, 71, 64,
                                                  nullptr, inst.support);
  CHECK(many.weights == again.weights);
}

TEST_CASE("sandwich inequalities hold exactly on every generated instance") {
  ExperimentConfig cfg;
  cfg.experiment = "itv";
  cfg.seed = 3;
  cfg.instances = 25;
  cfg.support_size = 8;
  cfg.K = 3;
  cfg.d = 3;
  cfg.class_size = 8;
  cfg.m = 80;

  SandwichReport report = run_itv_experiment(cfg);
  CHECK(report.records.size() == 25);
  CHECK(report.violations == 0);
  CHECK(report.ok());

  bool saw_trivial = false, saw_consistent = false, saw_random = false;
  for (const auto& rec : report.records) {
    CHECK(rec.lower_holds);
    CHECK(rec.upper_holds);
    if (rec.requirement_kind == "trivial") {
      saw_trivial = true;
      // wrapping with the all-accepting requirement changes nothing
      CHECK(rec.risk_truth_cv == 0.0);
      CHECK(rec.risk_erm_cv == rec.epsilon_hat);
    }
    if (rec.requirement_kind == "consistent") {
      saw_consistent = true;
      // a requirement consistent with the truth leaves it at zero risk
      CHECK(rec.risk_truth_cv == 0.0);
    }
    if (rec.requirement_kind == "random") saw_random = true;
  }
  CHECK(saw_trivial);
  CHECK(saw_consistent);
  CHECK(saw_random);
}

TEST_CASE("multiclass bound violations stay inside the binomial slack") {
  ExperimentConfig cfg = small_bound_config();
  BoundReport report = run_bound_check_multiclass(cfg);
  CHECK(report.records.size() == 40);
  CHECK(report.forms.size() == 1);
  CHECK(report.forms[0].form == "margin");
  CHECK(report.complexity_recomputation_ok);
  CHECK(report.surrogate_dominates_ok);
  CHECK(report.complexity.mean > 0.0);
  CHECK(report.complexity_term == doctest::Approx(4.0 * cfg.K / cfg.rho *
                                                  report.complexity.mean));
  CHECK(report.deviation_term ==
        doctest::Approx(std::sqrt(std::log(1.0 / cfg.delta) / (2.0 * cfg.m))));

  double violation_fraction = report.forms[0].violation_fraction;
  double slack = report.forms[0].slack;
  CHECK(slack == doctest::Approx(3.0 * std::sqrt(cfg.delta * (1.0 - cfg.delta) /
                                                 cfg.n_draws)));
  CHECK(violation_fraction <= cfg.delta + slack);
  CHECK(report.ok());

  for (const auto& rec : report.records) {
    CHECK(rec.rhs == doctest::Approx(rec.empirical_loss + report.complexity_term +
                                     report.deviation_term));
    CHECK(rec.holds == (rec.lhs <= rec.rhs));
  }
}

TEST_CASE("a huge margin scale makes the bound vacuous and violation-free") {
  ExperimentConfig cfg = small_bound_config();
  cfg.rho = 1000.0;
  cfg.n_draws = 20;
  cfg.trials = 100;
  BoundReport report = run_bound_check_multiclass(cfg);
  CHECK(report.ok());
  CHECK(report.forms[0].violation_fraction == 0.0);
  for (const auto& rec : report.records) {
    CHECK(rec.empirical_loss > 0.9);  // every ramp sits near its ceiling
    CHECK(rec.holds);
  }
}

TEST_CASE("the bound's right-hand side ignores the requirement") {
  ExperimentConfig cfg = small_bound_config();
  cfg.n_draws = 10;
  cfg.trials = 100;
  BoundReport generated = run_bound_check_multiclass(cfg);

  const std::filesystem::path rules = "/tmp/verikit_trivial_rules.json";
  {
    std::ofstream out(rules);
    out << rq::serialize(rq::trivial(rq::RequirementKind::flat, cfg.K));
  }
  cfg.rules_path = rules.string();
  BoundReport trivial = run_bound_check_multiclass(cfg);
  std::filesystem::remove(rules);

  // same seed, different requirement: the complexity and deviation summands
  // belong to the unverified class and must not move
  CHECK(generated.complexity.mean == trivial.complexity.mean);
  CHECK(generated.complexity.std_error == trivial.complexity.std_error);
  CHECK(generated.complexity_term == trivial.complexity_term);
  CHECK(generated.deviation_term == trivial.deviation_term);
  CHECK(trivial.ok());
}

TEST_CASE("bound runs reject rules files that do not fit the instance") {
  ExperimentConfig cfg = small_bound_config();
  const std::filesystem::path rules = "/tmp/verikit_wrong_rules.json";
  {
    std::ofstream out(rules);
    out << rq::serialize(rq::trivial(rq::RequirementKind::flat, cfg.K + 1));
  }
  cfg.rules_path = rules.string();
  CHECK_THROWS_AS(run_bound_check_multiclass(cfg), DimensionMismatch);
  std::filesystem::remove(rules);
}

TEST_CASE("structured bound violations stay inside the slack for both forms") {
  ExperimentConfig cfg;
  cfg.experiment = "bound-structured";
  cfg.seed = 13;
  cfg.m = 50;
  cfg.trials = 200;
  cfg.n_draws = 25;
  cfg.support_size = 8;
  cfg.pool_size = 6;
  cfg.K = 2;
  cfg.d = 3;
  cfg.l = 2;

  BoundReport report = run_bound_check_structured(cfg);
  CHECK(report.records.size() == 2 * 25);
  CHECK(report.forms.size() == 2);
  CHECK(report.surrogate_dominates_ok);
  CHECK(report.complexity_recomputation_ok);
  CHECK(report.ok());

  bool saw_additive = false, saw_multiplicative = false;
  for (const auto& form : report.forms) {
    if (form.form == "additive") saw_additive = true;
    if (form.form == "multiplicative") saw_multiplicative = true;
    CHECK(form.ok);
    CHECK(form.violation_fraction <= cfg.delta + form.slack);
  }
  CHECK(saw_additive);
  CHECK(saw_multiplicative);

  for (const auto& rec : report.records) {
    CHECK((rec.form == "additive" || rec.form == "multiplicative"));
    CHECK(rec.lhs >= 0.0);
    CHECK(rec.lhs <= 1.0);  // Hamming risk is normalized
  }
}

TEST_CASE("complexity runner estimates all four kinds and passes its checks") {
  ExperimentConfig cfg;
  cfg.experiment = "complexity";
  cfg.seed = 17;
  cfg.trials = 400;
  cfg.support_size = 8;
  cfg.class_size = 8;
  cfg.K = 3;
  cfg.d = 3;
  cfg.l = 2;

  ComplexityRunReport report = run_complexity_checks(cfg);
  CHECK(report.ok());
  CHECK(report.estimates.size() == 4);
  bool kinds[4] = {false, false, false, false};
  for (const auto& e : report.estimates) {
    if (e.kind == complexity::EstimateKind::rademacher) kinds[0] = true;
    if (e.kind == complexity::EstimateKind::gaussian) kinds[1] = true;
    if (e.kind == complexity::EstimateKind::local_rademacher) kinds[2] = true;
    if (e.kind == complexity::EstimateKind::factor_graph) kinds[3] = true;
    CHECK(e.mean >= 0.0);
  }
  CHECK(kinds[0]);
  CHECK(kinds[1]);
  CHECK(kinds[2]);
  CHECK(kinds[3]);

  CHECK(report.checks.size() == 4);
  for (const auto& check : report.checks) {
    CHECK(check.holds);
  }
}

TEST_CASE("csv text carries the fixed header and shortest-round-trip doubles") {
  CsvRow row;
  row.draw_id = 0;
  row.m = 200;
  row.rho = 1.0;
  row.delta = 0.05;
  row.lhs = 0.5;
  row.empirical_loss = 0.25;
  row.complexity_mean = 0.125;
  row.complexity_stderr = 0.0625;
  row.rhs = 1.0 / 3.0;
  row.holds = true;

  std::string text = csv_text({row});
  std::istringstream lines(text);
  std::string header, body;
  std::getline(lines, header);
  std::getline(lines, body);
  CHECK(header ==
        "draw_id,m,rho,delta,lhs,empirical_loss,complexity_mean,complexity_stderr,rhs,holds");
  CHECK(body == "0,200,1,0.050000000000000003,0.5,0.25,0.125,0.0625,0.33333333333333331,1");

  CHECK(csv_text({}) ==
        "draw_id,m,rho,delta,lhs,empirical_loss,complexity_mean,complexity_stderr,rhs,holds\n");
}

TEST_CASE("csv rows echo the bound report fields") {
  ExperimentConfig cfg = small_bound_config();
  cfg.n_draws = 5;
  cfg.trials = 50;
  BoundReport report = run_bound_check_multiclass(cfg);
  std::vector<CsvRow> rows = csv_rows(report, cfg);
  REQUIRE(rows.size() == 5);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].draw_id == report.records[i].draw_id);
    CHECK(rows[i].m == cfg.m);
    CHECK(rows[i].rho == cfg.rho);
    CHECK(rows[i].delta == cfg.delta);
    CHECK(rows[i].lhs == report.records[i].lhs);
    CHECK(rows[i].empirical_loss == report.records[i].empirical_loss);
    CHECK(rows[i].complexity_mean == report.complexity.mean);
    CHECK(rows[i].complexity_stderr == report.complexity.std_error);
    CHECK(rows[i].rhs == report.records[i].rhs);
    CHECK(rows[i].holds == report.records[i].holds);
  }
}

TEST_CASE("reruns of the same config emit byte-identical artifacts") {
  ExperimentConfig cfg;
  cfg.experiment = "itv";
  cfg.seed = 23;
  cfg.instances = 5;
  cfg.support_size = 6;
  cfg.K = 3;
  cfg.d = 3;
  cfg.class_size = 6;
  cfg.m = 40;
  cfg.out_dir = "/tmp/verikit_emit_a";

  SandwichReport report = run_itv_experiment(cfg);
  emit_results(serialize(report), csv_rows(report, cfg), cfg);
  std::string csv_a = slurp("/tmp/verikit_emit_a/results.csv");
  std::string json_a = slurp("/tmp/verikit_emit_a/results.json");

  cfg.out_dir = "/tmp/verikit_emit_b";
  SandwichReport rerun = run_itv_experiment(cfg);
  emit_results(serialize(rerun), csv_rows(rerun, cfg), cfg);
  CHECK(slurp("/tmp/verikit_emit_b/results.csv") == csv_a);
  CHECK(slurp("/tmp/verikit_emit_b/results.json") == json_a);

  // the config echo parses back to the exact run configuration
  ExperimentConfig echoed = parse_config(slurp("/tmp/verikit_emit_b/config.json"));
  CHECK(echoed.seed == cfg.seed);
  CHECK(echoed.experiment == cfg.experiment);
  CHECK(echoed.out_dir == cfg.out_dir);

  std::string manifest = slurp("/tmp/verikit_emit_b/manifest.json");
  CHECK(manifest.find("\"seed\"") != std::string::npos);
  CHECK(manifest.find("\"version\"") != std::string::npos);

  std::filesystem::remove_all("/tmp/verikit_emit_a");
  std::filesystem::remove_all("/tmp/verikit_emit_b");
}

TEST_CASE("emitting into an unwritable location raises IoError") {
  ExperimentConfig cfg;
  cfg.out_dir = "/proc/verikit_cannot_write_here";
  CHECK_THROWS_AS(emit_results("{}", {}, cfg), IoError);
}
