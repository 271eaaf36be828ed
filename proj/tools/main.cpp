#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "verikit/harness.hpp"

namespace {

using nlohmann::json;
using namespace verikit;

struct DataPoint {
  Vector x;
  int length = 0;
};

std::vector<DataPoint> load_jsonl(const std::string& path, int default_length) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open data file: " + path);
  std::vector<DataPoint> points;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("data line " + std::to_string(line_no) +
                       " is not valid JSON: " + e.what());
    }
    if (!doc.is_object() || !doc.contains("x") || !doc["x"].is_array() ||
        doc["x"].empty()) {
      throw SchemaError("data line " + std::to_string(line_no) +
                        " needs a non-empty \"x\" array");
    }
    for (const auto& item : doc.items()) {
      if (item.key() != "x" && item.key() != "length") {
        throw SchemaError("unknown key \"" + item.key() + "\" on data line " +
                          std::to_string(line_no));
      }
    }
    DataPoint point;
    point.x = Vector(doc["x"].size());
    for (std::size_t i = 0; i < doc["x"].size(); ++i) {
      if (!doc["x"][i].is_number()) {
        throw SchemaError("non-numeric entry in \"x\" on data line " +
                          std::to_string(line_no));
      }
      point.x(static_cast<Eigen::Index>(i)) = doc["x"][i].get<double>();
    }
    point.length = default_length;
    if (doc.contains("length")) {
      if (!doc["length"].is_number_integer() || doc["length"].get<int>() < 1) {
        throw SchemaError("\"length\" must be a positive integer on data line " +
                          std::to_string(line_no));
      }
      point.length = doc["length"].get<int>();
    }
    points.push_back(std::move(point));
  }
  if (points.empty()) throw Error("data file has no records: " + path);
  return points;
}

int run_decode(const harness::ExperimentConfig& cfg, const std::string& model_path,
               const std::string& rules_path, const std::string& data_path) {
  structured::ChainModel model = structured::load_chain_model_file(model_path);
  requirements::Requirement req = requirements::load_rules_file(rules_path);
  if (req.kind != requirements::RequirementKind::structured) {
    throw SchemaError("decode needs a structured rules file");
  }
  if (req.label_count != model.label_count()) {
    throw DimensionMismatch("rules and model disagree on the label count");
  }
  std::vector<DataPoint> points = load_jsonl(data_path, cfg.l);

  std::filesystem::path dir(cfg.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory: " + cfg.out_dir);
  std::ofstream out(dir / "decoded.jsonl", std::ios::binary);
  if (!out) throw IoError("cannot open decoded.jsonl for writing");

  std::size_t infeasible = 0;
  for (const DataPoint& point : points) {
    structured::FactorModel realized = structured::realize(model, point.x, point.length);
    auto decoded = structured::constrained_viterbi(realized, req, point.x);
    json doc;
    if (decoded) {
      doc["y"] = *decoded;
    } else {
      doc["y"] = nullptr;
      ++infeasible;
    }
    out << doc.dump() << "\n";
  }
  out.flush();
  if (!out) throw IoError("write failed: decoded.jsonl");
  std::cout << "decode: " << points.size() << " inputs, " << infeasible
            << " infeasible -> " << (dir / "decoded.jsonl").string() << "\n";
  return infeasible == 0 ? 0 : 1;
}

int run_check_rules(const harness::ExperimentConfig& cfg, const std::string& rules_path,
                    const std::string& data_path) {
  requirements::Requirement req = requirements::load_rules_file(rules_path);
  std::vector<DataPoint> points = load_jsonl(data_path, cfg.l);
  std::vector<Vector> inputs;
  std::vector<int> lengths;
  for (const DataPoint& p : points) {
    inputs.push_back(p.x);
    lengths.push_back(p.length);
  }
  requirements::FeasibilityReport report =
      req.kind == requirements::RequirementKind::flat
          ? requirements::check_feasibility(req, inputs)
          : requirements::check_feasibility(req, inputs, lengths);
  json doc;
  doc["inputs"] = points.size();
  doc["all_feasible"] = report.all_feasible();
  doc["infeasible_indices"] = report.infeasible_indices;
  std::cout << doc.dump(2) << "\n";
  return report.all_feasible() ? 0 : 1;
}

template <typename Report>
int finish(const Report& report, const harness::ExperimentConfig& cfg,
           const std::string& summary) {
  harness::emit_results(harness::serialize(report), harness::csv_rows(report, cfg), cfg);
  std::cout << summary << " -> " << (report.ok() ? "ok" : "FAILED") << ", results in "
            << cfg.out_dir << "\n";
  return report.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"verified-inference experiments and constrained decoding"};
  app.require_subcommand(1);

  std::string config_path, out_dir, model_path, rules_path, data_path;
  std::uint64_t seed = 0;
  int trials = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--seed", seed, "master seed override");
    cmd->add_option("--out", out_dir, "output directory override");
    cmd->add_option("--trials", trials, "Monte Carlo trials override");
  };

  add_common(app.add_subcommand("itv", "exact sandwich check on realizable instances"));
  add_common(app.add_subcommand("counterexample",
                                "two-point instance separating the two pipelines"));
  add_common(app.add_subcommand("bound-multiclass",
                                "margin generalization bound check for verified linear classes"));
  add_common(app.add_subcommand("bound-structured",
                                "surrogate generalization bound checks for verified chain models"));
  add_common(app.add_subcommand("complexity",
                                "complexity estimators and masked-class inequality checks"));

  CLI::App* decode = app.add_subcommand("decode", "constrained decoding of a JSON-lines dataset");
  add_common(decode);
  decode->add_option("--model", model_path, "chain model JSON file")->required();
  decode->add_option("--rules", rules_path, "structured rules JSON file")->required();
  decode->add_option("--data", data_path, "JSON-lines inputs, one {\"x\": [...]} per line")
      ->required();

  CLI::App* check = app.add_subcommand("check-rules", "feasibility report for a rules file");
  add_common(check);
  check->add_option("--rules", rules_path, "rules JSON file")->required();
  check->add_option("--data", data_path, "JSON-lines inputs")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    harness::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = harness::load_config_file(config_path);
    CLI::App* sub = app.get_subcommands().front();
    if (sub->count("--seed")) cfg.seed = seed;
    if (sub->count("--trials")) cfg.trials = trials;
    if (sub->count("--out")) cfg.out_dir = out_dir;
    cfg.experiment = sub->get_name();

    if (cfg.experiment == "itv") {
      harness::SandwichReport report = harness::run_itv_experiment(cfg);
      return finish(report, cfg,
                    "itv: " + std::to_string(report.records.size()) + " instances, " +
                        std::to_string(report.violations) + " violations");
    }
    if (cfg.experiment == "counterexample") {
      harness::CounterexampleReport report = harness::run_counterexample();
      return finish(report, cfg, "counterexample: verify-after-learning regret 0.5");
    }
    if (cfg.experiment == "bound-multiclass") {
      harness::BoundReport report = harness::run_bound_check_multiclass(cfg);
      return finish(report, cfg,
                    "bound-multiclass: " + std::to_string(cfg.n_draws) + " draws");
    }
    if (cfg.experiment == "bound-structured") {
      harness::BoundReport report = harness::run_bound_check_structured(cfg);
      return finish(report, cfg,
                    "bound-structured: " + std::to_string(cfg.n_draws) +
                        " draws per surrogate");
    }
    if (cfg.experiment == "complexity") {
      harness::ComplexityRunReport report = harness::run_complexity_checks(cfg);
      return finish(report, cfg,
                    "complexity: " + std::to_string(report.estimates.size()) +
                        " estimates, " + std::to_string(report.checks.size()) + " checks");
    }
    if (cfg.experiment == "decode") {
      return run_decode(cfg, model_path, rules_path, data_path);
    }
    if (cfg.experiment == "check-rules") {
      return run_check_rules(cfg, rules_path, data_path);
    }
    std::cerr << "error: unknown subcommand\n";
    return 2;
  } catch (const verikit::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
