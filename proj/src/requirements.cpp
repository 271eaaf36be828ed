#include "verikit/requirements.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "verikit/structured.hpp"

namespace verikit::requirements {

using nlohmann::json;

bool AtomicPredicate::matches(const Vector& x) const {
  if (feature_index < 0 || feature_index >= x.size()) {
    throw DimensionMismatch("predicate feature index " + std::to_string(feature_index) +
                            " out of range for input of dimension " + std::to_string(x.size()));
  }
  double v = x(feature_index);
  switch (op) {
    case Comparator::less:
      return v < threshold;
    case Comparator::less_equal:
      return v <= threshold;
    case Comparator::greater:
      return v > threshold;
    case Comparator::greater_equal:
      return v >= threshold;
    case Comparator::equal:
      return v == threshold;
  }
  return false;
}

bool Rule::condition_matches(const Vector& x) const {
  return std::all_of(condition.begin(), condition.end(),
                     [&](const AtomicPredicate& pred) { return pred.matches(x); });
}

namespace {

void check_label_range(int y, int label_count) {
  if (y < 1 || y > label_count) {
    throw LabelOutOfRange("label " + std::to_string(y) + " outside 1.." +
                          std::to_string(label_count));
  }
}

bool rule_excludes_label(const Rule& rule, int y) {
  if (rule.effect == EffectKind::forbid) {
    return std::find(rule.labels.begin(), rule.labels.end(), y) != rule.labels.end();
  }
  if (rule.effect == EffectKind::allow_only) {
    return std::find(rule.labels.begin(), rule.labels.end(), y) == rule.labels.end();
  }
  return false;
}

}  // namespace

bool evaluate(const Requirement& req, const Vector& x, int y) {
  if (req.kind != RequirementKind::flat) {
    throw Error("evaluate expects a flat requirement; use evaluate_structured");
  }
  check_label_range(y, req.label_count);
  for (const Rule& rule : req.rules) {
    if (!rule.condition_matches(x)) continue;
    if (rule_excludes_label(rule, y)) return false;
  }
  return true;
}

std::vector<int> feasible_labels(const Requirement& req, const Vector& x) {
  std::vector<int> labels;
  for (int y = 1; y <= req.label_count; ++y) {
    if (evaluate(req, x, y)) labels.push_back(y);
  }
  return labels;
}

bool SequenceConstraints::satisfied(const LabelSeq& y) const {
  if (y.size() != allowed.size()) {
    throw LengthMismatch("sequence length " + std::to_string(y.size()) +
                         " does not match constraint length " + std::to_string(allowed.size()));
  }
  for (int label : y) check_label_range(label, label_count);
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (!allowed[k][y[k] - 1]) return false;
  }
  for (std::size_t k = 0; k + 1 < y.size(); ++k) {
    if (!pair_allowed[y[k] - 1][y[k + 1] - 1]) return false;
  }
  for (int label : must_include) {
    if (std::find(y.begin(), y.end(), label) == y.end()) return false;
  }
  return true;
}

SequenceConstraints compile_constraints(const Requirement& req, const Vector& x,
                                        int length) {
  if (req.kind != RequirementKind::structured) {
    throw Error("compile_constraints expects a structured requirement");
  }
  if (length < 1) throw LengthMismatch("sequence length must be positive");

  const int K = req.label_count;
  SequenceConstraints out;
  out.label_count = K;
  out.allowed.assign(length, std::vector<char>(K, 1));
  out.pair_allowed.assign(K, std::vector<char>(K, 1));

  std::set<int> must;
  for (const Rule& rule : req.rules) {
    if (!rule.condition_matches(x)) continue;

    if (rule.effect != EffectKind::none) {
      auto apply_at = [&](int pos) {
        for (int y = 1; y <= K; ++y) {
          if (rule_excludes_label(rule, y)) out.allowed[pos][y - 1] = 0;
        }
      };
      if (rule.positions.empty()) {
        for (int pos = 0; pos < length; ++pos) apply_at(pos);
      } else {
        for (int pos : rule.positions) {
          if (pos >= 1 && pos <= length) apply_at(pos - 1);
        }
      }
    }
    for (const auto& [a, b] : rule.forbidden_pairs) {
      check_label_range(a, K);
      check_label_range(b, K);
      out.pair_allowed[a - 1][b - 1] = 0;
    }
    for (int label : rule.must_include) {
      check_label_range(label, K);
      must.insert(label);
    }
  }
  if (must.size() > kMaxMustInclude) {
    throw TooLarge("combined must_include set has " + std::to_string(must.size()) +
                   " labels; the decoder budget is " + std::to_string(kMaxMustInclude));
  }
  out.must_include.assign(must.begin(), must.end());
  return out;
}

bool evaluate_structured(const Requirement& req, const Vector& x,
                         const LabelSeq& y) {
  if (y.empty()) throw LengthMismatch("empty label sequence");
  SequenceConstraints cs = compile_constraints(req, x, static_cast<int>(y.size()));
  return cs.satisfied(y);
}

FeasibilityReport check_feasibility(const Requirement& req,
                                    const std::vector<Vector>& inputs) {
  if (req.kind != RequirementKind::flat) {
    throw Error("flat check_feasibility called on structured requirement");
  }
  FeasibilityReport report;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (feasible_labels(req, inputs[i]).empty()) report.infeasible_indices.push_back(i);
  }
  return report;
}

FeasibilityReport check_feasibility(const Requirement& req,
                                    const std::vector<Vector>& inputs,
                                    const std::vector<int>& lengths) {
  if (req.kind != RequirementKind::structured) {
    throw Error("structured check_feasibility called on flat requirement");
  }
  if (inputs.size() != lengths.size()) {
    throw LengthMismatch("inputs and lengths differ in count");
  }
  FeasibilityReport report;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (!structured::feasible_sequence_exists(req, inputs[i], lengths[i])) {
      report.infeasible_indices.push_back(i);
    }
  }
  return report;
}

namespace {

Comparator parse_comparator(const std::string& s) {
  if (s == "<") return Comparator::less;
  if (s == "<=") return Comparator::less_equal;
  if (s == ">") return Comparator::greater;
  if (s == ">=") return Comparator::greater_equal;
  if (s == "==") return Comparator::equal;
  throw SchemaError("unknown comparator \"" + s + "\"");
}

std::string comparator_string(Comparator op) {
  switch (op) {
    case Comparator::less: return "<";
    case Comparator::less_equal: return "<=";
    case Comparator::greater: return ">";
    case Comparator::greater_equal: return ">=";
    case Comparator::equal: return "==";
  }
  return "<";
}

void require_keys(const json& obj, const std::set<std::string>& known,
                  const std::string& where) {
  for (const auto& item : obj.items()) {
    if (!known.count(item.key())) {
      throw SchemaError("unknown key \"" + item.key() + "\" in " + where);
    }
  }
}

std::vector<int> parse_label_array(const json& arr, int label_count,
                                   const std::string& where) {
  if (!arr.is_array()) throw SchemaError(where + " must be an array of labels");
  std::vector<int> labels;
  for (const auto& v : arr) {
    if (!v.is_number_integer()) throw SchemaError(where + " entries must be integers");
    int y = v.get<int>();
    if (y < 1 || y > label_count) {
      throw SchemaError(where + " label " + std::to_string(y) + " outside 1.." +
                        std::to_string(label_count));
    }
    labels.push_back(y);
  }
  return labels;
}

}  // namespace

Requirement parse_rules(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("rule file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("rule file root must be an object");
  require_keys(doc, {"kind", "label_count", "rules"}, "rule file");

  Requirement req;
  if (!doc.contains("kind") || !doc["kind"].is_string()) {
    throw SchemaError("rule file needs a string \"kind\"");
  }
  std::string kind = doc["kind"].get<std::string>();
  if (kind == "flat") {
    req.kind = RequirementKind::flat;
  } else if (kind == "structured") {
    req.kind = RequirementKind::structured;
  } else {
    throw SchemaError("kind must be \"flat\" or \"structured\", got \"" + kind + "\"");
  }

  if (!doc.contains("label_count") || !doc["label_count"].is_number_integer()) {
    throw SchemaError("rule file needs an integer \"label_count\"");
  }
  req.label_count = doc["label_count"].get<int>();
  if (req.label_count < 1) throw SchemaError("label_count must be at least 1");

  if (!doc.contains("rules")) return req;
  if (!doc["rules"].is_array()) throw SchemaError("\"rules\" must be an array");

  bool structured = req.kind == RequirementKind::structured;
  for (const auto& jr : doc["rules"]) {
    if (!jr.is_object()) throw SchemaError("each rule must be an object");
    require_keys(jr, {"if", "forbid", "allow_only", "positions", "forbid_pairs", "must_include"},
                 "rule");
    Rule rule;

    if (jr.contains("if")) {
      if (!jr["if"].is_array()) throw SchemaError("rule \"if\" must be an array");
      for (const auto& jp : jr["if"]) {
        if (!jp.is_object()) throw SchemaError("each predicate must be an object");
        require_keys(jp, {"feature", "op", "value"}, "predicate");
        AtomicPredicate pred;
        if (!jp.contains("feature") || !jp["feature"].is_number_integer()) {
          throw SchemaError("predicate needs an integer \"feature\"");
        }
        pred.feature_index = jp["feature"].get<int>();
        if (pred.feature_index < 0) throw SchemaError("negative feature index");
        if (!jp.contains("op") || !jp["op"].is_string()) {
          throw SchemaError("predicate needs a string \"op\"");
        }
        pred.op = parse_comparator(jp["op"].get<std::string>());
        if (!jp.contains("value") || !jp["value"].is_number()) {
          throw SchemaError("predicate needs a numeric \"value\"");
        }
        pred.threshold = jp["value"].get<double>();
        rule.condition.push_back(pred);
      }
    }

    bool has_forbid = jr.contains("forbid");
    bool has_allow = jr.contains("allow_only");
    if (has_forbid && has_allow) {
      throw SchemaError("rule has both \"forbid\" and \"allow_only\"");
    }
    if (has_forbid) {
      rule.effect = EffectKind::forbid;
      rule.labels = parse_label_array(jr["forbid"], req.label_count, "forbid");
    } else if (has_allow) {
      rule.effect = EffectKind::allow_only;
      rule.labels = parse_label_array(jr["allow_only"], req.label_count, "allow_only");
    }

    if (jr.contains("positions")) {
      if (!structured) throw SchemaError("\"positions\" only applies to structured rules");
      if (!jr["positions"].is_array()) throw SchemaError("\"positions\" must be an array");
      for (const auto& v : jr["positions"]) {
        if (!v.is_number_integer()) throw SchemaError("positions must be integers");
        int pos = v.get<int>();
        if (pos < 1) throw SchemaError("positions are 1-based and must be positive");
        rule.positions.push_back(pos);
      }
    }
    if (jr.contains("forbid_pairs")) {
      if (!structured) throw SchemaError("\"forbid_pairs\" only applies to structured rules");
      if (!jr["forbid_pairs"].is_array()) throw SchemaError("\"forbid_pairs\" must be an array");
      for (const auto& jp : jr["forbid_pairs"]) {
        if (!jp.is_array() || jp.size() != 2) {
          throw SchemaError("each forbidden pair must be a two-label array");
        }
        std::vector<int> pair = parse_label_array(jp, req.label_count, "forbid_pairs");
        rule.forbidden_pairs.emplace_back(pair[0], pair[1]);
      }
    }
    if (jr.contains("must_include")) {
      if (!structured) throw SchemaError("\"must_include\" only applies to structured rules");
      rule.must_include = parse_label_array(jr["must_include"], req.label_count, "must_include");
      std::sort(rule.must_include.begin(), rule.must_include.end());
      rule.must_include.erase(std::unique(rule.must_include.begin(), rule.must_include.end()),
                              rule.must_include.end());
      if (rule.must_include.size() > kMaxMustInclude) {
        throw ParseError("must_include has " + std::to_string(rule.must_include.size()) +
                         " labels; at most " + std::to_string(kMaxMustInclude) + " are supported");
      }
    }
    req.rules.push_back(std::move(rule));
  }
  return req;
}

std::string serialize(const Requirement& req) {
  json doc;
  doc["kind"] = req.kind == RequirementKind::flat ? "flat" : "structured";
  doc["label_count"] = req.label_count;
  doc["rules"] = json::array();
  for (const Rule& rule : req.rules) {
    json jr = json::object();
    if (!rule.condition.empty()) {
      jr["if"] = json::array();
      for (const AtomicPredicate& pred : rule.condition) {
        jr["if"].push_back({{"feature", pred.feature_index},
                            {"op", comparator_string(pred.op)},
                            {"value", pred.threshold}});
      }
    }
    if (rule.effect == EffectKind::forbid) jr["forbid"] = rule.labels;
    if (rule.effect == EffectKind::allow_only) jr["allow_only"] = rule.labels;
    if (!rule.positions.empty()) jr["positions"] = rule.positions;
    if (!rule.forbidden_pairs.empty()) {
      jr["forbid_pairs"] = json::array();
      for (const auto& [a, b] : rule.forbidden_pairs) {
        jr["forbid_pairs"].push_back({a, b});
      }
    }
    if (!rule.must_include.empty()) jr["must_include"] = rule.must_include;
    doc["rules"].push_back(std::move(jr));
  }
  return doc.dump(2);
}

Requirement load_rules_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open rule file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_rules(buffer.str());
}

Requirement trivial(RequirementKind kind, int label_count) {
  Requirement req;
  req.kind = kind;
  req.label_count = label_count;
  return req;
}

}  // namespace verikit::requirements
