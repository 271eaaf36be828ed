#include "verikit/hypotheses.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "verikit/rng.hpp"

namespace verikit::hypotheses {

using nlohmann::json;

Vector FeatureMap::apply(const Vector& x) const {
  if (is_identity()) return x;
  if (projection.cols() != x.size()) {
    throw DimensionMismatch("feature projection expects dimension " +
                            std::to_string(projection.cols()) + ", got " +
                            std::to_string(x.size()));
  }
  return projection * x;
}

Eigen::Index FeatureMap::output_dim(Eigen::Index input_dim) const {
  return is_identity() ? input_dim : projection.rows();
}

namespace {

void check_label(int y, int label_count) {
  if (y < 1 || y > label_count) {
    throw LabelOutOfRange("label " + std::to_string(y) + " outside 1.." +
                          std::to_string(label_count));
  }
}

void check_p(double p) {
  if (!(p >= 1.0 && p <= 2.0)) {
    throw InvalidP("group norm exponent must lie in [1, 2], got " + std::to_string(p));
  }
}

}  // namespace

Vector score_all(const ScoringHypothesis& h, const Vector& x) {
  Vector phi = h.feature_map.apply(x);
  if (phi.size() != h.weights.cols()) {
    throw DimensionMismatch("weights expect feature dimension " +
                            std::to_string(h.weights.cols()) + ", got " +
                            std::to_string(phi.size()));
  }
  return h.weights * phi;
}

double score(const ScoringHypothesis& h, const Vector& x, int y) {
  check_label(y, h.label_count());
  Vector phi = h.feature_map.apply(x);
  if (phi.size() != h.weights.cols()) {
    throw DimensionMismatch("weights expect feature dimension " +
                            std::to_string(h.weights.cols()) + ", got " +
                            std::to_string(phi.size()));
  }
  return h.weights.row(y - 1).dot(phi);
}

int argmax_label(const Vector& scores) {
  if (scores.size() == 0) throw SingleClass("empty score vector");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < scores.size(); ++i) {
    if (scores(i) > scores(best)) best = i;
  }
  return static_cast<int>(best) + 1;
}

int predict(const ScoringHypothesis& h, const Vector& x) {
  return argmax_label(score_all(h, x));
}

double margin_of_scores(const Vector& scores, int y) {
  if (scores.size() < 2) {
    throw SingleClass("margin needs at least two labels");
  }
  check_label(y, static_cast<int>(scores.size()));
  double best_other = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (i == y - 1) continue;
    best_other = std::max(best_other, scores(i));
  }
  return scores(y - 1) - best_other;
}

double margin(const ScoringHypothesis& h, const Vector& x, int y) {
  return margin_of_scores(score_all(h, x), y);
}

double capped_margin_of_scores(const Vector& scores, int y, double theta) {
  if (theta <= 0.0) throw NonpositiveTheta("theta must be positive");
  check_label(y, static_cast<int>(scores.size()));
  double worst = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    double gap = scores(y - 1) - scores(i) + (i == y - 1 ? theta : 0.0);
    worst = std::min(worst, gap);
  }
  return worst;
}

double capped_margin(const ScoringHypothesis& h, const Vector& x, int y, double theta) {
  return capped_margin_of_scores(score_all(h, x), y, theta);
}

double l2p_norm(const Matrix& weights, double p) {
  check_p(p);
  Vector row_norms = weights.rowwise().norm();
  if (p == 1.0) return row_norms.sum();
  if (p == 2.0) return row_norms.norm();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < row_norms.size(); ++i) {
    acc += std::pow(row_norms(i), p);
  }
  return std::pow(acc, 1.0 / p);
}

double l2p_norm(const ScoringHypothesis& h) { return l2p_norm(h.weights, h.p); }

ScoringHypothesis sample_unit_ball(int dim, int label_count, double p,
                                   std::uint64_t seed) {
  check_p(p);
  if (dim < 1 || label_count < 1) {
    throw DimensionMismatch("unit ball sample needs positive dimensions");
  }
  Rng rng(seed);
  ScoringHypothesis h;
  h.p = p;
  h.weights = Matrix(label_count, dim);
  for (int r = 0; r < label_count; ++r) {
    for (int c = 0; c < dim; ++c) h.weights(r, c) = rng.gaussian();
  }
  double norm = l2p_norm(h.weights, p);
  if (norm > 0.0) {
    double radius = std::pow(rng.uniform(), 1.0 / (static_cast<double>(dim) * label_count));
    h.weights *= radius / norm;
  }
  return h;
}

Eigen::Index TabulatedHypothesis::row_of(const Vector& x) const {
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].size() == x.size() && inputs[i] == x) {
      return static_cast<Eigen::Index>(i);
    }
  }
  throw Error("input is not in the tabulated domain");
}

Vector TabulatedHypothesis::score_all(const Vector& x) const {
  return scores.row(row_of(x)).transpose();
}

Scorer as_scorer(const ScoringHypothesis& h) {
  return Scorer{h.label_count(),
                [h](const Vector& x, int y) { return score(h, x, y); }};
}

Scorer as_scorer(const TabulatedHypothesis& h) {
  return Scorer{h.label_count(), [h](const Vector& x, int y) {
                  check_label(y, h.label_count());
                  return h.scores(h.row_of(x), y - 1);
                }};
}

Predictor as_predictor(const Scorer& s) {
  return Predictor{s.label_count,
                   [s](const Vector& x) { return predict(s, x); }};
}

Vector score_all(const Scorer& s, const Vector& x) {
  Vector scores(s.label_count);
  for (int y = 1; y <= s.label_count; ++y) scores(y - 1) = s.score(x, y);
  return scores;
}

int predict(const Scorer& s, const Vector& x) {
  return argmax_label(score_all(s, x));
}

double margin(const Scorer& s, const Vector& x, int y) {
  return margin_of_scores(score_all(s, x), y);
}

namespace {

void require_keys(const json& obj, const std::set<std::string>& known,
                  const std::string& where) {
  for (const auto& item : obj.items()) {
    if (!known.count(item.key())) {
      throw SchemaError("unknown key \"" + item.key() + "\" in " + where);
    }
  }
}

Matrix parse_matrix(const json& rows, const std::string& where) {
  if (!rows.is_array() || rows.empty()) {
    throw SchemaError(where + " must be a non-empty array of rows");
  }
  std::size_t cols = 0;
  for (const auto& row : rows) {
    if (!row.is_array() || row.empty()) throw SchemaError(where + " rows must be non-empty arrays");
    if (cols == 0) cols = row.size();
    if (row.size() != cols) throw SchemaError(where + " rows have inconsistent lengths");
  }
  Matrix out(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (!rows[r][c].is_number()) throw SchemaError(where + " entries must be numbers");
      out(r, c) = rows[r][c].get<double>();
    }
  }
  return out;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

ScoringHypothesis parse_hypothesis(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("hypothesis file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("hypothesis file root must be an object");
  require_keys(doc, {"K", "d", "p", "feature_map", "weights"}, "hypothesis file");
  for (const char* key : {"K", "d", "p", "feature_map", "weights"}) {
    if (!doc.contains(key)) throw SchemaError(std::string("hypothesis file needs \"") + key + "\"");
  }
  if (!doc["K"].is_number_integer() || !doc["d"].is_number_integer() || !doc["p"].is_number()) {
    throw SchemaError("K and d must be integers and p a number");
  }
  int K = doc["K"].get<int>();
  int d = doc["d"].get<int>();
  if (K < 1 || d < 1) throw SchemaError("K and d must be positive");

  ScoringHypothesis h;
  h.p = doc["p"].get<double>();
  check_p(h.p);

  const json& fm = doc["feature_map"];
  if (fm.is_string() && fm.get<std::string>() == "identity") {
    // identity: leave projection empty
  } else if (fm.is_object()) {
    require_keys(fm, {"random_features"}, "feature_map");
    if (!fm.contains("random_features") || !fm["random_features"].is_object()) {
      throw SchemaError("feature_map object needs \"random_features\"");
    }
    require_keys(fm["random_features"], {"matrix"}, "random_features");
    if (!fm["random_features"].contains("matrix")) {
      throw SchemaError("random_features needs a \"matrix\"");
    }
    h.feature_map.projection = parse_matrix(fm["random_features"]["matrix"], "feature matrix");
    if (h.feature_map.projection.cols() != d) {
      throw SchemaError("feature matrix must have d columns");
    }
  } else {
    throw SchemaError("feature_map must be \"identity\" or a random_features object");
  }

  h.weights = parse_matrix(doc["weights"], "weights");
  if (h.weights.rows() != K) throw SchemaError("weights must have K rows");
  if (h.weights.cols() != h.feature_map.output_dim(d)) {
    throw SchemaError("weights row length must match the feature dimension");
  }
  return h;
}

std::string serialize(const ScoringHypothesis& h) {
  json doc;
  doc["K"] = h.label_count();
  Eigen::Index d = h.feature_map.is_identity() ? h.weights.cols()
                                               : h.feature_map.projection.cols();
  doc["d"] = static_cast<int>(d);
  doc["p"] = h.p;
  if (h.feature_map.is_identity()) {
    doc["feature_map"] = "identity";
  } else {
    doc["feature_map"] = {{"random_features", {{"matrix", matrix_to_json(h.feature_map.projection)}}}};
  }
  doc["weights"] = matrix_to_json(h.weights);
  return doc.dump(2);
}

ScoringHypothesis load_hypothesis_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open hypothesis file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_hypothesis(buffer.str());
}

}  // namespace verikit::hypotheses
