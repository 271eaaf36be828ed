#include "verikit/structured.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "verikit/rng.hpp"

namespace verikit::structured {

using nlohmann::json;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void validate_sequence(const FactorModel& model, const LabelSeq& y) {
  if (static_cast<int>(y.size()) != model.length()) {
    throw LengthMismatch("sequence length " + std::to_string(y.size()) +
                         " does not match model length " + std::to_string(model.length()));
  }
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (y[k] < 1 || y[k] > model.alphabet_sizes[k]) {
      throw LabelOutOfRange("label " + std::to_string(y[k]) + " at position " +
                            std::to_string(k + 1) + " outside 1.." +
                            std::to_string(model.alphabet_sizes[k]));
    }
  }
}

void validate_factor(const FactorModel& model, const Factor& f) {
  if (f.scope.empty()) throw DimensionMismatch("factor with empty scope");
  std::size_t expected = 1;
  int prev = 0;
  for (int pos : f.scope) {
    if (pos < 1 || pos > model.length()) {
      throw DimensionMismatch("factor scope position " + std::to_string(pos) +
                              " outside 1.." + std::to_string(model.length()));
    }
    if (pos <= prev) throw DimensionMismatch("factor scope must be strictly ascending");
    prev = pos;
    expected *= static_cast<std::size_t>(model.alphabet_sizes[pos - 1]);
  }
  if (static_cast<std::size_t>(f.table.size()) != expected) {
    throw DimensionMismatch("factor table has " + std::to_string(f.table.size()) +
                            " entries, scope needs " + std::to_string(expected));
  }
}

// merged per-position and per-adjacent-pair tables for chain decoding
struct ChainTables {
  std::vector<Vector> em;
  std::vector<Matrix> tr;
};

ChainTables compile_chain(const FactorModel& model) {
  const int l = model.length();
  if (l < 1) throw LengthMismatch("model must cover at least one position");
  ChainTables t;
  t.em.reserve(l);
  for (int k = 0; k < l; ++k) t.em.push_back(Vector::Zero(model.alphabet_sizes[k]));
  t.tr.reserve(l - 1);
  for (int k = 0; k + 1 < l; ++k) {
    t.tr.push_back(Matrix::Zero(model.alphabet_sizes[k], model.alphabet_sizes[k + 1]));
  }
  for (const Factor& f : model.factors) {
    validate_factor(model, f);
    if (f.scope.size() == 1) {
      t.em[f.scope[0] - 1] += f.table;
    } else if (f.scope.size() == 2 && f.scope[1] == f.scope[0] + 1) {
      int k = f.scope[0] - 1;
      int rows = model.alphabet_sizes[k];
      int cols = model.alphabet_sizes[k + 1];
      for (int a = 0; a < rows; ++a) {
        for (int b = 0; b < cols; ++b) t.tr[k](a, b) += f.table(a * cols + b);
      }
    } else {
      throw NotAChain("factor scope is neither a position nor an adjacent pair");
    }
  }
  return t;
}

}  // namespace

double score_sequence(const FactorModel& model, const LabelSeq& y) {
  validate_sequence(model, y);
  double total = 0.0;
  for (const Factor& f : model.factors) {
    validate_factor(model, f);
    std::size_t index = 0;
    for (int pos : f.scope) {
      index = index * static_cast<std::size_t>(model.alphabet_sizes[pos - 1]) +
              static_cast<std::size_t>(y[pos - 1] - 1);
    }
    total += f.table(static_cast<Eigen::Index>(index));
  }
  return total;
}

bool is_chain(const FactorModel& model) {
  for (const Factor& f : model.factors) {
    if (f.scope.size() == 1) continue;
    if (f.scope.size() == 2 && f.scope[1] == f.scope[0] + 1) continue;
    return false;
  }
  return true;
}

namespace {

// Backward best-suffix dynamic program over (position, label, still-needed
// must-include bitmask), then a greedy left-to-right reconstruction that
// picks the smallest label achieving the stored optimum. The reconstruction
// recomputes the exact expressions the fill-in used, so tie comparison is
// bitwise and the result is the lexicographically smallest optimum.
std::optional<LabelSeq> chain_decode(const FactorModel& model,
                                     const requirements::SequenceConstraints* cs) {
  const int l = model.length();
  ChainTables t = compile_chain(model);

  if (cs) {
    if (static_cast<int>(cs->allowed.size()) != l) {
      throw LengthMismatch("constraints cover " + std::to_string(cs->allowed.size()) +
                           " positions, model has " + std::to_string(l));
    }
    for (int k = 0; k < l; ++k) {
      if (model.alphabet_sizes[k] != cs->label_count) {
        throw DimensionMismatch("constrained decoding needs a uniform alphabet matching the requirement");
      }
    }
  }

  const std::size_t bits = cs ? cs->must_include.size() : 0;
  if (bits > requirements::kMaxMustInclude) {
    throw TooLarge("must-include set exceeds the bitmask budget");
  }
  const int masks = 1 << bits;
  int max_alpha = *std::max_element(model.alphabet_sizes.begin(), model.alphabet_sizes.end());
  std::vector<int> bit_of(max_alpha + 1, -1);
  if (cs) {
    for (std::size_t i = 0; i < cs->must_include.size(); ++i) {
      bit_of[cs->must_include[i]] = static_cast<int>(i);
    }
  }
  auto label_bit = [&](int a) { return bit_of[a] >= 0 ? (1 << bit_of[a]) : 0; };
  auto allowed = [&](int k, int a) { return !cs || cs->allowed[k][a - 1]; };
  auto pair_ok = [&](int a, int b) { return !cs || cs->pair_allowed[a - 1][b - 1]; };

  // dp[k] holds alphabet_sizes[k] * masks entries: value of the best suffix
  // starting at k with label a, still required to cover the mask.
  std::vector<std::vector<double>> dp(l);
  auto at = [&](std::vector<double>& layer, int a, int need) -> double& {
    return layer[static_cast<std::size_t>(a - 1) * masks + need];
  };

  {
    int k = l - 1;
    dp[k].assign(static_cast<std::size_t>(model.alphabet_sizes[k]) * masks, kNegInf);
    for (int a = 1; a <= model.alphabet_sizes[k]; ++a) {
      if (!allowed(k, a)) continue;
      for (int need = 0; need < masks; ++need) {
        if ((need & ~label_bit(a)) == 0) at(dp[k], a, need) = t.em[k](a - 1);
      }
    }
  }
  for (int k = l - 2; k >= 0; --k) {
    dp[k].assign(static_cast<std::size_t>(model.alphabet_sizes[k]) * masks, kNegInf);
    for (int a = 1; a <= model.alphabet_sizes[k]; ++a) {
      if (!allowed(k, a)) continue;
      double base = t.em[k](a - 1);
      for (int need = 0; need < masks; ++need) {
        int rem = need & ~label_bit(a);
        double best = kNegInf;
        for (int b = 1; b <= model.alphabet_sizes[k + 1]; ++b) {
          if (!pair_ok(a, b)) continue;
          double cand = t.tr[k](a - 1, b - 1) + at(dp[k + 1], b, rem);
          if (cand > best) best = cand;
        }
        if (best > kNegInf) at(dp[k], a, need) = base + best;
      }
    }
  }

  const int full = masks - 1;
  double best = kNegInf;
  for (int a = 1; a <= model.alphabet_sizes[0]; ++a) {
    best = std::max(best, at(dp[0], a, full));
  }
  if (best == kNegInf) return std::nullopt;

  LabelSeq y(l);
  int need = full;
  for (int a = 1; a <= model.alphabet_sizes[0]; ++a) {
    if (at(dp[0], a, full) == best) {
      y[0] = a;
      break;
    }
  }
  for (int k = 0; k + 1 < l; ++k) {
    int a = y[k];
    double target = at(dp[k], a, need);
    int rem = need & ~label_bit(a);
    double base = t.em[k](a - 1);
    for (int b = 1; b <= model.alphabet_sizes[k + 1]; ++b) {
      if (!pair_ok(a, b)) continue;
      if (base + (t.tr[k](a - 1, b - 1) + at(dp[k + 1], b, rem)) == target) {
        y[k + 1] = b;
        break;
      }
    }
    need = rem;
  }
  return y;
}

}  // namespace

LabelSeq viterbi(const FactorModel& model) {
  auto result = chain_decode(model, nullptr);
  if (!result) throw Error("unconstrained decoding cannot fail");
  return *result;
}

std::optional<LabelSeq> constrained_viterbi(const FactorModel& model,
                                            const requirements::SequenceConstraints& cs) {
  return chain_decode(model, &cs);
}

std::optional<LabelSeq> constrained_viterbi(const FactorModel& model,
                                            const requirements::Requirement& req,
                                            const Vector& x) {
  auto cs = requirements::compile_constraints(req, x, model.length());
  return chain_decode(model, &cs);
}

std::optional<LabelSeq> brute_force_decode(const FactorModel& model,
                                           const requirements::SequenceConstraints* cs,
                                           std::size_t cap) {
  const int l = model.length();
  double count = 1.0;
  for (int k = 0; k < l; ++k) count *= model.alphabet_sizes[k];
  if (count > static_cast<double>(cap)) {
    throw TooLarge("label set of size " + std::to_string(count) +
                   " exceeds the brute force cap " + std::to_string(cap));
  }
  if (cs) {
    for (int k = 0; k < l; ++k) {
      if (model.alphabet_sizes[k] != cs->label_count) {
        throw DimensionMismatch("constrained decoding needs a uniform alphabet matching the requirement");
      }
    }
  }

  std::optional<LabelSeq> best_seq;
  double best = kNegInf;
  LabelSeq y(l, 1);
  while (true) {
    if (!cs || cs->satisfied(y)) {
      double s = score_sequence(model, y);
      if (s > best) {  // strict: lexicographic order visits smaller sequences first
        best = s;
        best_seq = y;
      }
    }
    int pos = l - 1;
    while (pos >= 0 && y[pos] == model.alphabet_sizes[pos]) {
      y[pos] = 1;
      --pos;
    }
    if (pos < 0) break;
    ++y[pos];
  }
  return best_seq;
}

bool feasible_sequence_exists(const requirements::Requirement& req, const Vector& x,
                              int length) {
  FactorModel zero;
  zero.alphabet_sizes.assign(length, req.label_count);
  auto cs = requirements::compile_constraints(req, x, length);
  return chain_decode(zero, &cs).has_value();
}

SeqScore mask_sequence_scores(SeqScore base, requirements::SequenceConstraints cs,
                              double M) {
  if (M <= 0.0) throw Error("mask constant must be positive");
  return [base = std::move(base), cs = std::move(cs), M](const LabelSeq& y) {
    if (!cs.satisfied(y)) return -M;
    double s = base(y);
    if (std::abs(s) >= M) {
      throw MaskConstantViolated("sequence score magnitude " + std::to_string(std::abs(s)) +
                                 " reaches the mask constant " + std::to_string(M));
    }
    return s;
  };
}

namespace {

void check_rho(double rho) {
  if (rho <= 0.0) throw NonpositiveRho("margin scale rho must be positive");
}

// additive form on a chain: backward program over (position, label,
// suffix-differs-from-observed), maximizing hamming/l + score/rho among
// sequences differing somewhere
double loss_augmented_max_chain(const FactorModel& model, const LabelSeq& observed,
                                double rho) {
  const int l = model.length();
  ChainTables t = compile_chain(model);
  const double per_position = 1.0 / static_cast<double>(l);

  auto aug = [&](int k, int b) {
    return t.em[k](b - 1) / rho + (b != observed[k] ? per_position : 0.0);
  };

  // dp[k][b][d]: best suffix value from position k with label b, where d
  // records whether the suffix differs from the observed sequence
  std::vector<std::vector<double>> dp(l);
  auto at = [](std::vector<double>& layer, int b, int d) -> double& {
    return layer[static_cast<std::size_t>(b - 1) * 2 + d];
  };

  {
    int k = l - 1;
    dp[k].assign(static_cast<std::size_t>(model.alphabet_sizes[k]) * 2, kNegInf);
    for (int b = 1; b <= model.alphabet_sizes[k]; ++b) {
      at(dp[k], b, b != observed[k] ? 1 : 0) = aug(k, b);
    }
  }
  for (int k = l - 2; k >= 0; --k) {
    dp[k].assign(static_cast<std::size_t>(model.alphabet_sizes[k]) * 2, kNegInf);
    for (int b = 1; b <= model.alphabet_sizes[k]; ++b) {
      double base = aug(k, b);
      bool differs = b != observed[k];
      for (int d = 0; d < 2; ++d) {
        double best = kNegInf;
        for (int c = 1; c <= model.alphabet_sizes[k + 1]; ++c) {
          double step = t.tr[k](b - 1, c - 1) / rho;
          if (differs) {
            // the suffix already differs; the tail may or may not
            double tail = std::max(at(dp[k + 1], c, 0), at(dp[k + 1], c, 1));
            if (d == 1) best = std::max(best, step + tail);
          } else {
            best = std::max(best, step + at(dp[k + 1], c, d));
          }
        }
        if (best > kNegInf) at(dp[k], b, d) = std::max(at(dp[k], b, d), base + best);
      }
    }
  }

  double best = kNegInf;
  for (int b = 1; b <= model.alphabet_sizes[0]; ++b) {
    best = std::max(best, at(dp[0], b, 1));
  }
  if (best == kNegInf) return kNegInf;  // no competing sequence exists
  return best - score_sequence(model, observed) / rho;
}

}  // namespace

double loss_augmented_max(const FactorModel& model, const LabelSeq& observed,
                          double rho, SurrogateMode mode, std::size_t cap) {
  check_rho(rho);
  validate_sequence(model, observed);
  if (mode == SurrogateMode::additive && is_chain(model)) {
    return loss_augmented_max_chain(model, observed, rho);
  }
  if (mode == SurrogateMode::additive) {
    throw NotAChain("the decomposed loss-augmented program needs a chain model");
  }

  const int l = model.length();
  double count = 1.0;
  for (int k = 0; k < l; ++k) count *= model.alphabet_sizes[k];
  if (count > static_cast<double>(cap)) {
    throw TooLarge("multiplicative form needs enumeration; label set of size " +
                   std::to_string(count) + " exceeds the cap");
  }
  double base_score = score_sequence(model, observed);
  double best = kNegInf;
  LabelSeq y(l, 1);
  while (true) {
    if (y != observed) {
      double value = losses::hamming_loss(y, observed) *
                     (1.0 - (base_score - score_sequence(model, y)) / rho);
      best = std::max(best, value);
    }
    int pos = l - 1;
    while (pos >= 0 && y[pos] == model.alphabet_sizes[pos]) {
      y[pos] = 1;
      --pos;
    }
    if (pos < 0) break;
    ++y[pos];
  }
  return best;
}

FactorModel realize(const ChainModel& model, const Vector& x, int length) {
  if (length < 1) throw LengthMismatch("sequence length must be positive");
  const int K = model.label_count();
  Vector phi = model.feature_map.apply(x);
  if (phi.size() != model.emission_weights.cols()) {
    throw DimensionMismatch("emission weights expect feature dimension " +
                            std::to_string(model.emission_weights.cols()) + ", got " +
                            std::to_string(phi.size()));
  }
  Vector em = model.emission_weights * phi;

  FactorModel out;
  out.alphabet_sizes.assign(length, K);
  for (int k = 1; k <= length; ++k) {
    out.factors.push_back({{k}, em});
  }
  if (model.has_transitions()) {
    if (model.transition_weights.rows() != K || model.transition_weights.cols() != K) {
      throw DimensionMismatch("transition matrix must be K x K");
    }
    Vector flat(K * K);
    for (int a = 0; a < K; ++a) {
      for (int b = 0; b < K; ++b) flat(a * K + b) = model.transition_weights(a, b);
    }
    for (int k = 1; k < length; ++k) {
      out.factors.push_back({{k, k + 1}, flat});
    }
  }
  return out;
}

double score(const ChainModel& model, const Vector& x, const LabelSeq& y) {
  if (y.empty()) throw LengthMismatch("empty label sequence");
  const int K = model.label_count();
  Vector phi = model.feature_map.apply(x);
  if (phi.size() != model.emission_weights.cols()) {
    throw DimensionMismatch("emission weights expect feature dimension " +
                            std::to_string(model.emission_weights.cols()) + ", got " +
                            std::to_string(phi.size()));
  }
  Vector em = model.emission_weights * phi;
  double total = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (y[k] < 1 || y[k] > K) {
      throw LabelOutOfRange("label " + std::to_string(y[k]) + " outside 1.." + std::to_string(K));
    }
    total += em(y[k] - 1);
  }
  if (model.has_transitions()) {
    for (std::size_t k = 0; k + 1 < y.size(); ++k) {
      total += model.transition_weights(y[k] - 1, y[k + 1] - 1);
    }
  }
  return total;
}

double group_norm(const ChainModel& model) {
  std::vector<double> norms;
  for (Eigen::Index r = 0; r < model.emission_weights.rows(); ++r) {
    norms.push_back(model.emission_weights.row(r).norm());
  }
  if (model.has_transitions()) {
    for (Eigen::Index a = 0; a < model.transition_weights.rows(); ++a) {
      for (Eigen::Index b = 0; b < model.transition_weights.cols(); ++b) {
        norms.push_back(std::abs(model.transition_weights(a, b)));
      }
    }
  }
  double p = model.p;
  if (!(p >= 1.0 && p <= 2.0)) throw InvalidP("group norm exponent must lie in [1, 2]");
  double acc = 0.0;
  for (double n : norms) acc += std::pow(n, p);
  return std::pow(acc, 1.0 / p);
}

ChainModel sample_chain_unit_ball(int feature_dim, int label_count,
                                  bool with_transitions, double p,
                                  std::uint64_t seed) {
  if (feature_dim < 1 || label_count < 1) {
    throw DimensionMismatch("unit ball sample needs positive dimensions");
  }
  Rng rng(seed);
  ChainModel model;
  model.p = p;
  model.emission_weights = Matrix(label_count, feature_dim);
  for (int r = 0; r < label_count; ++r) {
    for (int c = 0; c < feature_dim; ++c) model.emission_weights(r, c) = rng.gaussian();
  }
  int params = label_count * feature_dim;
  if (with_transitions) {
    model.transition_weights = Matrix(label_count, label_count);
    for (int a = 0; a < label_count; ++a) {
      for (int b = 0; b < label_count; ++b) model.transition_weights(a, b) = rng.gaussian();
    }
    params += label_count * label_count;
  }
  double norm = group_norm(model);
  if (norm > 0.0) {
    double radius = std::pow(rng.uniform(), 1.0 / params);
    model.emission_weights *= radius / norm;
    if (with_transitions) model.transition_weights *= radius / norm;
  }
  return model;
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

ChainModel parse_chain_model(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("model file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("model file root must be an object");
  require_keys(doc, {"K", "d", "p", "feature_map", "emission_weights", "transition_weights"},
               "model file");
  for (const char* key : {"K", "d", "p", "feature_map", "emission_weights"}) {
    if (!doc.contains(key)) throw SchemaError(std::string("model file needs \"") + key + "\"");
  }
  if (!doc["K"].is_number_integer() || !doc["d"].is_number_integer() || !doc["p"].is_number()) {
    throw SchemaError("K and d must be integers and p a number");
  }
  int K = doc["K"].get<int>();
  int d = doc["d"].get<int>();
  if (K < 1 || d < 1) throw SchemaError("K and d must be positive");

  ChainModel model;
  model.p = doc["p"].get<double>();
  if (!(model.p >= 1.0 && model.p <= 2.0)) throw SchemaError("p must lie in [1, 2]");

  const json& fm = doc["feature_map"];
  if (fm.is_string() && fm.get<std::string>() == "identity") {
    // identity map
  } else if (fm.is_object()) {
    require_keys(fm, {"random_features"}, "feature_map");
    if (!fm.contains("random_features") || !fm["random_features"].is_object() ||
        !fm["random_features"].contains("matrix")) {
      throw SchemaError("feature_map object needs random_features.matrix");
    }
    require_keys(fm["random_features"], {"matrix"}, "random_features");
    model.feature_map.projection = parse_matrix(fm["random_features"]["matrix"], "feature matrix");
    if (model.feature_map.projection.cols() != d) {
      throw SchemaError("feature matrix must have d columns");
    }
  } else {
    throw SchemaError("feature_map must be \"identity\" or a random_features object");
  }

  model.emission_weights = parse_matrix(doc["emission_weights"], "emission_weights");
  if (model.emission_weights.rows() != K) throw SchemaError("emission_weights must have K rows");
  if (model.emission_weights.cols() != model.feature_map.output_dim(d)) {
    throw SchemaError("emission_weights row length must match the feature dimension");
  }
  if (doc.contains("transition_weights") && !doc["transition_weights"].is_null()) {
    model.transition_weights = parse_matrix(doc["transition_weights"], "transition_weights");
    if (model.transition_weights.rows() != K || model.transition_weights.cols() != K) {
      throw SchemaError("transition_weights must be K x K");
    }
  }
  return model;
}

std::string serialize(const ChainModel& model) {
  json doc;
  doc["K"] = model.label_count();
  Eigen::Index d = model.feature_map.is_identity() ? model.emission_weights.cols()
                                                   : model.feature_map.projection.cols();
  doc["d"] = static_cast<int>(d);
  doc["p"] = model.p;
  if (model.feature_map.is_identity()) {
    doc["feature_map"] = "identity";
  } else {
    doc["feature_map"] = {{"random_features", {{"matrix", matrix_to_json(model.feature_map.projection)}}}};
  }
  doc["emission_weights"] = matrix_to_json(model.emission_weights);
  if (model.has_transitions()) {
    doc["transition_weights"] = matrix_to_json(model.transition_weights);
  } else {
    doc["transition_weights"] = nullptr;
  }
  return doc.dump(2);
}

ChainModel load_chain_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_chain_model(buffer.str());
}

namespace {

template <typename TermFn>
double chain_surrogate(const ChainModel& model, const losses::StructuredSample& sample,
                       double rho, std::size_t cap, SurrogateMode mode, TermFn term) {
  check_rho(rho);
  if (sample.size() == 0) throw Error("empty sample");
  const int K = model.label_count();
  double total = 0.0;
  for (const auto& e : sample.examples) {
    const int l = static_cast<int>(e.y.size());
    double count = std::pow(static_cast<double>(K), l);
    if (count <= static_cast<double>(cap)) {
      auto sequences = losses::enumerate_sequences(K, l, cap);
      std::vector<double> scores(sequences.size());
      std::vector<double> hammings(sequences.size());
      std::size_t true_index = sequences.size();
      for (std::size_t j = 0; j < sequences.size(); ++j) {
        scores[j] = score(model, e.x, sequences[j]);
        hammings[j] = losses::hamming_loss(sequences[j], e.y);
        if (sequences[j] == e.y) true_index = j;
      }
      total += term(scores, true_index, hammings, rho, 1.0);
    } else if (mode == SurrogateMode::additive) {
      double value = loss_augmented_max(realize(model, e.x, l), e.y, rho,
                                        SurrogateMode::additive, cap);
      total += losses::clamp_loss(value, 1.0);
    } else {
      throw TooLarge("multiplicative surrogate needs enumeration below the cap");
    }
  }
  return total / static_cast<double>(sample.size());
}

}  // namespace

double additive_surrogate_loss(const ChainModel& model,
                               const losses::StructuredSample& sample, double rho,
                               std::size_t cap) {
  return chain_surrogate(model, sample, rho, cap, SurrogateMode::additive,
                         losses::additive_surrogate_term);
}

double multiplicative_surrogate_loss(const ChainModel& model,
                                     const losses::StructuredSample& sample,
                                     double rho, std::size_t cap) {
  return chain_surrogate(model, sample, rho, cap, SurrogateMode::multiplicative,
                         losses::multiplicative_surrogate_term);
}

}  // namespace verikit::structured
