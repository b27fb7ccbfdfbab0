#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "comets/error.hpp"
#include "comets/matrix.hpp"
#include "comets/rng.hpp"

namespace comets {

// Fitted state of a regression engine.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::vector<double> predict(const NumericMatrix& features) const = 0;
};

// Immutable fitted regression: a predictor plus the training shape it expects.
class FittedModel {
 public:
  FittedModel(std::shared_ptr<const Predictor> impl, std::size_t n_train, std::size_t n_features,
              nlohmann::json description = {})
      : impl_(std::move(impl)), n_train_(n_train), n_features_(n_features), description_(std::move(description)) {}

  std::vector<double> predict(const NumericMatrix& features) const {
    if (features.cols() != n_features_) {
      throw DimensionError("predict: model trained on " + std::to_string(n_features_) + " features, got " +
                           std::to_string(features.cols()));
    }
    auto out = impl_->predict(features);
    if (out.size() != features.rows()) throw DimensionError("predict: engine returned the wrong number of values");
    return out;
  }

  std::size_t n_train() const { return n_train_; }
  std::size_t n_features() const { return n_features_; }
  const nlohmann::json& description() const { return description_; }

  // Engine-specific state, e.g. model.state<LassoPredictor>()->coefficients.
  template <typename T>
  const T* state() const {
    return dynamic_cast<const T*>(impl_.get());
  }

 private:
  std::shared_ptr<const Predictor> impl_;
  std::size_t n_train_;
  std::size_t n_features_;
  nlohmann::json description_;
};

// A supervised learner. Implementations must be deterministic given the
// RngStream and must not mutate shared state in fit.
class Regressor {
 public:
  virtual ~Regressor() = default;
  virtual FittedModel fit(const NumericMatrix& features, std::span<const double> target, RngStream rng) const = 0;
  virtual nlohmann::json describe() const = 0;
};

using Engine = std::shared_ptr<const Regressor>;

inline std::vector<double> residuals(const FittedModel& model, const NumericMatrix& features,
                                     std::span<const double> target) {
  if (target.size() != features.rows()) throw DimensionError("residuals: target length does not match rows");
  auto r = model.predict(features);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = target[i] - r[i];
  return r;
}

inline void check_training_shape(const NumericMatrix& features, std::span<const double> target) {
  if (features.rows() != target.size()) {
    throw DimensionError("fit: " + std::to_string(features.rows()) + " feature rows but " +
                         std::to_string(target.size()) + " targets");
  }
  if (target.size() < 2) throw DimensionError("fit: need at least 2 observations");
  require_finite(target, "fit target");
}

// ---------------------------------------------------------------------------
// Built-in engine specifications.

enum class EngineKind { constant, linear, lasso_cv, random_forest };

inline std::string to_string(EngineKind k) {
  switch (k) {
    case EngineKind::constant: return "constant";
    case EngineKind::linear: return "linear";
    case EngineKind::lasso_cv: return "lasso_cv";
    case EngineKind::random_forest: return "random_forest";
  }
  return "unknown";
}

inline EngineKind engine_kind_from_string(const std::string& s) {
  if (s == "constant") return EngineKind::constant;
  if (s == "linear") return EngineKind::linear;
  if (s == "lasso_cv") return EngineKind::lasso_cv;
  if (s == "random_forest") return EngineKind::random_forest;
  throw SpecError("unknown engine kind '" + s + "' (expected constant, linear, lasso_cv or random_forest)");
}

struct LinearParams {
  double ridge = 0.0;
};

struct LassoParams {
  std::size_t folds = 10;
  std::size_t grid_size = 100;
  double tol = 1e-7;            // max coefficient change at convergence
  std::size_t max_sweeps = 100000;
};

struct ForestParams {
  std::size_t num_trees = 500;
  std::optional<std::size_t> mtry;  // default max(1, floor(p / 3))
  std::size_t min_node_size = 5;    // nodes of this size or smaller are leaves
  std::size_t max_depth = 0;        // 0 = unlimited
  bool replace = true;              // bootstrap with replacement
  double sample_fraction = 1.0;

  std::size_t mtry_for(std::size_t p) const {
    if (p == 0) return 0;
    const std::size_t m = mtry ? *mtry : std::max<std::size_t>(1, p / 3);
    return std::min(std::max<std::size_t>(m, 1), p);
  }
};

struct RegressorSpec {
  EngineKind kind = EngineKind::random_forest;
  LinearParams linear;
  LassoParams lasso;
  ForestParams forest;
  // When set, replaces the seed of the stream handed to fit; the stream id is kept.
  std::optional<std::uint64_t> seed;

  static RegressorSpec constant() { return {EngineKind::constant}; }
  static RegressorSpec ols(double ridge = 0.0) {
    RegressorSpec s{EngineKind::linear};
    s.linear.ridge = ridge;
    return s;
  }
  static RegressorSpec lasso_cv(std::size_t folds = 10, std::size_t grid_size = 100) {
    RegressorSpec s{EngineKind::lasso_cv};
    s.lasso.folds = folds;
    s.lasso.grid_size = grid_size;
    return s;
  }
  static RegressorSpec random_forest(std::size_t num_trees = 500) {
    RegressorSpec s{EngineKind::random_forest};
    s.forest.num_trees = num_trees;
    return s;
  }
};

inline void validate(const RegressorSpec& spec) {
  switch (spec.kind) {
    case EngineKind::constant: break;
    case EngineKind::linear:
      if (!(spec.linear.ridge >= 0.0) || !std::isfinite(spec.linear.ridge))
        throw SpecError("linear: ridge must be a finite value >= 0");
      break;
    case EngineKind::lasso_cv:
      if (spec.lasso.folds < 2) throw SpecError("lasso_cv: folds must be >= 2");
      if (spec.lasso.grid_size < 2) throw SpecError("lasso_cv: grid_size must be >= 2");
      if (!(spec.lasso.tol > 0.0)) throw SpecError("lasso_cv: tol must be > 0");
      if (spec.lasso.max_sweeps < 1) throw SpecError("lasso_cv: max_sweeps must be >= 1");
      break;
    case EngineKind::random_forest:
      if (spec.forest.num_trees < 1) throw SpecError("random_forest: num_trees must be >= 1");
      if (spec.forest.min_node_size < 1) throw SpecError("random_forest: min_node_size must be >= 1");
      if (spec.forest.mtry && *spec.forest.mtry < 1) throw SpecError("random_forest: mtry must be >= 1");
      if (!(spec.forest.sample_fraction > 0.0 && spec.forest.sample_fraction <= 1.0))
        throw SpecError("random_forest: sample_fraction must lie in (0, 1]");
      break;
  }
}

// {"kind": ..., "params": {...}, "seed": ...}
inline nlohmann::json to_json(const RegressorSpec& spec) {
  nlohmann::json params = nlohmann::json::object();
  switch (spec.kind) {
    case EngineKind::constant: break;
    case EngineKind::linear: params["ridge"] = spec.linear.ridge; break;
    case EngineKind::lasso_cv:
      params["folds"] = spec.lasso.folds;
      params["grid_size"] = spec.lasso.grid_size;
      params["tol"] = spec.lasso.tol;
      params["max_sweeps"] = spec.lasso.max_sweeps;
      break;
    case EngineKind::random_forest:
      params["num_trees"] = spec.forest.num_trees;
      if (spec.forest.mtry) params["mtry"] = *spec.forest.mtry;
      params["min_node_size"] = spec.forest.min_node_size;
      params["max_depth"] = spec.forest.max_depth;
      params["replace"] = spec.forest.replace;
      params["sample_fraction"] = spec.forest.sample_fraction;
      break;
  }
  nlohmann::json j = {{"kind", to_string(spec.kind)}, {"params", params}};
  if (spec.seed) j["seed"] = *spec.seed;
  return j;
}

namespace detail {

template <typename T>
T read_param(const nlohmann::json& value, const std::string& key) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!value.is_boolean()) throw SpecError("");
      return value.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!value.is_number_integer() || value.get<long long>() < 0) throw SpecError("");
      return value.get<T>();
    } else {
      if (!value.is_number()) throw SpecError("");
      return value.get<T>();
    }
  } catch (const std::exception&) {
    throw SpecError("engine parameter '" + key + "' has the wrong type: " + value.dump());
  }
}

}  // namespace detail

inline RegressorSpec regressor_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SpecError("engine spec must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "kind" && key != "params" && key != "seed") throw SpecError("engine spec: unknown key '" + key + "'");
  }
  if (!j.contains("kind") || !j["kind"].is_string()) throw SpecError("engine spec: missing string field 'kind'");
  RegressorSpec spec;
  spec.kind = engine_kind_from_string(j["kind"].get<std::string>());
  if (j.contains("seed")) spec.seed = detail::read_param<std::uint64_t>(j["seed"], "seed");

  const nlohmann::json params = j.value("params", nlohmann::json::object());
  if (!params.is_object()) throw SpecError("engine spec: 'params' must be an object");
  for (const auto& [key, value] : params.items()) {
    bool known = true;
    switch (spec.kind) {
      case EngineKind::constant: known = false; break;
      case EngineKind::linear:
        if (key == "ridge") spec.linear.ridge = detail::read_param<double>(value, key);
        else known = false;
        break;
      case EngineKind::lasso_cv:
        if (key == "folds") spec.lasso.folds = detail::read_param<std::size_t>(value, key);
        else if (key == "grid_size") spec.lasso.grid_size = detail::read_param<std::size_t>(value, key);
        else if (key == "tol") spec.lasso.tol = detail::read_param<double>(value, key);
        else if (key == "max_sweeps") spec.lasso.max_sweeps = detail::read_param<std::size_t>(value, key);
        else known = false;
        break;
      case EngineKind::random_forest:
        if (key == "num_trees") spec.forest.num_trees = detail::read_param<std::size_t>(value, key);
        else if (key == "mtry") spec.forest.mtry = detail::read_param<std::size_t>(value, key);
        else if (key == "min_node_size") spec.forest.min_node_size = detail::read_param<std::size_t>(value, key);
        else if (key == "max_depth") spec.forest.max_depth = detail::read_param<std::size_t>(value, key);
        else if (key == "replace") spec.forest.replace = detail::read_param<bool>(value, key);
        else if (key == "sample_fraction") spec.forest.sample_fraction = detail::read_param<double>(value, key);
        else known = false;
        break;
    }
    if (!known) throw SpecError("engine '" + to_string(spec.kind) + "': unknown parameter '" + key + "'");
  }
  validate(spec);
  return spec;
}

// Accepts a JSON object or a bare kind name such as "linear".
inline RegressorSpec regressor_spec_from_string(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] != '{') {
    const auto last = text.find_last_not_of(" \t\r\n");
    return regressor_spec_from_json({{"kind", text.substr(first, last - first + 1)}});
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SpecError(std::string("engine spec is not valid JSON: ") + e.what());
  }
  return regressor_spec_from_json(j);
}

}  // namespace comets
