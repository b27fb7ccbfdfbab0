#pragma once

#include <memory>
#include <span>

#include "comets/engines/constant.hpp"
#include "comets/engines/forest.hpp"
#include "comets/engines/lasso.hpp"
#include "comets/engines/linear.hpp"
#include "comets/regression.hpp"

namespace comets {

// Fits a built-in engine. Zero feature columns always yields the constant
// model: regressing on an empty block means estimating the mean.
inline FittedModel fit(const RegressorSpec& spec, const NumericMatrix& features, std::span<const double> target,
                       RngStream rng) {
  validate(spec);
  if (spec.seed) rng = RngStream(*spec.seed, rng.stream_id());
  if (features.cols() == 0) return fit_constant(features, target);
  switch (spec.kind) {
    case EngineKind::constant: return fit_constant(features, target);
    case EngineKind::linear: return fit_linear(features, target, spec.linear.ridge);
    case EngineKind::lasso_cv: return fit_lasso_cv(features, target, spec.lasso, rng);
    case EngineKind::random_forest: return fit_random_forest(features, target, spec.forest, rng);
  }
  throw SpecError("unhandled engine kind");
}

inline FittedModel fit(const RegressorSpec& spec, const NumericMatrix& features, std::span<const double> target) {
  return fit(spec, features, target, RngStream(spec.seed.value_or(0)));
}

class SpecRegressor : public Regressor {
 public:
  explicit SpecRegressor(RegressorSpec spec) : spec_(std::move(spec)) { validate(spec_); }

  FittedModel fit(const NumericMatrix& features, std::span<const double> target, RngStream rng) const override {
    return comets::fit(spec_, features, target, rng);
  }
  nlohmann::json describe() const override { return to_json(spec_); }
  const RegressorSpec& spec() const { return spec_; }

 private:
  RegressorSpec spec_;
};

inline Engine make_engine(const RegressorSpec& spec) { return std::make_shared<SpecRegressor>(spec); }

}  // namespace comets
