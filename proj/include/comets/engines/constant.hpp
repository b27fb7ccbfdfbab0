#pragma once

#include <memory>
#include <span>
#include <vector>

#include "comets/regression.hpp"

namespace comets {

class ConstantPredictor : public Predictor {
 public:
  explicit ConstantPredictor(double value) : value(value) {}
  std::vector<double> predict(const NumericMatrix& features) const override {
    return std::vector<double>(features.rows(), value);
  }
  double value;
};

inline FittedModel fit_constant(const NumericMatrix& features, std::span<const double> target) {
  check_training_shape(features, target);
  return FittedModel(std::make_shared<ConstantPredictor>(mean(target)), target.size(), features.cols(),
                     {{"kind", "constant"}});
}

}  // namespace comets
