#pragma once

#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "comets/regression.hpp"

namespace comets {

class LinearPredictor : public Predictor {
 public:
  LinearPredictor(double intercept, Eigen::VectorXd coefficients)
      : intercept(intercept), coefficients(std::move(coefficients)) {}

  std::vector<double> predict(const NumericMatrix& features) const override {
    std::vector<double> out(features.rows(), intercept);
    for (std::size_t i = 0; i < features.rows(); ++i) {
      const auto row = features.row(i);
      double s = intercept;
      for (std::size_t j = 0; j < row.size(); ++j) s += coefficients(static_cast<Eigen::Index>(j)) * row[j];
      out[i] = s;
    }
    return out;
  }

  double intercept;
  Eigen::VectorXd coefficients;
};

// Least squares with an unpenalised intercept and optional ridge penalty.
// With ridge = 0 the minimum-norm solution is returned, so constant or
// collinear columns are legal.
inline FittedModel fit_linear(const NumericMatrix& features, std::span<const double> target, double ridge) {
  check_training_shape(features, target);
  const auto n = static_cast<Eigen::Index>(features.rows());
  const auto p = static_cast<Eigen::Index>(features.cols());
  const Eigen::MatrixXd x = features.eigen();
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(target.data(), n);

  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  if (p > 0) {
    if (ridge == 0.0) {
      beta = xc.completeOrthogonalDecomposition().solve(yc);
    } else {
      Eigen::MatrixXd gram = xc.transpose() * xc;
      gram.diagonal().array() += ridge;
      beta = gram.ldlt().solve(xc.transpose() * yc);
    }
  }
  const double intercept = y_mean - x_mean.dot(beta);
  return FittedModel(std::make_shared<LinearPredictor>(intercept, beta), target.size(), features.cols(),
                     {{"kind", "linear"}, {"ridge", ridge}});
}

}  // namespace comets
