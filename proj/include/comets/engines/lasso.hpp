#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "comets/engines/linear.hpp"
#include "comets/parallel.hpp"
#include "comets/regression.hpp"
#include "comets/rng.hpp"

namespace comets {

namespace lasso {

// Columns centred and scaled to unit (1/n) variance; constant columns have
// scale 0 and stay at zero coefficient. Target centred.
struct StandardizedDesign {
  Eigen::MatrixXd x;
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
  Eigen::VectorXd y;
  double y_mean = 0.0;
};

inline StandardizedDesign standardize(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  StandardizedDesign d;
  const double n = static_cast<double>(x.rows());
  d.mean = x.colwise().mean().transpose();
  d.x = x.rowwise() - d.mean.transpose();
  d.scale.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double sd = std::sqrt(d.x.col(j).squaredNorm() / n);
    const double range = x.col(j).maxCoeff() - x.col(j).minCoeff();
    if (range == 0.0 || sd <= 0.0) {
      d.scale(j) = 0.0;
      d.x.col(j).setZero();
    } else {
      d.scale(j) = sd;
      d.x.col(j) /= sd;
    }
  }
  d.y_mean = y.mean();
  d.y = y.array() - d.y_mean;
  return d;
}

inline double soft_threshold(double z, double lambda) {
  if (z > lambda) return z - lambda;
  if (z < -lambda) return z + lambda;
  return 0.0;
}

// (1/2n) ||y - X beta||^2 + lambda ||beta||_1 on the standardised scale.
inline double objective(const StandardizedDesign& d, const Eigen::VectorXd& beta, double lambda) {
  const double n = static_cast<double>(d.x.rows());
  return (d.y - d.x * beta).squaredNorm() / (2.0 * n) + lambda * beta.lpNorm<1>();
}

// Smallest penalty at which every coefficient is zero.
inline double lambda_max(const StandardizedDesign& d) {
  if (d.x.cols() == 0) return 0.0;
  return (d.x.transpose() * d.y).cwiseAbs().maxCoeff() / static_cast<double>(d.x.rows());
}

struct DescentStats {
  std::size_t sweeps = 0;
  bool converged = false;
};

// Cyclic coordinate descent from the warm start in `beta`. Stops when the
// largest coefficient change in a sweep is below `tol`. If `trace` is given,
// the objective after every sweep is appended.
inline DescentStats coordinate_descent(const StandardizedDesign& d, double lambda, Eigen::VectorXd& beta, double tol,
                                       std::size_t max_sweeps, std::vector<double>* trace = nullptr) {
  const double n = static_cast<double>(d.x.rows());
  Eigen::VectorXd r = d.y - d.x * beta;
  DescentStats stats;
  while (stats.sweeps < max_sweeps) {
    ++stats.sweeps;
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < d.x.cols(); ++j) {
      if (d.scale(j) == 0.0) {
        beta(j) = 0.0;
        continue;
      }
      const double old = beta(j);
      const double updated = soft_threshold(old + d.x.col(j).dot(r) / n, lambda);
      if (updated != old) {
        r -= (updated - old) * d.x.col(j);
        beta(j) = updated;
        max_change = std::max(max_change, std::fabs(updated - old));
      }
    }
    if (trace) trace->push_back(objective(d, beta, lambda));
    if (max_change < tol) {
      stats.converged = true;
      break;
    }
  }
  return stats;
}

// Log-spaced grid from lambda_max down to 1e-4 * lambda_max.
inline std::vector<double> lambda_grid(double lambda_max, std::size_t size) {
  std::vector<double> grid(size);
  for (std::size_t k = 0; k < size; ++k) {
    grid[k] = lambda_max * std::pow(1e-4, static_cast<double>(k) / static_cast<double>(size - 1));
  }
  return grid;
}

}  // namespace lasso

struct LassoCv {
  double lambda = 0.0;
  double lambda_max = 0.0;
  std::vector<double> grid;
  std::vector<double> cv_error;  // mean out-of-fold squared error per grid point
  bool constant_target = false;
};

// K-fold cross-validated choice of the LASSO penalty (standardised scale).
inline LassoCv cv_select_lambda(const NumericMatrix& features, std::span<const double> target, std::size_t folds,
                                std::size_t grid_size, RngStream rng, const LassoParams& params = {}) {
  check_training_shape(features, target);
  const std::size_t n = target.size();
  if (folds < 2 || folds > n) {
    throw SpecError("lasso_cv: folds must lie in [2, n]; got " + std::to_string(folds) + " folds for n = " +
                    std::to_string(n));
  }
  if (grid_size < 2) throw SpecError("lasso_cv: grid_size must be >= 2");

  const Eigen::MatrixXd x = features.eigen();
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(target.data(), static_cast<Eigen::Index>(n));
  const auto full = lasso::standardize(x, y);

  LassoCv out;
  out.lambda_max = lasso::lambda_max(full);
  if (!(out.lambda_max > 0.0)) {
    out.constant_target = true;
    out.lambda = out.lambda_max;
    out.grid = {out.lambda_max};
    out.cv_error = {(full.y).squaredNorm() / static_cast<double>(n)};
    return out;
  }
  out.grid = lasso::lambda_grid(out.lambda_max, grid_size);

  std::vector<std::size_t> fold_of(n);
  const auto perm = rng.permutation(n);
  for (std::size_t i = 0; i < n; ++i) fold_of[perm[i]] = i % folds;

  std::vector<std::vector<double>> fold_sse(folds, std::vector<double>(grid_size, 0.0));
  parallel_for(folds, [&](std::size_t f) {
    std::vector<Eigen::Index> train, test;
    for (std::size_t i = 0; i < n; ++i) (fold_of[i] == f ? test : train).push_back(static_cast<Eigen::Index>(i));
    const Eigen::MatrixXd xt = x(train, Eigen::all);
    const Eigen::VectorXd yt = y(train);
    const auto design = lasso::standardize(xt, yt);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());
    for (std::size_t k = 0; k < grid_size; ++k) {
      lasso::coordinate_descent(design, out.grid[k], beta, params.tol, params.max_sweeps);
      double sse = 0.0;
      for (auto i : test) {
        double pred = design.y_mean;
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
          if (design.scale(j) != 0.0) pred += beta(j) * (x(i, j) - design.mean(j)) / design.scale(j);
        }
        sse += (y(i) - pred) * (y(i) - pred);
      }
      fold_sse[f][k] = sse;
    }
  });

  out.cv_error.assign(grid_size, 0.0);
  for (std::size_t k = 0; k < grid_size; ++k) {
    for (std::size_t f = 0; f < folds; ++f) out.cv_error[k] += fold_sse[f][k];
    out.cv_error[k] /= static_cast<double>(n);
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < grid_size; ++k)
    if (out.cv_error[k] < out.cv_error[best]) best = k;
  out.lambda = out.grid[best];
  return out;
}

class LassoPredictor : public LinearPredictor {
 public:
  LassoPredictor(double intercept, Eigen::VectorXd coefficients, LassoCv cv)
      : LinearPredictor(intercept, std::move(coefficients)), cv(std::move(cv)) {}
  LassoCv cv;

  std::size_t nonzero() const {
    std::size_t k = 0;
    for (Eigen::Index j = 0; j < coefficients.size(); ++j) k += coefficients(j) != 0.0;
    return k;
  }
};

// Cross-validated LASSO; the final model is refit on all rows along the
// penalty path down to the selected lambda. Coefficients on the original scale.
inline FittedModel fit_lasso_cv(const NumericMatrix& features, std::span<const double> target,
                                const LassoParams& params, RngStream rng) {
  auto cv = cv_select_lambda(features, target, params.folds, params.grid_size, rng, params);
  const Eigen::MatrixXd x = features.eigen();
  const Eigen::VectorXd y =
      Eigen::Map<const Eigen::VectorXd>(target.data(), static_cast<Eigen::Index>(target.size()));
  const auto design = lasso::standardize(x, y);

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());
  if (!cv.constant_target) {
    for (double lambda : cv.grid) {
      if (lambda < cv.lambda) break;
      lasso::coordinate_descent(design, lambda, beta, params.tol, params.max_sweeps);
    }
  }
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(x.cols());
  double intercept = design.y_mean;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (design.scale(j) == 0.0) continue;
    coef(j) = beta(j) / design.scale(j);
    intercept -= coef(j) * design.mean(j);
  }
  nlohmann::json desc = {{"kind", "lasso_cv"}, {"lambda", cv.lambda}, {"lambda_max", cv.lambda_max}};
  if (cv.constant_target) desc["warning"] = "constant target: all coefficients zero";
  return FittedModel(std::make_shared<LassoPredictor>(intercept, std::move(coef), std::move(cv)), target.size(),
                     features.cols(), std::move(desc));
}

}  // namespace comets
