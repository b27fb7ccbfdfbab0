#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "comets/distributions.hpp"
#include "comets/engines.hpp"
#include "comets/linalg.hpp"
#include "comets/matrix.hpp"
#include "comets/parallel.hpp"
#include "comets/regression.hpp"

namespace comets {

struct GcmResult {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> L;           // mean residual products, one per X column
  Eigen::MatrixXd sigma;           // covariance of the residual products
  double statistic = 0.0;
  std::size_t df = 0;              // rank of sigma
  double p_value = 1.0;
  std::vector<double> residual_correlations;

  // Filled by gcm_test.
  double mse_yz = 0.0;
  std::vector<double> mse_xz;
  std::size_t regression_count = 0;
  nlohmann::json engines = nlohmann::json::object();
};

// Residual-product statistic from residuals eps (Y on Z) and the n x d
// residual matrix xi (X_j on Z). Singular covariance is handled by a
// pseudo-inverse, with the degrees of freedom set to its rank.
inline GcmResult gcm_statistic(std::span<const double> eps, const NumericMatrix& xi,
                               double rel_tol = kDefaultRankTolerance) {
  const std::size_t n = eps.size();
  const std::size_t d = xi.cols();
  if (xi.rows() != n) throw DimensionError("gcm: eps and xi differ in length");
  if (n < 2) throw DimensionError("gcm: need at least 2 observations");
  if (d == 0) throw DimensionError("gcm: xi has no columns");
  require_finite(eps, "gcm eps");
  xi.check_finite();

  const auto dn = static_cast<double>(n);
  const auto di = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd products(static_cast<Eigen::Index>(n), di);
  double second_moment = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double r = eps[i] * xi(i, j);
      products(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r;
      second_moment += r * r;
    }
  }
  second_moment /= dn;

  GcmResult out;
  out.n = n;
  out.d = d;
  const Eigen::VectorXd L = products.colwise().mean().transpose();
  const Eigen::MatrixXd centred = products.rowwise() - L.transpose();
  out.sigma = centred.transpose() * centred / dn;
  out.L.assign(L.data(), L.data() + d);

  const double top = out.sigma.diagonal().maxCoeff();
  if (!(second_moment > 0.0) || !(top > 1e-12 * second_moment)) {
    throw DegenerateResiduals(
        "gcm: residual products have zero variance in every direction; use a richer regression or check for "
        "constant residuals");
  }
  const auto root = sym_pinv_sqrt(out.sigma, rel_tol);
  out.df = root.rank;
  out.statistic = dn * (root.matrix * L).squaredNorm();
  out.p_value = chi2_sf(out.statistic, out.df);

  out.residual_correlations.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    const auto col = xi.col(j);
    out.residual_correlations[j] = correlation(eps, col);
  }
  return out;
}

// Generalised covariance measure test of E[eps * xi] = 0, with Y on Z and
// each X_j on Z fitted by the given engines. Regression j (0 = Y, j = X_j)
// draws from rng.child(j).
inline GcmResult gcm_test(std::span<const double> y, const NumericMatrix& X, const NumericMatrix& Z,
                          const Engine& reg_yz, const Engine& reg_xz, RngStream rng) {
  const std::size_t n = y.size();
  const std::size_t d = X.cols();
  if (X.rows() != n || Z.rows() != n) throw DimensionError("gcm_test: y, X and Z differ in row count");
  if (n < 10) throw DimensionError("gcm_test: need at least 10 observations");
  if (d < 1) throw DimensionError("gcm_test: X has no columns");

  std::vector<std::vector<double>> resid(d + 1);
  std::vector<double> mse(d + 1);
  parallel_for(d + 1, [&](std::size_t j) {
    const std::vector<double> target = j == 0 ? std::vector<double>(y.begin(), y.end()) : X.col(j - 1);
    const auto& engine = j == 0 ? reg_yz : reg_xz;
    const auto model = engine->fit(Z, target, rng.child(j));
    resid[j] = residuals(model, Z, target);
    mse[j] = mean_squared(resid[j]);
  });

  NumericMatrix xi(n, d);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t i = 0; i < n; ++i) xi(i, j) = resid[j + 1][i];

  GcmResult out = gcm_statistic(resid[0], xi);
  out.mse_yz = mse[0];
  out.mse_xz.assign(mse.begin() + 1, mse.end());
  out.regression_count = d + 1;
  out.engines = {{"yz", reg_yz->describe()}, {"xz", reg_xz->describe()}};
  return out;
}

inline GcmResult gcm_test(std::span<const double> y, const NumericMatrix& X, const NumericMatrix& Z,
                          const RegressorSpec& reg_yz, const RegressorSpec& reg_xz, RngStream rng) {
  return gcm_test(y, X, Z, make_engine(reg_yz), make_engine(reg_xz), rng);
}

}  // namespace comets
