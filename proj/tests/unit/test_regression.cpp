#include <algorithm>
#include <bit>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "comets/engines.hpp"

using namespace comets;

namespace {

NumericMatrix column(std::vector<double> v) { return NumericMatrix::column(v); }

NumericMatrix gaussian(std::size_t n, std::size_t p, RngStream& rng) {
  NumericMatrix m(n, p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) m(i, j) = rng.normal();
  return m;
}

// Columns of a Sylvester-Hadamard matrix other than the constant one: centred,
// mutually orthogonal and with unit mean square.
NumericMatrix walsh_design(std::size_t n, std::size_t p) {
  NumericMatrix m(n, p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) m(i, j) = (std::popcount(i & (j + 1)) % 2) ? -1.0 : 1.0;
  return m;
}

std::vector<double> sin_data(std::size_t n, RngStream& rng, NumericMatrix& x) {
  x = NumericMatrix(n, 1);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = rng.uniform(-1, 1);
    y[i] = std::sin(4 * x(i, 0)) + 0.1 * rng.normal();
  }
  return y;
}

}  // namespace

TEST(ConstantEngine, PredictsMean) {
  const std::vector<double> y{1, 2, 3};
  const NumericMatrix none(3, 0);
  const auto model = fit(RegressorSpec::constant(), none, y);
  EXPECT_EQ(model.predict(none), (std::vector<double>{2, 2, 2}));
  EXPECT_EQ(residuals(model, none, y), (std::vector<double>{-1, 0, 1}));
  const auto with_x = fit(RegressorSpec::constant(), column({5, 6, 7}), y);
  EXPECT_EQ(with_x.predict(column({0, 100})), (std::vector<double>{2, 2}));
}

TEST(LinearEngine, ReproducesExactLine) {
  std::vector<double> x, y;
  for (int i = 0; i < 20; ++i) {
    x.push_back(0.3 * i - 2);
    y.push_back(2 * x.back() + 1);
  }
  const auto model = fit(RegressorSpec::ols(), column(x), y);
  const auto pred = model.predict(column(x));
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(pred[i], y[i], 1e-8);
  for (double r : residuals(model, column(x), y)) EXPECT_NEAR(r, 0.0, 1e-8);
}

TEST(LinearEngine, NormalEquationsAndResidualMean) {
  RngStream rng(17);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 30 + rng.below(100), p = 1 + rng.below(6);
    const auto x = gaussian(n, p, rng);
    std::vector<double> y(n);
    for (auto& v : y) v = rng.normal() + 3.0;
    const auto model = fit(RegressorSpec::ols(), x, y);
    const auto r = residuals(model, x, y);
    EXPECT_NEAR(mean(r), 0.0, 1e-10);

    Eigen::MatrixXd design(n, p + 1);
    design.col(0).setOnes();
    design.rightCols(p) = x.eigen();
    const Eigen::VectorXd yy = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
    const Eigen::VectorXd beta = (design.transpose() * design).ldlt().solve(design.transpose() * yy);
    const auto* lin = model.state<LinearPredictor>();
    ASSERT_NE(lin, nullptr);
    EXPECT_NEAR(lin->intercept, beta(0), 1e-8);
    for (std::size_t j = 0; j < p; ++j) EXPECT_NEAR(lin->coefficients(j), beta(j + 1), 1e-8);
  }
}

TEST(LinearEngine, ConstantAndCollinearColumnsAreLegal) {
  RngStream rng(3);
  NumericMatrix x(50, 3);
  std::vector<double> y(50);
  for (std::size_t i = 0; i < 50; ++i) {
    x(i, 0) = rng.normal();
    x(i, 1) = 4.0;
    x(i, 2) = 2 * x(i, 0);
    y[i] = x(i, 0) + 0.1 * rng.normal();
  }
  const auto model = fit(RegressorSpec::ols(), x, y);
  for (double v : model.predict(x)) EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(model.state<LinearPredictor>()->coefficients(1), 0.0, 1e-12);
  const auto ridge = fit(RegressorSpec::ols(0.5), x, y);
  for (double v : ridge.predict(x)) EXPECT_TRUE(std::isfinite(v));
}

TEST(Lasso, OrthonormalDesignMatchesSoftThreshold) {
  RngStream rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t n = 64, p = 6;
    const auto x = walsh_design(n, p);
    const std::vector<double> truth{2.0, -1.0, 0.5, 0.0, 0.0, 0.1};
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = 1.5 + 0.5 * rng.normal();
      for (std::size_t j = 0; j < p; ++j) y[i] += truth[j] * x(i, j);
    }
    const auto model = fit(RegressorSpec::lasso_cv(), x, y, rng.child(rep));
    const auto* lasso = model.state<LassoPredictor>();
    ASSERT_NE(lasso, nullptr);
    const double lambda = lasso->cv.lambda;
    for (std::size_t j = 0; j < p; ++j) {
      double ols = 0.0;
      for (std::size_t i = 0; i < n; ++i) ols += x(i, j) * y[i];
      ols /= static_cast<double>(n);
      const double expected = std::copysign(std::max(std::fabs(ols) - lambda, 0.0), ols);
      EXPECT_NEAR(lasso->coefficients(j), expected, 1e-6) << "rep " << rep << " coef " << j;
    }
  }
}

TEST(Lasso, LambdaMaxZeroesEverything) {
  RngStream rng(6);
  const auto x = gaussian(80, 5, rng);
  std::vector<double> y(80);
  for (std::size_t i = 0; i < 80; ++i) y[i] = x(i, 0) - 2 * x(i, 3) + rng.normal();
  const auto design = lasso::standardize(x.eigen(), Eigen::Map<const Eigen::VectorXd>(y.data(), 80));
  const double lmax = lasso::lambda_max(design);

  double direct = 0.0;
  for (std::size_t j = 0; j < 5; ++j) {
    const auto col = x.col(j);
    const double mx = mean(col), my = mean(y);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < 80; ++i) {
      sxx += (col[i] - mx) * (col[i] - mx);
      sxy += (col[i] - mx) * (y[i] - my);
    }
    direct = std::max(direct, std::fabs(sxy) / std::sqrt(sxx / 80) / 80);
  }
  EXPECT_NEAR(lmax, direct, 1e-12 * direct);

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(5);
  lasso::coordinate_descent(design, lmax, beta, 1e-7, 1000);
  EXPECT_EQ(beta.cwiseAbs().maxCoeff(), 0.0);
  beta.setZero();
  lasso::coordinate_descent(design, lmax * 0.99, beta, 1e-7, 1000);
  EXPECT_GT(beta.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Lasso, ObjectiveNonincreasingAcrossSweeps) {
  RngStream rng(8);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 60, p = 10;
    auto x = gaussian(n, p, rng);
    for (std::size_t i = 0; i < n; ++i) x(i, 1) = x(i, 0) + 0.05 * rng.normal();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = x(i, 0) + 0.5 * x(i, 2) + rng.normal();
    const auto design = lasso::standardize(x.eigen(), Eigen::Map<const Eigen::VectorXd>(y.data(), n));
    const double lambda = lasso::lambda_max(design) * rng.uniform(0.001, 0.5);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    std::vector<double> trace{lasso::objective(design, beta, lambda)};
    const auto stats = lasso::coordinate_descent(design, lambda, beta, 1e-7, 100000, &trace);
    EXPECT_TRUE(stats.converged);
    for (std::size_t k = 1; k < trace.size(); ++k) EXPECT_LE(trace[k], trace[k - 1] + 1e-14);
  }
}

TEST(Lasso, ConstantTargetWarnsAndZeroes) {
  RngStream rng(1);
  const auto x = gaussian(30, 3, rng);
  const std::vector<double> y(30, 4.0);
  const auto model = fit(RegressorSpec::lasso_cv(), x, y, rng);
  const auto* lasso = model.state<LassoPredictor>();
  EXPECT_TRUE(lasso->cv.constant_target);
  EXPECT_EQ(lasso->nonzero(), 0u);
  EXPECT_TRUE(model.description().contains("warning"));
  for (double v : model.predict(x)) EXPECT_EQ(v, 4.0);
}

TEST(Lasso, FoldsValidated) {
  RngStream rng(1);
  const auto x = gaussian(5, 2, rng);
  const std::vector<double> y{1, 2, 3, 4, 5};
  EXPECT_THROW(fit(RegressorSpec::lasso_cv(10), x, y, rng), SpecError);
  EXPECT_THROW(cv_select_lambda(x, y, 1, 10, rng), SpecError);
  EXPECT_NO_THROW(fit(RegressorSpec::lasso_cv(5), x, y, rng));
}

TEST(Lasso, ConstantColumnGetsZeroCoefficient) {
  RngStream rng(12);
  auto x = gaussian(100, 3, rng);
  std::vector<double> y(100);
  for (std::size_t i = 0; i < 100; ++i) {
    x(i, 1) = -7.0;
    y[i] = 3 * x(i, 0) + rng.normal();
  }
  const auto model = fit(RegressorSpec::lasso_cv(), x, y, rng);
  EXPECT_EQ(model.state<LassoPredictor>()->coefficients(1), 0.0);
  EXPECT_NEAR(model.state<LassoPredictor>()->coefficients(0), 3.0, 0.3);
}

TEST(Forest, SingleLeafTreePredictsMean) {
  RngStream rng(2);
  const auto x = gaussian(40, 3, rng);
  std::vector<double> y(40);
  for (auto& v : y) v = rng.normal();
  auto spec = RegressorSpec::random_forest(1);
  spec.forest.min_node_size = 40;
  spec.forest.replace = false;
  const auto model = fit(spec, x, y, rng);
  const auto probe = gaussian(10, 3, rng);
  for (double v : model.predict(probe)) EXPECT_NEAR(v, mean(y), 1e-12);
  EXPECT_EQ(model.state<ForestPredictor>()->trees[0].leaf_count(), 1u);
}

TEST(Forest, PredictionsAreConvexCombinations) {
  RngStream rng(21);
  for (int rep = 0; rep < 10; ++rep) {
    const auto x = gaussian(120, 4, rng);
    std::vector<double> y(120);
    for (std::size_t i = 0; i < 120; ++i) y[i] = std::exp(x(i, 0)) + rng.normal();
    const auto model = fit(RegressorSpec::random_forest(30), x, y, rng.child(rep));
    const auto lo = *std::min_element(y.begin(), y.end()), hi = *std::max_element(y.begin(), y.end());
    auto probe = gaussian(200, 4, rng);
    for (std::size_t i = 0; i < 200; ++i) probe(i, 0) *= 10;
    for (double v : model.predict(probe)) {
      EXPECT_GE(v, lo);
      EXPECT_LE(v, hi);
    }
  }
}

TEST(Forest, BeatsConstantOnSmoothSignal) {
  RngStream rng(99);
  NumericMatrix x;
  const auto y = sin_data(500, rng, x);
  const auto forest = fit(RegressorSpec::random_forest(), x, y, rng.child(0));
  const auto constant = fit(RegressorSpec::constant(), x, y);
  const double ratio = mean_squared(residuals(forest, x, y)) / mean_squared(residuals(constant, x, y));
  EXPECT_LT(ratio, 0.5);
}

TEST(Forest, DeterministicAndThreadIndependent) {
  RngStream rng(7);
  const auto x = gaussian(200, 5, rng);
  std::vector<double> y(200);
  for (std::size_t i = 0; i < 200; ++i) y[i] = x(i, 0) * x(i, 1) + rng.normal();
  const auto probe = gaussian(50, 5, rng);
  std::vector<double> serial, threaded;
  {
    ThreadLimit limit(1);
    serial = fit(RegressorSpec::random_forest(60), x, y, RngStream(3)).predict(probe);
  }
  {
    ThreadLimit limit(4);
    threaded = fit(RegressorSpec::random_forest(60), x, y, RngStream(3)).predict(probe);
  }
  EXPECT_EQ(serial, threaded);
  const auto other = fit(RegressorSpec::random_forest(60), x, y, RngStream(4)).predict(probe);
  EXPECT_NE(serial, other);
}

TEST(Forest, NeverSplitsConstantColumn) {
  RngStream rng(10);
  NumericMatrix x(100, 2);
  std::vector<double> y(100);
  for (std::size_t i = 0; i < 100; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = rng.normal();
    y[i] = x(i, 1) + rng.normal();
  }
  auto spec = RegressorSpec::random_forest(20);
  spec.forest.mtry = 2;
  const auto model = fit(spec, x, y, rng);
  for (const auto& tree : model.state<ForestPredictor>()->trees)
    for (const auto& node : tree.nodes()) EXPECT_NE(node.feature, 0);
}

TEST(Forest, SplitsAtMidpoints) {
  NumericMatrix x = column({0, 1, 2, 3, 10, 11, 12, 13});
  const std::vector<double> y{0, 0, 0, 0, 5, 5, 5, 5};
  auto spec = RegressorSpec::random_forest(1);
  spec.forest.replace = false;
  spec.forest.min_node_size = 4;
  const auto model = fit(spec, x, y, RngStream(0));
  const auto& root = model.state<ForestPredictor>()->trees[0].nodes()[0];
  EXPECT_EQ(root.feature, 0);
  EXPECT_EQ(root.threshold, 6.5);
}

TEST(Engines, DimensionErrors) {
  RngStream rng(1);
  const auto x = gaussian(10, 2, rng);
  std::vector<double> y(9, 1.0);
  for (auto spec : {RegressorSpec::constant(), RegressorSpec::ols(), RegressorSpec::lasso_cv(3),
                    RegressorSpec::random_forest(5)}) {
    EXPECT_THROW(fit(spec, x, y, rng), DimensionError) << to_string(spec.kind);
    y.push_back(1.0);
    const auto model = fit(spec, x, y, rng);
    EXPECT_THROW(model.predict(gaussian(3, 3, rng)), DimensionError);
    EXPECT_THROW(residuals(model, x, std::vector<double>(4, 0.0)), DimensionError);
    y.pop_back();
  }
  EXPECT_THROW(fit(RegressorSpec::ols(), gaussian(1, 1, rng), std::vector<double>{1.0}), DimensionError);
}

TEST(Engines, EveryEngineIsDeterministic) {
  RngStream rng(13);
  const auto x = gaussian(100, 3, rng);
  std::vector<double> y(100);
  for (std::size_t i = 0; i < 100; ++i) y[i] = x(i, 0) + rng.normal();
  for (auto spec : {RegressorSpec::constant(), RegressorSpec::ols(), RegressorSpec::lasso_cv(),
                    RegressorSpec::random_forest(25)}) {
    const auto a = fit(spec, x, y, RngStream(5, 2)).predict(x);
    const auto b = fit(spec, x, y, RngStream(5, 2)).predict(x);
    EXPECT_EQ(a, b) << to_string(spec.kind);
    for (double v : a) EXPECT_TRUE(std::isfinite(v));
  }
}

TEST(Engines, ZeroFeatureInputFallsBackToMean) {
  const NumericMatrix none(4, 0);
  const std::vector<double> y{1, 2, 3, 6};
  for (auto spec : {RegressorSpec::ols(), RegressorSpec::lasso_cv(2), RegressorSpec::random_forest(5)})
    EXPECT_EQ(fit(spec, none, y).predict(none), (std::vector<double>(4, 3.0)));
}

TEST(RegressorSpecJson, RoundTrip) {
  auto rf = RegressorSpec::random_forest(200);
  rf.forest.mtry = 2;
  rf.forest.min_node_size = 3;
  rf.seed = 42;
  for (const auto& spec : {RegressorSpec::constant(), RegressorSpec::ols(0.25), RegressorSpec::lasso_cv(5, 50), rf}) {
    const auto j = to_json(spec);
    EXPECT_EQ(to_json(regressor_spec_from_json(j)), j) << j.dump();
  }
  const auto parsed = regressor_spec_from_string(R"({"kind":"random_forest","params":{"num_trees":7},"seed":3})");
  EXPECT_EQ(parsed.forest.num_trees, 7u);
  EXPECT_EQ(parsed.seed, 3u);
  EXPECT_EQ(regressor_spec_from_string("linear").kind, EngineKind::linear);
}

TEST(RegressorSpecJson, Rejections) {
  EXPECT_THROW(regressor_spec_from_string(R"({"kind":"boosting"})"), SpecError);
  EXPECT_THROW(regressor_spec_from_string(R"({"kind":"linear","params":{"ridge":-1}})"), SpecError);
  EXPECT_THROW(regressor_spec_from_string(R"({"kind":"linear","params":{"trees":3}})"), SpecError);
  EXPECT_THROW(regressor_spec_from_string(R"({"kind":"random_forest","params":{"num_trees":0}})"), SpecError);
  EXPECT_THROW(regressor_spec_from_string(R"({"kind":"lasso_cv","params":{"folds":1}})"), SpecError);
  EXPECT_THROW(regressor_spec_from_string(R"({"kind":"lasso_cv","extra":1})"), SpecError);
  EXPECT_THROW(regressor_spec_from_string(R"({"kind":"random_forest","params":{"num_trees":"many"}})"), SpecError);
  EXPECT_THROW(regressor_spec_from_string("{not json"), SpecError);
}
