#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "comets/simharness.hpp"

using namespace comets;

namespace {

DgpSpec dgp(const std::string& name, std::size_t n, std::size_t d_x = 1, std::size_t d_z = 1) {
  DgpSpec s;
  s.name = name;
  s.n = n;
  s.d_x = d_x;
  s.d_z = d_z;
  return s;
}

}  // namespace

TEST(Catalog, NamesAreStable) {
  EXPECT_EQ(dgp_catalog(), (std::vector<std::string>{"linear-gaussian-null", "partially-linear", "nonlinear-null",
                                                      "quadratic-null-for-gcm", "sine-cubic-product", "sweep-planted",
                                                      "two-modality"}));
  EXPECT_THROW(generate(dgp("no-such-process", 10)), SpecError);
  auto bad = dgp("sine-cubic-product", 10);
  bad.noise = -1.0;
  EXPECT_THROW(generate(bad), SpecError);
}

TEST(Catalog, NullLabels) {
  EXPECT_TRUE(satisfies_null(dgp("linear-gaussian-null", 10)));
  EXPECT_TRUE(satisfies_null(dgp("nonlinear-null", 10)));
  EXPECT_FALSE(satisfies_null(dgp("sine-cubic-product", 10)));
  EXPECT_FALSE(satisfies_null(dgp("quadratic-null-for-gcm", 10)));
  EXPECT_FALSE(satisfies_null(dgp("two-modality", 10)));
  auto pl = dgp("partially-linear", 10);
  EXPECT_FALSE(satisfies_null(pl));
  pl.theta = 0.0;
  EXPECT_TRUE(satisfies_null(pl));
}

TEST(Generate, ShapesFiniteAndDeterministic) {
  for (const auto& name : dgp_catalog()) {
    const auto spec = dgp(name, 57, 3, 2);
    const auto a = generate(spec, RngStream(1));
    const auto b = generate(spec, RngStream(1));
    const auto c = generate(spec, RngStream(2));
    EXPECT_EQ(a.y, b.y) << name;
    EXPECT_EQ(a.X, b.X) << name;
    EXPECT_NE(a.y, c.y) << name;
    EXPECT_EQ(a.y.size(), 57u);
    EXPECT_EQ(a.X.rows(), 57u);
    EXPECT_EQ(a.X.cols(), 3u);
    EXPECT_EQ(a.Z.cols(), name == "sweep-planted" ? 0u : 2u);
    for (double v : a.y) EXPECT_TRUE(std::isfinite(v));
    const auto ds = to_dataset(a);
    EXPECT_EQ(ds.names().front(), "y");
    EXPECT_TRUE(ds.has("x3"));
  }
}

TEST(Generate, ZeroNoiseIsExactFunction) {
  for (const auto& name : dgp_catalog()) {
    auto spec = dgp(name, 200, 2, 3);
    spec.noise = 0.0;
    spec.theta = 0.7;
    const auto d = generate(spec, RngStream(3));
    for (std::size_t i = 0; i < spec.n; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < d.Z.cols(); ++k) s += d.Z(i, k);
      s /= std::sqrt(static_cast<double>(std::max<std::size_t>(d.Z.cols(), 1)));
      const double x = d.X(i, 0);
      double expected = 0.0;
      if (name == "linear-gaussian-null") expected = 0.8 * s;
      if (name == "partially-linear") expected = 0.7 * x + std::sin(s);
      if (name == "nonlinear-null") expected = 2 * std::exp(-s * s) + s;
      if (name == "quadratic-null-for-gcm") expected = x * x;
      if (name == "sine-cubic-product") expected = (1 + std::sin(3 * x * x)) * (1 + std::pow(d.Z(i, 0), 3));
      if (name == "sweep-planted") expected = 0.7 * x;
      if (name == "two-modality") expected = x + std::sin(2 * d.X(i, 1));
      EXPECT_NEAR(d.y[i], expected, 1e-12) << name << " row " << i;
    }
  }
}

TEST(Generate, SineCubicProductDesign) {
  const auto d = generate(dgp("sine-cubic-product", 5000), RngStream(4));
  double resid_sq = 0.0;
  for (std::size_t i = 0; i < 5000; ++i) {
    EXPECT_GE(d.X(i, 0), -1.0);
    EXPECT_LT(d.X(i, 0), 1.0);
    EXPECT_GE(d.Z(i, 0), -1.0);
    EXPECT_LT(d.Z(i, 0), 1.0);
    const double f = 1 + std::sin(3 * d.X(i, 0) * d.X(i, 0));
    const double g = 1 + std::pow(d.Z(i, 0), 3);
    resid_sq += std::pow(d.y[i] - f * g, 2);
  }
  EXPECT_NEAR(std::sqrt(resid_sq / 5000), 0.25, 0.01);
}

TEST(Generate, TwoModalityDuplicatesSignal) {
  const auto d = generate(dgp("two-modality", 50, 1, 4), RngStream(5));
  EXPECT_EQ(d.X.cols(), 3u);
  EXPECT_EQ(d.Z.cols(), 4u);
  EXPECT_EQ(d.X.col(0), d.X.col(2));
}

TEST(Generate, QuadraticHasZeroResidualCovariance) {
  const auto d = generate(dgp("quadratic-null-for-gcm", 100000), RngStream(6));
  const double ybar = mean(d.y);
  std::vector<double> prod(d.y.size());
  for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = (d.y[i] - ybar) * d.X(i, 0);
  const double m = mean(prod);
  double var = 0.0;
  for (double p : prod) var += (p - m) * (p - m);
  const double se = std::sqrt(var / static_cast<double>(prod.size())) / std::sqrt(static_cast<double>(prod.size()));
  EXPECT_LT(std::fabs(m), 3 * se) << "mean " << m << " se " << se;
}

TEST(Experiment, AlphaOneRejectsEverything) {
  ExperimentConfig c{dgp("linear-gaussian-null", 60), TestConfig::gcm(RegressorSpec::ols(), RegressorSpec::ols()),
                     25, 1.0, 8};
  const auto r = run_calibration(c);
  EXPECT_EQ(r.rejection_rate, 1.0);
  EXPECT_EQ(r.rejections, 25u);
  EXPECT_EQ(r.standard_error, 0.0);
}

TEST(Experiment, ReproducibleAndSized) {
  ExperimentConfig c{dgp("nonlinear-null", 80, 2, 2), TestConfig::pcm_all(RegressorSpec::ols(), 2), 30, 0.05, 9};
  auto run = [&](std::size_t threads) {
    ThreadLimit limit(threads);
    return run_calibration(c);
  };
  const auto a = run(1), b = run(4);
  EXPECT_EQ(a.p_values.size(), 30u);
  EXPECT_EQ(a.p_values, b.p_values);
  EXPECT_EQ(a.statistics, b.statistics);
  EXPECT_GE(a.rejection_rate, 0.0);
  EXPECT_LE(a.rejection_rate, 1.0);
  EXPECT_NEAR(a.standard_error, std::sqrt(a.rejection_rate * (1 - a.rejection_rate) / 30), 1e-15);
  EXPECT_EQ(a.regression_count, 10u);
  EXPECT_EQ(a.config["replicates"], 30);
  EXPECT_EQ(a.config["dgp"]["name"], "nonlinear-null");
}

TEST(Experiment, ReplicateUsesDocumentedStreams) {
  ExperimentConfig c{dgp("linear-gaussian-null", 50), TestConfig::gcm(RegressorSpec::ols(), RegressorSpec::ols()), 3,
                     0.05, 10};
  const auto r = run_experiment(c);
  const RngStream rep = RngStream(10).child(2);
  const auto data = generate(c.dgp, rep.child(0));
  const auto direct = gcm_test(data.y, data.X, data.Z, RegressorSpec::ols(), RegressorSpec::ols(), rep.child(1));
  EXPECT_EQ(r.p_values[2], direct.p_value);
}

TEST(Experiment, CalibrationRequiresNull) {
  ExperimentConfig c{dgp("sine-cubic-product", 50), TestConfig::gcm(RegressorSpec::ols(), RegressorSpec::ols()), 3, 0.05, 1};
  EXPECT_THROW(run_calibration(c), SpecError);
  EXPECT_NO_THROW(run_power(c));
  c.dgp = dgp("partially-linear", 50);
  c.dgp.theta = 0.0;
  EXPECT_NO_THROW(run_calibration(c));
  c.replicates = 0;
  EXPECT_THROW(run_experiment(c), SpecError);
}

TEST(Experiment, ReplicateErrorsNameSeed) {
  ExperimentConfig c{dgp("linear-gaussian-null", 5), TestConfig::gcm(RegressorSpec::ols(), RegressorSpec::ols()), 2,
                     0.05, 42};
  try {
    run_experiment(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("seed 42"), std::string::npos) << e.what();
  }
}

TEST(Timing, RegressionCounts) {
  const auto gcm = run_timing({{60, 1}, {60, 4}, {60, 32}}, TestConfig::gcm(RegressorSpec::ols(), RegressorSpec::ols()),
                              5, 1);
  ASSERT_EQ(gcm.size(), 3u);
  EXPECT_EQ(gcm[0].regression_count, 2u);
  EXPECT_EQ(gcm[1].regression_count, 5u);
  EXPECT_EQ(gcm[2].regression_count, 33u);
  for (const auto& cell : gcm) {
    EXPECT_EQ(cell.samples.size(), 5u);
    EXPECT_GE(cell.median_seconds, 0.0);
  }
  const auto pcm = run_timing({{60, 1}, {60, 32}}, TestConfig::pcm_all(RegressorSpec::ols(), 3), 5, 1);
  EXPECT_EQ(pcm[0].regression_count, 15u);
  EXPECT_EQ(pcm[1].regression_count, 15u);
  EXPECT_THROW(run_timing({{60, 1}}, TestConfig::pcm_all(RegressorSpec::ols(), 3), 4, 1), SpecError);
}

TEST(Timing, Median) {
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 2, 3}), 2.5);
}
