#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "comets/data.hpp"
#include "comets/multiplicity.hpp"
#include "comets/parallel.hpp"
#include "comets/rng.hpp"

namespace comets {

// Entry of the data-generating catalog plus its free parameters.
//
// Catalog (s = sum of Z columns / sqrt(d_z), xi and eps independent noise):
//   linear-gaussian-null    Z ~ N(0, I); X_j = 0.5 s + xi_j; Y = 0.8 s + noise * eps.
//                           Y depends on Z and eps only, so Y _||_ X | Z.
//   partially-linear        Z ~ N(0, I); X_j = tanh(s) + xi_j; Y = theta X_1 + sin(s) + noise * eps.
//                           Null exactly when theta = 0.
//   nonlinear-null          Z ~ N(0, I); X_j = sin(2 s) + xi_j; Y = 2 exp(-s^2) + s + noise * eps.
//                           Y depends on Z and eps only.
//   quadratic-null-for-gcm  X, Z independent N(0, I); Y = X_1^2 + noise * eps. E[eps xi] = 0 but
//                           Y depends on X: not a conditional independence null.
//   sine-cubic-product      X, Z ~ U(-1, 1); Y = (1 + sin(3 X_1^2)) (1 + Z_1^3) + noise * eps,
//                           noise defaults to 0.25. Not a null.
//   sweep-planted           X_j ~ N(0, 1) independent, Z empty; Y = theta X_1 + noise * eps.
//                           Null for every candidate when theta = 0.
//   two-modality            latent s1, s2 ~ N(0, 1); X = (s1, s2, s1) (signal modality with a
//                           duplicated column), Z = d_z independent N(0, 1) columns (noise
//                           modality); Y = s1 + sin(2 s2) + noise * eps. Not a null for X.
struct DgpSpec {
  std::string name = "linear-gaussian-null";
  std::size_t n = 500;
  std::size_t d_x = 1;
  std::size_t d_z = 1;
  double theta = 0.5;
  std::optional<double> noise;  // catalog default when unset
  std::uint64_t seed = 0;
};

inline const std::vector<std::string>& dgp_catalog() {
  static const std::vector<std::string> names = {
      "linear-gaussian-null", "partially-linear", "nonlinear-null", "quadratic-null-for-gcm",
      "sine-cubic-product", "sweep-planted", "two-modality"};
  return names;
}

inline void validate(const DgpSpec& spec) {
  const auto& names = dgp_catalog();
  if (std::find(names.begin(), names.end(), spec.name) == names.end()) {
    throw SpecError("unknown data-generating process '" + spec.name + "'");
  }
  if (spec.n < 2) throw SpecError("dgp: n must be at least 2");
  if (spec.d_x < 1) throw SpecError("dgp: d_x must be at least 1");
  if (spec.noise && !(*spec.noise >= 0.0)) throw SpecError("dgp: noise must be >= 0");
  if (!std::isfinite(spec.theta)) throw SpecError("dgp: theta must be finite");
}

inline double default_noise(const std::string& name) { return name == "sine-cubic-product" ? 0.25 : 1.0; }

// Whether Y _||_ X | Z holds by construction.
inline bool satisfies_null(const DgpSpec& spec) {
  validate(spec);
  if (spec.name == "linear-gaussian-null" || spec.name == "nonlinear-null") return true;
  if (spec.name == "partially-linear" || spec.name == "sweep-planted") return spec.theta == 0.0;
  return false;
}

struct SimData {
  std::vector<double> y;
  NumericMatrix X;
  NumericMatrix Z;
};

inline SimData generate(const DgpSpec& spec, RngStream rng) {
  validate(spec);
  const std::size_t n = spec.n;
  const double noise = spec.noise.value_or(default_noise(spec.name));
  const auto& name = spec.name;
  std::size_t d_x = spec.d_x;
  std::size_t d_z = spec.d_z;
  if (name == "sweep-planted") d_z = 0;
  if (name == "two-modality") d_x = 3;

  SimData out{std::vector<double>(n), NumericMatrix(n, d_x), NumericMatrix(n, d_z)};
  const double root_dz = std::sqrt(static_cast<double>(std::max<std::size_t>(d_z, 1)));
  for (std::size_t i = 0; i < n; ++i) {
    if (name == "sine-cubic-product") {
      for (std::size_t j = 0; j < d_x; ++j) out.X(i, j) = rng.uniform(-1.0, 1.0);
      for (std::size_t k = 0; k < d_z; ++k) out.Z(i, k) = rng.uniform(-1.0, 1.0);
      const double x = out.X(i, 0);
      const double z = d_z > 0 ? out.Z(i, 0) : 0.0;
      out.y[i] = (1.0 + std::sin(3.0 * x * x)) * (1.0 + z * z * z) + noise * rng.normal();
      continue;
    }
    if (name == "two-modality") {
      const double s1 = rng.normal(), s2 = rng.normal();
      out.X(i, 0) = s1;
      out.X(i, 1) = s2;
      out.X(i, 2) = s1;
      for (std::size_t k = 0; k < d_z; ++k) out.Z(i, k) = rng.normal();
      out.y[i] = s1 + std::sin(2.0 * s2) + noise * rng.normal();
      continue;
    }

    double s = 0.0;
    for (std::size_t k = 0; k < d_z; ++k) {
      out.Z(i, k) = rng.normal();
      s += out.Z(i, k);
    }
    s /= root_dz;
    const double eps = noise * rng.normal();
    if (name == "linear-gaussian-null") {
      for (std::size_t j = 0; j < d_x; ++j) out.X(i, j) = 0.5 * s + rng.normal();
      out.y[i] = 0.8 * s + eps;
    } else if (name == "partially-linear") {
      for (std::size_t j = 0; j < d_x; ++j) out.X(i, j) = std::tanh(s) + rng.normal();
      out.y[i] = spec.theta * out.X(i, 0) + std::sin(s) + eps;
    } else if (name == "nonlinear-null") {
      for (std::size_t j = 0; j < d_x; ++j) out.X(i, j) = std::sin(2.0 * s) + rng.normal();
      out.y[i] = 2.0 * std::exp(-s * s) + s + eps;
    } else if (name == "quadratic-null-for-gcm") {
      for (std::size_t j = 0; j < d_x; ++j) out.X(i, j) = rng.normal();
      out.y[i] = out.X(i, 0) * out.X(i, 0) + eps;
    } else if (name == "sweep-planted") {
      for (std::size_t j = 0; j < d_x; ++j) out.X(i, j) = rng.normal();
      out.y[i] = spec.theta * out.X(i, 0) + eps;
    }
  }
  return out;
}

inline SimData generate(const DgpSpec& spec) { return generate(spec, RngStream(spec.seed)); }

// Columns y, x1..x{d_x}, z1..z{d_z}.
inline Dataset to_dataset(const SimData& data) {
  std::vector<std::string> names{"y"};
  std::vector<std::vector<double>> cols{data.y};
  for (std::size_t j = 0; j < data.X.cols(); ++j) {
    names.push_back("x" + std::to_string(j + 1));
    cols.push_back(data.X.col(j));
  }
  for (std::size_t k = 0; k < data.Z.cols(); ++k) {
    names.push_back("z" + std::to_string(k + 1));
    cols.push_back(data.Z.col(k));
  }
  return Dataset(std::move(names), std::move(cols));
}

inline nlohmann::json to_json(const DgpSpec& spec) {
  nlohmann::json j = {{"name", spec.name}, {"n", spec.n},         {"d_x", spec.d_x},
                      {"d_z", spec.d_z},   {"theta", spec.theta}, {"seed", spec.seed}};
  j["noise"] = spec.noise.value_or(default_noise(spec.name));
  return j;
}

struct ExperimentConfig {
  DgpSpec dgp;
  TestConfig test;
  std::size_t replicates = 100;
  double alpha = 0.05;
  std::uint64_t seed = 0;
};

struct ExperimentResult {
  std::vector<double> p_values;
  std::vector<double> statistics;
  std::vector<double> seconds;
  std::size_t rejections = 0;
  double rejection_rate = 0.0;
  double standard_error = 0.0;  // binomial
  std::size_t regression_count = 0;  // per replicate
  nlohmann::json config = nlohmann::json::object();
};

inline nlohmann::json describe(const ExperimentConfig& c) {
  return {{"dgp", to_json(c.dgp)},
          {"test", c.test.describe()},
          {"replicates", c.replicates},
          {"alpha", c.alpha},
          {"seed", c.seed}};
}

// Replicate r generates data from RngStream(seed).child(r).child(0) and runs
// the test with .child(1).
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  validate(config.dgp);
  if (config.replicates < 1) throw SpecError("experiment: replicates must be >= 1");
  if (!(config.alpha > 0.0 && config.alpha <= 1.0)) throw DomainError("experiment: alpha must lie in (0, 1]");

  const RngStream master(config.seed);
  ExperimentResult out;
  out.p_values.resize(config.replicates);
  out.statistics.resize(config.replicates);
  out.seconds.resize(config.replicates);
  std::vector<std::size_t> counts(config.replicates);
  parallel_for(config.replicates, [&](std::size_t r) {
    const RngStream rep = master.child(r);
    const auto start = std::chrono::steady_clock::now();
    try {
      const auto data = generate(config.dgp, rep.child(0));
      const auto outcome = run_test(config.test, data.y, data.X, data.Z, rep.child(1));
      out.p_values[r] = outcome.p_value;
      out.statistics[r] = outcome.statistic;
      counts[r] = outcome.regression_count;
    } catch (const std::exception& e) {
      throw Error("replicate " + std::to_string(r) + " (seed " + std::to_string(rep.seed()) + ", stream " +
                  std::to_string(rep.stream_id()) + "): " + e.what());
    }
    out.seconds[r] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });
  for (double p : out.p_values) out.rejections += p <= config.alpha;
  const auto reps = static_cast<double>(config.replicates);
  out.rejection_rate = static_cast<double>(out.rejections) / reps;
  out.standard_error = std::sqrt(out.rejection_rate * (1.0 - out.rejection_rate) / reps);
  out.regression_count = counts.front();
  out.config = describe(config);
  return out;
}

// Type I error study; the process must satisfy the null.
inline ExperimentResult run_calibration(const ExperimentConfig& config) {
  if (!satisfies_null(config.dgp)) {
    throw SpecError("calibration requires a null process; '" + config.dgp.name + "' with theta = " +
                    std::to_string(config.dgp.theta) + " is an alternative");
  }
  return run_experiment(config);
}

inline ExperimentResult run_power(const ExperimentConfig& config) { return run_experiment(config); }

struct TimingCell {
  std::size_t n = 0;
  std::size_t d = 0;
  double median_seconds = 0.0;
  std::vector<double> samples;
  std::size_t regression_count = 0;
};

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

// Wall-clock study over (n, d) cells on `dgp_name` data with d_x = d. Each
// cell runs one warm-up and then `repeats` timed tests on a single thread, so
// the measured cost reflects the number of regressions.
inline std::vector<TimingCell> run_timing(const std::vector<std::pair<std::size_t, std::size_t>>& grid,
                                          const TestConfig& test, std::size_t repeats, std::uint64_t seed,
                                          const std::string& dgp_name = "linear-gaussian-null") {
  if (repeats < 5) throw SpecError("timing: at least 5 repeats are required");
  ThreadLimit single(1);
  const RngStream master(seed);
  std::vector<TimingCell> cells;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    const auto [n, d] = grid[c];
    DgpSpec dgp;
    dgp.name = dgp_name;
    dgp.n = n;
    dgp.d_x = d;
    const RngStream cell_rng = master.child(c);
    const auto data = generate(dgp, cell_rng.child(0));
    TimingCell cell{n, d};
    for (std::size_t r = 0; r <= repeats; ++r) {
      const auto start = std::chrono::steady_clock::now();
      const auto outcome = run_test(test, data.y, data.X, data.Z, cell_rng.child(r + 1));
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      cell.regression_count = outcome.regression_count;
      if (r > 0) cell.samples.push_back(secs);
    }
    cell.median_seconds = median(cell.samples);
    cells.push_back(std::move(cell));
  }
  return cells;
}

}  // namespace comets
