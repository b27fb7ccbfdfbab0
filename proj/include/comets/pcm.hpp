#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "comets/distributions.hpp"
#include "comets/engines.hpp"
#include "comets/matrix.hpp"
#include "comets/parallel.hpp"
#include "comets/regression.hpp"

namespace comets {

// Random partition of the rows into a statistic half D1 and a training half
// D2. Odd totals give D1 the extra row.
struct SplitPlan {
  std::vector<std::size_t> permutation;
  std::size_t d1_size = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  static SplitPlan draw(std::size_t total, RngStream rng) {
    SplitPlan plan;
    plan.seed = rng.seed();
    plan.stream_id = rng.stream_id();
    plan.permutation = rng.permutation(total);
    plan.d1_size = (total + 1) / 2;
    return plan;
  }

  std::span<const std::size_t> d1() const { return std::span(permutation).first(d1_size); }
  std::span<const std::size_t> d2() const { return std::span(permutation).subspan(d1_size); }
};

// Engine slots of the projected covariance measure. `v` defaults to the
// engine used for `g`.
struct PcmEngines {
  Engine g;      // Y ~ (X, Z) on D2
  Engine m;      // Y ~ Z on D2
  Engine v;      // (Y - g)^2 ~ (X, Z) on D2
  Engine d1_yz;  // Y ~ Z on D1
  Engine d1_fz;  // f(X, Z) ~ Z on D1
  // For 0/1 responses: use g(1 - g) as the variance instead of fitting v.
  bool binary_variance = false;

  static PcmEngines all(const Engine& e) { return {e, e, e, e, e}; }
  static PcmEngines all(const RegressorSpec& spec) { return all(make_engine(spec)); }

  std::size_t regressions_per_split() const { return binary_variance ? 4 : 5; }

  nlohmann::json describe() const {
    nlohmann::json j = {{"g", g->describe()},         {"m", m->describe()},
                        {"d1_yz", d1_yz->describe()}, {"d1_fz", d1_fz->describe()},
                        {"binary_variance", binary_variance}};
    j["v"] = binary_variance ? nlohmann::json("analytic g(1-g)") : v->describe();
    return j;
  }
};

struct PcmSplitResult {
  double statistic = 0.0;
  double numerator = 0.0;  // n^{-1/2} sum eps * zeta
  bool null_projection = false;
  double variance_floor = 0.0;
  std::size_t floor_activations = 0;
  double residual_correlation = 0.0;
  std::size_t n_d1 = 0;
  std::size_t n_d2 = 0;
  double mse_g = 0.0, mse_m = 0.0, mse_v = 0.0, mse_d1_yz = 0.0, mse_d1_fz = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  std::size_t regression_count = 0;
  std::vector<double> eps;   // residuals of Y on Z over D1
  std::vector<double> zeta;  // residuals of f(X, Z) on Z over D1

  double p_value() const { return normal_sf(statistic); }
};

struct PcmResult {
  std::size_t n = 0;
  std::size_t K = 0;
  std::vector<PcmSplitResult> splits;
  std::vector<double> statistics;
  double statistic_avg = 0.0;
  double p_value = 1.0;
  std::size_t floor_activations = 0;
  std::size_t regression_count = 0;
  nlohmann::json engines = nlohmann::json::object();
};

// Failure inside one split, tagged with what is needed to reproduce it.
class SplitError : public Error {
 public:
  SplitError(std::size_t split, std::uint64_t seed, std::uint64_t stream_id, const std::string& what)
      : Error("pcm split " + std::to_string(split) + " (seed " + std::to_string(seed) + ", stream " +
              std::to_string(stream_id) + "): " + what),
        split(split),
        seed(seed),
        stream_id(stream_id) {}
  std::size_t split;
  std::uint64_t seed;
  std::uint64_t stream_id;
};

inline void check_engines(const PcmEngines& e) {
  if (!e.g || !e.m || !e.d1_yz || !e.d1_fz || (!e.v && !e.binary_variance)) {
    throw ContractViolation("pcm: every engine slot must be set");
  }
}

// One sample split. f = (g - m) / max(v, floor) is learned on D2; the
// statistic is the self-normalised mean of eps * zeta over D1. Regression
// slots draw from rng.child(0..4) in the order g, m, v, d1_yz, d1_fz.
inline PcmSplitResult pcm_single(std::span<const double> y, const NumericMatrix& X, const NumericMatrix& Z,
                                 const SplitPlan& split, const PcmEngines& engines, RngStream rng) {
  check_engines(engines);
  const std::size_t total = y.size();
  if (X.rows() != total || Z.rows() != total) throw DimensionError("pcm: y, X and Z differ in row count");
  if (total < 20) throw DimensionError("pcm: need at least 20 observations");
  if (X.cols() < 1) throw DimensionError("pcm: X has no columns");
  if (split.permutation.size() != total) throw DimensionError("pcm: split plan does not cover the data");

  const NumericMatrix XZ = NumericMatrix::hcat(X, Z);
  auto pick = [&](std::span<const std::size_t> idx) {
    std::vector<double> out(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) out[k] = y[idx[k]];
    return out;
  };

  PcmSplitResult out;
  out.seed = rng.seed();
  out.stream_id = rng.stream_id();
  out.regression_count = engines.regressions_per_split();

  // Projection learned on D2.
  const auto d2 = split.d2();
  const NumericMatrix xz2 = XZ.select_rows(d2);
  const NumericMatrix z2 = Z.select_rows(d2);
  const auto y2 = pick(d2);
  out.n_d2 = d2.size();

  const auto g = engines.g->fit(xz2, y2, rng.child(0));
  const auto g_on_d2 = g.predict(xz2);
  std::vector<double> sq_resid(y2.size());
  for (std::size_t i = 0; i < y2.size(); ++i) sq_resid[i] = (y2[i] - g_on_d2[i]) * (y2[i] - g_on_d2[i]);
  out.mse_g = mean(sq_resid);

  const auto m = engines.m->fit(z2, y2, rng.child(1));
  out.mse_m = mean_squared(residuals(m, z2, y2));

  std::optional<FittedModel> v;
  if (!engines.binary_variance) {
    v.emplace(engines.v->fit(xz2, sq_resid, rng.child(2)));
    out.mse_v = mean_squared(residuals(*v, xz2, sq_resid));
  }
  out.variance_floor = std::max(1e-12, 0.01 * mean(sq_resid));

  // Statistic on D1.
  const auto d1 = split.d1();
  const NumericMatrix xz1 = XZ.select_rows(d1);
  const NumericMatrix z1 = Z.select_rows(d1);
  const auto y1 = pick(d1);
  out.n_d1 = d1.size();

  const auto g1 = g.predict(xz1);
  const auto m1 = m.predict(z1);
  std::vector<double> v1(d1.size());
  if (v) {
    v1 = v->predict(xz1);
  } else {
    for (std::size_t i = 0; i < v1.size(); ++i) v1[i] = g1[i] * (1.0 - g1[i]);
  }
  std::vector<double> f(d1.size());
  double f_scale = 1.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    double vi = v1[i];
    if (!(vi >= out.variance_floor)) {
      vi = out.variance_floor;
      ++out.floor_activations;
    }
    f[i] = (g1[i] - m1[i]) / vi;
    f_scale = std::max(f_scale, std::fabs(f[i]));
  }

  const auto eps_model = engines.d1_yz->fit(z1, y1, rng.child(3));
  out.eps = residuals(eps_model, z1, y1);
  out.mse_d1_yz = mean_squared(out.eps);
  const auto f_model = engines.d1_fz->fit(z1, f, rng.child(4));
  out.zeta = residuals(f_model, z1, f);
  out.mse_d1_fz = mean_squared(out.zeta);

  double zeta_max = 0.0;
  for (double z : out.zeta) zeta_max = std::max(zeta_max, std::fabs(z));
  if (zeta_max <= 1e-10 * f_scale) {
    out.null_projection = true;
    return out;
  }

  const auto n1 = static_cast<double>(out.n_d1);
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t i = 0; i < out.eps.size(); ++i) {
    const double r = out.eps[i] * out.zeta[i];
    sum += r;
    sumsq += r * r;
  }
  const double mu = sum / n1;
  double var = 0.0;
  for (std::size_t i = 0; i < out.eps.size(); ++i) {
    const double r = out.eps[i] * out.zeta[i] - mu;
    var += r * r;
  }
  var /= n1;
  if (!(var > 1e-12 * (sumsq / n1))) {
    throw DegenerateResiduals("pcm: residual products have zero variance on D1");
  }
  out.numerator = sum / std::sqrt(n1);
  out.statistic = out.numerator / std::sqrt(var);
  out.residual_correlation = correlation(out.eps, out.zeta);
  return out;
}

// Projected covariance measure test averaged over K random splits; the
// one-sided p-value is 1 - Phi(mean statistic). Split k draws from
// rng.child(k); its partition from rng.child(k).child(5).
inline PcmResult pcm_test(std::span<const double> y, const NumericMatrix& X, const NumericMatrix& Z, std::size_t K,
                          const PcmEngines& engines, RngStream rng) {
  if (K < 1) throw DomainError("pcm_test: K must be at least 1");
  check_engines(engines);
  PcmResult out;
  out.n = y.size();
  out.K = K;
  out.splits.resize(K);
  parallel_for(K, [&](std::size_t k) {
    const RngStream split_rng = rng.child(k);
    try {
      const auto plan = SplitPlan::draw(y.size(), split_rng.child(5));
      out.splits[k] = pcm_single(y, X, Z, plan, engines, split_rng);
    } catch (const SplitError&) {
      throw;
    } catch (const std::exception& e) {
      throw SplitError(k, split_rng.seed(), split_rng.stream_id(), e.what());
    }
  });
  double total = 0.0;
  for (const auto& s : out.splits) {
    out.statistics.push_back(s.statistic);
    total += s.statistic;
    out.floor_activations += s.floor_activations;
    out.regression_count += s.regression_count;
  }
  out.statistic_avg = total / static_cast<double>(K);
  out.p_value = normal_sf(out.statistic_avg);
  out.engines = engines.describe();
  return out;
}

inline PcmResult pcm_test(std::span<const double> y, const NumericMatrix& X, const NumericMatrix& Z, std::size_t K,
                          const RegressorSpec& spec, RngStream rng) {
  return pcm_test(y, X, Z, K, PcmEngines::all(spec), rng);
}

}  // namespace comets
