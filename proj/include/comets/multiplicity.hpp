#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "comets/data.hpp"
#include "comets/distributions.hpp"
#include "comets/gcm.hpp"
#include "comets/parallel.hpp"
#include "comets/pcm.hpp"

namespace comets {

inline void require_probabilities(std::span<const double> p) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0 && p[i] <= 1.0)) {
      throw DomainError("p-value at index " + std::to_string(i) + " is outside [0, 1]");
    }
  }
}

// Holm step-down adjustment, returned in input order.
inline std::vector<double> holm_adjust(std::span<const double> p) {
  require_probabilities(p);
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  std::vector<double> out(m);
  double running = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double scaled = std::min(1.0, static_cast<double>(m - k) * p[order[k]]);
    running = std::max(running, scaled);
    out[order[k]] = running;
  }
  return out;
}

inline std::vector<double> bonferroni_adjust(std::span<const double> p) {
  require_probabilities(p);
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = std::min(1.0, static_cast<double>(p.size()) * p[i]);
  return out;
}

enum class TestKind { gcm, pcm };

inline std::string to_string(TestKind k) { return k == TestKind::gcm ? "gcm" : "pcm"; }

inline TestKind test_kind_from_string(const std::string& s) {
  if (s == "gcm") return TestKind::gcm;
  if (s == "pcm") return TestKind::pcm;
  throw SpecError("unknown test kind '" + s + "' (expected gcm or pcm)");
}

// Which test to run and with which engines.
struct TestConfig {
  TestKind kind = TestKind::gcm;
  Engine yz;        // GCM: Y ~ Z
  Engine xz;        // GCM: X_j ~ Z
  PcmEngines pcm;   // PCM slots
  std::size_t K = 5;
  double alpha = 0.05;

  static TestConfig gcm(const RegressorSpec& yz, const RegressorSpec& xz, double alpha = 0.05) {
    TestConfig c;
    c.kind = TestKind::gcm;
    c.yz = make_engine(yz);
    c.xz = make_engine(xz);
    c.alpha = alpha;
    return c;
  }
  static TestConfig pcm_with(PcmEngines engines, std::size_t K, double alpha = 0.05) {
    TestConfig c;
    c.kind = TestKind::pcm;
    c.pcm = std::move(engines);
    c.K = K;
    c.alpha = alpha;
    return c;
  }
  static TestConfig pcm_all(const RegressorSpec& spec, std::size_t K, double alpha = 0.05) {
    return pcm_with(PcmEngines::all(spec), K, alpha);
  }

  nlohmann::json describe() const {
    nlohmann::json j = {{"test", to_string(kind)}, {"alpha", alpha}};
    if (kind == TestKind::gcm) {
      j["engines"] = {{"yz", yz->describe()}, {"xz", xz->describe()}};
    } else {
      j["K"] = K;
      j["engines"] = pcm.describe();
    }
    return j;
  }
};

// Summary of one GCM or PCM run.
struct TestOutcome {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t df_or_K = 0;
  std::size_t regression_count = 0;
};

inline TestOutcome run_test(const TestConfig& config, std::span<const double> y, const NumericMatrix& X,
                            const NumericMatrix& Z, RngStream rng) {
  if (config.kind == TestKind::gcm) {
    const auto r = gcm_test(y, X, Z, config.yz, config.xz, rng);
    return {r.statistic, r.p_value, r.df, r.regression_count};
  }
  const auto r = pcm_test(y, X, Z, config.K, config.pcm, rng);
  return {r.statistic_avg, r.p_value, r.K, r.regression_count};
}

struct Hypothesis {
  std::string label;
  ColumnRoles roles;
};

struct HypothesisResult {
  std::string label;
  ColumnRoles roles;
  std::optional<double> raw_p;
  std::optional<double> adjusted_p;    // Holm
  std::optional<double> bonferroni_p;
  bool reject = false;
  double statistic = 0.0;
  std::size_t df_or_K = 0;
  std::size_t regression_count = 0;
  double seconds = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  std::optional<std::string> error;
};

struct TestReport {
  TestKind kind = TestKind::gcm;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::vector<HypothesisResult> rows;  // sorted by label
  std::vector<std::string> warnings;
  nlohmann::json config = nlohmann::json::object();

  const HypothesisResult& row(const std::string& label) const {
    for (const auto& r : rows)
      if (r.label == label) return r;
    throw Error("report has no hypothesis labelled '" + label + "'");
  }
};

// Runs every hypothesis (hypothesis i draws from rng.child(i)) and applies
// Holm across the family. A failing hypothesis is recorded with its error and
// counts as p = 1 in the adjustment; the others still run.
inline TestReport run_family(const Dataset& ds, const std::vector<Hypothesis>& family, const TestConfig& config,
                             RngStream rng) {
  {
    std::set<std::string> labels;
    for (const auto& h : family) {
      if (!labels.insert(h.label).second) throw SpecError("duplicate hypothesis label '" + h.label + "'");
      validate_roles(ds, h.roles);
    }
  }
  if (!(config.alpha > 0.0 && config.alpha <= 1.0)) throw DomainError("alpha must lie in (0, 1]");

  std::vector<HypothesisResult> rows(family.size());
  parallel_for(family.size(), [&](std::size_t i) {
    auto& row = rows[i];
    row.label = family[i].label;
    row.roles = family[i].roles;
    const RngStream child = rng.child(i);
    row.seed = child.seed();
    row.stream_id = child.stream_id();
    const auto start = std::chrono::steady_clock::now();
    try {
      const auto blocks = select_blocks(ds, family[i].roles);
      const auto outcome = run_test(config, blocks.y, blocks.X, blocks.Z, child);
      row.raw_p = outcome.p_value;
      row.statistic = outcome.statistic;
      row.df_or_K = outcome.df_or_K;
      row.regression_count = outcome.regression_count;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });

  std::vector<double> raw(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) raw[i] = rows[i].raw_p.value_or(1.0);
  const auto holm = holm_adjust(raw);
  const auto bonf = bonferroni_adjust(raw);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].raw_p) continue;
    rows[i].adjusted_p = holm[i];
    rows[i].bonferroni_p = bonf[i];
    rows[i].reject = holm[i] <= config.alpha;
  }

  TestReport report;
  report.kind = config.kind;
  report.alpha = config.alpha;
  report.seed = rng.seed();
  report.config = config.describe();
  report.rows = std::move(rows);
  std::sort(report.rows.begin(), report.rows.end(),
            [](const auto& a, const auto& b) { return a.label < b.label; });
  return report;
}

// Tests Y _||_ X_j | (other candidates, base_conditioning) for every candidate j.
inline TestReport variable_sweep(const Dataset& ds, const std::string& response,
                                 const std::vector<std::string>& candidates, const TestConfig& config, RngStream rng,
                                 const std::vector<std::string>& base_conditioning = {}) {
  if (candidates.empty()) throw RoleError("variable sweep: no candidates");
  std::vector<Hypothesis> family;
  for (const auto& c : candidates) {
    Hypothesis h{c, {response, {c}, {}}};
    for (const auto& other : candidates)
      if (other != c) h.roles.conditioning.push_back(other);
    h.roles.conditioning.insert(h.roles.conditioning.end(), base_conditioning.begin(), base_conditioning.end());
    family.push_back(std::move(h));
  }
  return run_family(ds, family, config, rng);
}

struct Modality {
  std::string name;
  std::vector<std::string> columns;
};

// Number of columns at which a GCM modality test triggers a cost warning.
inline constexpr std::size_t kGcmWideModality = 10;

// Tests Y _||_ M_j | (other modalities, base_conditioning) for every modality.
inline TestReport modality_select(const Dataset& ds, const std::string& response,
                                  const std::vector<Modality>& modalities, const TestConfig& config, RngStream rng,
                                  const std::vector<std::string>& base_conditioning = {}) {
  if (modalities.size() < 2) throw RoleError("modality selection needs at least two modalities");
  {
    std::set<std::string> seen;
    for (const auto& m : modalities) {
      if (m.columns.empty()) throw RoleError("modality '" + m.name + "' has no columns");
      for (const auto& c : m.columns) {
        if (!seen.insert(c).second) throw RoleError("column '" + c + "' belongs to more than one modality");
      }
    }
  }
  std::vector<Hypothesis> family;
  std::vector<std::string> warnings;
  for (std::size_t j = 0; j < modalities.size(); ++j) {
    Hypothesis h{modalities[j].name, {response, modalities[j].columns, {}}};
    for (std::size_t k = 0; k < modalities.size(); ++k) {
      if (k == j) continue;
      h.roles.conditioning.insert(h.roles.conditioning.end(), modalities[k].columns.begin(),
                                  modalities[k].columns.end());
    }
    h.roles.conditioning.insert(h.roles.conditioning.end(), base_conditioning.begin(), base_conditioning.end());
    if (config.kind == TestKind::gcm && modalities[j].columns.size() >= kGcmWideModality) {
      const auto width = modalities[j].columns.size();
      warnings.push_back("modality '" + modalities[j].name + "' has " + std::to_string(width) +
                         " columns: GCM requires " + std::to_string(width + 1) +
                         " regressions for this test; PCM needs 5 per split regardless of width");
    }
    family.push_back(std::move(h));
  }
  auto report = run_family(ds, family, config, rng);
  report.warnings = std::move(warnings);
  return report;
}

}  // namespace comets
