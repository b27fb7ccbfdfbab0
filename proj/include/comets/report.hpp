#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "comets/data.hpp"
#include "comets/gcm.hpp"
#include "comets/multiplicity.hpp"
#include "comets/pcm.hpp"
#include "comets/simharness.hpp"

namespace comets {

inline constexpr const char* kToolName = "comets";
inline constexpr const char* kToolVersion = "0.1.0";

// Wall-clock fields are opt-in because they break byte-identical reruns.
struct ReportOptions {
  bool include_timings = false;
};

inline nlohmann::json to_json(const GcmResult& r) {
  nlohmann::json sigma = nlohmann::json::array();
  for (Eigen::Index i = 0; i < r.sigma.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < r.sigma.cols(); ++j) row.push_back(r.sigma(i, j));
    sigma.push_back(std::move(row));
  }
  nlohmann::json regressions = {{"count", r.regression_count}};
  for (const auto& [slot, spec] : r.engines.items()) regressions[slot] = spec;
  return {{"test", "gcm"},
          {"statistic", r.statistic},
          {"df", r.df},
          {"p", r.p_value},
          {"d", r.d},
          {"n", r.n},
          {"regressions", regressions},
          {"diagnostics",
           {{"L", r.L},
            {"sigma", sigma},
            {"residual_correlations", r.residual_correlations},
            {"training_mse", {{"yz", r.mse_yz}, {"xz", r.mse_xz}}}}}};
}

inline nlohmann::json to_json(const PcmSplitResult& s) {
  return {{"statistic", s.statistic},
          {"numerator", s.numerator},
          {"p", s.p_value()},
          {"null_projection", s.null_projection},
          {"variance_floor", s.variance_floor},
          {"floor_activations", s.floor_activations},
          {"residual_correlation", s.residual_correlation},
          {"n_d1", s.n_d1},
          {"n_d2", s.n_d2},
          {"seed", s.seed},
          {"stream", s.stream_id},
          {"training_mse",
           {{"g", s.mse_g}, {"m", s.mse_m}, {"v", s.mse_v}, {"d1_yz", s.mse_d1_yz}, {"d1_fz", s.mse_d1_fz}}}};
}

inline nlohmann::json to_json(const PcmResult& r) {
  nlohmann::json splits = nlohmann::json::array();
  for (const auto& s : r.splits) splits.push_back(to_json(s));
  return {{"test", "pcm"},
          {"K", r.K},
          {"n", r.n},
          {"statistics", r.statistics},
          {"statistic_avg", r.statistic_avg},
          {"p", r.p_value},
          {"floor_activations", r.floor_activations},
          {"engines", r.engines},
          {"regressions", {{"count", r.regression_count}}},
          {"diagnostics", {{"splits", splits}}}};
}

inline nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json to_json(const TestReport& report, const ReportOptions& options = {}) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    nlohmann::json row = {{"label", r.label},
                          {"response", r.roles.response},
                          {"candidate", r.roles.candidate},
                          {"conditioning_size", r.roles.conditioning.size()},
                          {"raw_p", optional_number(r.raw_p)},
                          {"holm_p", optional_number(r.adjusted_p)},
                          {"bonferroni_p", optional_number(r.bonferroni_p)},
                          {"reject", r.reject},
                          {"statistic", r.statistic},
                          {"df_or_K", r.df_or_K},
                          {"regressions", r.regression_count},
                          {"seed", r.seed},
                          {"stream", r.stream_id},
                          {"error", r.error ? nlohmann::json(*r.error) : nlohmann::json(nullptr)}};
    if (options.include_timings) row["seconds"] = r.seconds;
    rows.push_back(std::move(row));
  }
  return {{"test", to_string(report.kind)}, {"alpha", report.alpha},       {"seed", report.seed},
          {"config", report.config},        {"warnings", report.warnings}, {"hypotheses", rows}};
}

namespace detail {
inline std::string csv_number(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }
}  // namespace detail

// label,raw_p,holm_p,statistic,df_or_K,seconds
inline void write_report_csv(std::ostream& out, const TestReport& report, const ReportOptions& options = {}) {
  out << "label,raw_p,holm_p,statistic,df_or_K,seconds\n";
  for (const auto& r : report.rows) {
    out << r.label << ',' << detail::csv_number(r.raw_p) << ',' << detail::csv_number(r.adjusted_p) << ','
        << format_double(r.statistic) << ',' << r.df_or_K << ','
        << (options.include_timings ? format_double(r.seconds) : std::string("NA")) << '\n';
  }
}

inline nlohmann::json to_json(const ExperimentResult& r, const ReportOptions& options = {}) {
  nlohmann::json j = {{"config", r.config},
                      {"replicates", r.p_values.size()},
                      {"rejections", r.rejections},
                      {"rejection_rate", r.rejection_rate},
                      {"standard_error", r.standard_error},
                      {"regression_count", r.regression_count},
                      {"p_values", r.p_values},
                      {"statistics", r.statistics}};
  if (options.include_timings) j["seconds"] = r.seconds;
  return j;
}

// replicate,p_value,statistic[,seconds]
inline void write_replicates_csv(std::ostream& out, const ExperimentResult& r, const ReportOptions& options = {}) {
  out << "replicate,p_value,statistic" << (options.include_timings ? ",seconds" : "") << '\n';
  for (std::size_t i = 0; i < r.p_values.size(); ++i) {
    out << i << ',' << format_double(r.p_values[i]) << ',' << format_double(r.statistics[i]);
    if (options.include_timings) out << ',' << format_double(r.seconds[i]);
    out << '\n';
  }
}

inline void write_timing_csv(std::ostream& out, const std::vector<TimingCell>& cells, const std::string& test) {
  out << "test,n,d,regressions,median_seconds,repeats\n";
  for (const auto& c : cells) {
    out << test << ',' << c.n << ',' << c.d << ',' << c.regression_count << ',' << format_double(c.median_seconds)
        << ',' << c.samples.size() << '\n';
  }
}

}  // namespace comets
