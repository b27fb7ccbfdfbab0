#pragma once

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "comets/comets.hpp"

namespace comets::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Usage problems detected after flag parsing (bad engine JSON, unknown column, ...).
class UsageError : public Error {
 public:
  using Error::Error;
};

// Raw engine flags; empty strings mean "not given".
struct EngineFlags {
  std::string all, yz, xz, g, m, v, d1_yz, d1_fz;
  bool binary_variance = false;
};

// Everything needed to reproduce a run. Output location and thread count are
// left out: they do not affect results.
struct RunConfig {
  std::string subcommand;
  std::string data;
  std::string response;
  std::vector<std::string> x;
  std::vector<std::string> z;
  std::vector<std::string> candidates;
  std::string groups;
  std::string test = "gcm";
  EngineFlags engines;
  std::size_t k = 5;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "json";
  std::size_t threads = 0;
  int verbosity = 0;
  bool timings = false;

  // simulate
  std::string config_path;
  std::string mode = "auto";
  DgpSpec dgp;
  std::optional<double> noise;
  std::size_t replicates = 100;
  std::string pvalues_path;

  // bench
  std::vector<std::size_t> ns{200, 500, 1000};
  std::vector<std::size_t> ds{1, 4, 8, 32};
  std::size_t repeats = 5;
  std::string table_path;
};

namespace detail {

inline RegressorSpec parse_engine(const std::string& text, const std::string& flag) {
  try {
    return regressor_spec_from_string(text);
  } catch (const SpecError& e) {
    throw UsageError("--" + flag + ": " + e.what());
  }
}

inline RegressorSpec resolve(const std::string& specific, const std::string& flag, const EngineFlags& f) {
  if (!specific.empty()) return parse_engine(specific, flag);
  if (!f.all.empty()) return parse_engine(f.all, "engine");
  return RegressorSpec::random_forest();
}

struct ResolvedEngines {
  RegressorSpec yz, xz, g, m, v, d1_yz, d1_fz;
  bool binary_variance = false;
};

inline ResolvedEngines resolve_engines(const EngineFlags& f) {
  ResolvedEngines r;
  r.yz = resolve(f.yz, "engine-yz", f);
  r.xz = resolve(f.xz, "engine-xz", f);
  r.g = resolve(f.g, "engine-g", f);
  r.m = resolve(f.m, "engine-m", f);
  r.v = f.v.empty() ? r.g : parse_engine(f.v, "engine-v");
  r.d1_yz = resolve(f.d1_yz, "engine-d1-yz", f);
  r.d1_fz = resolve(f.d1_fz, "engine-d1-fz", f);
  r.binary_variance = f.binary_variance;
  return r;
}

inline TestConfig make_test_config(TestKind kind, const ResolvedEngines& e, std::size_t k, double alpha) {
  if (kind == TestKind::gcm) return TestConfig::gcm(e.yz, e.xz, alpha);
  PcmEngines pcm{make_engine(e.g), make_engine(e.m), make_engine(e.v), make_engine(e.d1_yz), make_engine(e.d1_fz),
                 e.binary_variance};
  return TestConfig::pcm_with(std::move(pcm), k, alpha);
}

inline nlohmann::json engines_json(const ResolvedEngines& e, TestKind kind) {
  if (kind == TestKind::gcm) return {{"yz", to_json(e.yz)}, {"xz", to_json(e.xz)}};
  return {{"g", to_json(e.g)},         {"m", to_json(e.m)},
          {"v", to_json(e.v)},         {"d1_yz", to_json(e.d1_yz)},
          {"d1_fz", to_json(e.d1_fz)}, {"binary_variance", e.binary_variance}};
}

inline Dataset load(const std::string& path) { return read_csv(path); }

inline void check_columns(const Dataset& ds, const std::vector<std::string>& names) {
  for (const auto& n : names) {
    if (!ds.has(n)) throw UsageError("column '" + n + "' not found in the data file");
  }
}

inline nlohmann::json tool_json() { return {{"name", kToolName}, {"version", kToolVersion}}; }

// Writes to the --out file, or to `fallback` when none was given.
inline void emit(const RunConfig& rc, const std::string& text, std::ostream& fallback) {
  if (rc.out.empty()) {
    fallback << text;
    return;
  }
  std::ofstream f(rc.out, std::ios::binary);
  if (!f) throw Error("cannot write '" + rc.out + "'");
  f << text;
}

inline std::string csv_preamble(const nlohmann::json& run_config) {
  return "# " + std::string(kToolName) + " " + kToolVersion + "\n# run_config " + run_config.dump() + "\n";
}

inline std::string json_text(const nlohmann::json& j) { return j.dump(2) + "\n"; }

inline std::string single_test_csv(const std::string& label, double p, double statistic, std::size_t df_or_k) {
  return "label,raw_p,holm_p,statistic,df_or_K,seconds\n" + label + "," + format_double(p) + "," +
         format_double(p) + "," + format_double(statistic) + "," + std::to_string(df_or_k) + ",NA\n";
}

inline std::vector<Modality> read_groups(const std::string& path, nlohmann::ordered_json& raw) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open groups file '" + path + "'");
  try {
    raw = nlohmann::ordered_json::parse(in);
  } catch (const std::exception& e) {
    throw UsageError("groups file '" + path + "' is not valid JSON: " + e.what());
  }
  if (!raw.is_object()) throw UsageError("groups file must map group names to column lists");
  std::vector<Modality> out;
  for (const auto& [name, cols] : raw.items()) {
    if (!cols.is_array()) throw UsageError("group '" + name + "' must be a list of column names");
    Modality m{name, {}};
    for (const auto& c : cols) {
      if (!c.is_string()) throw UsageError("group '" + name + "' contains a non-string entry");
      m.columns.push_back(c.get<std::string>());
    }
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace detail

inline nlohmann::json run_config_json(const RunConfig& rc) {
  nlohmann::json j = {{"subcommand", rc.subcommand}, {"seed", rc.seed}, {"alpha", rc.alpha}, {"format", rc.format},
                      {"timings", rc.timings}};
  if (!rc.data.empty()) j["data"] = rc.data;
  if (!rc.response.empty()) j["response"] = rc.response;
  if (!rc.x.empty()) j["x"] = rc.x;
  if (!rc.z.empty()) j["z"] = rc.z;
  if (!rc.candidates.empty()) j["candidates"] = rc.candidates;
  if (!rc.groups.empty()) j["groups"] = rc.groups;
  return j;
}

inline int run_gcm(const RunConfig& rc, std::ostream& out) {
  const auto ds = detail::load(rc.data);
  detail::check_columns(ds, {rc.response});
  detail::check_columns(ds, rc.x);
  detail::check_columns(ds, rc.z);
  const auto engines = detail::resolve_engines(rc.engines);
  Blocks blocks;
  try {
    blocks = select_blocks(ds, {rc.response, rc.x, rc.z});
  } catch (const RoleError& e) {
    throw UsageError(e.what());
  }
  const auto result = gcm_test(blocks.y, blocks.X, blocks.Z, engines.yz, engines.xz, RngStream(rc.seed));

  auto config = run_config_json(rc);
  config["engines"] = detail::engines_json(engines, TestKind::gcm);
  if (rc.format == "csv") {
    detail::emit(rc, detail::csv_preamble(config) + detail::single_test_csv("gcm", result.p_value, result.statistic,
                                                                             result.df),
                 out);
  } else {
    auto j = to_json(result);
    j["run_config"] = config;
    j["tool"] = detail::tool_json();
    detail::emit(rc, detail::json_text(j), out);
  }
  out << "p=" << nlohmann::json(result.p_value).dump() << '\n';
  return kExitOk;
}

inline int run_pcm(const RunConfig& rc, std::ostream& out) {
  const auto ds = detail::load(rc.data);
  detail::check_columns(ds, {rc.response});
  detail::check_columns(ds, rc.x);
  detail::check_columns(ds, rc.z);
  const auto engines = detail::resolve_engines(rc.engines);
  Blocks blocks;
  try {
    blocks = select_blocks(ds, {rc.response, rc.x, rc.z});
  } catch (const RoleError& e) {
    throw UsageError(e.what());
  }
  const auto tc = detail::make_test_config(TestKind::pcm, engines, rc.k, rc.alpha);
  const auto result = pcm_test(blocks.y, blocks.X, blocks.Z, rc.k, tc.pcm, RngStream(rc.seed));

  auto config = run_config_json(rc);
  config["k"] = rc.k;
  config["engines"] = detail::engines_json(engines, TestKind::pcm);
  if (rc.format == "csv") {
    detail::emit(rc, detail::csv_preamble(config) + detail::single_test_csv("pcm", result.p_value,
                                                                             result.statistic_avg, result.K),
                 out);
  } else {
    auto j = to_json(result);
    j["run_config"] = config;
    j["tool"] = detail::tool_json();
    detail::emit(rc, detail::json_text(j), out);
  }
  out << "p=" << nlohmann::json(result.p_value).dump() << '\n';
  return kExitOk;
}

inline void emit_family(const RunConfig& rc, const TestReport& report, nlohmann::json config, std::ostream& out,
                        std::ostream& err) {
  for (const auto& w : report.warnings) err << "warning: " << w << '\n';
  for (const auto& row : report.rows) {
    if (row.error) err << "warning: hypothesis '" << row.label << "' failed: " << *row.error << '\n';
  }
  const ReportOptions options{rc.timings};
  if (rc.format == "csv") {
    std::ostringstream s;
    s << detail::csv_preamble(config);
    write_report_csv(s, report, options);
    detail::emit(rc, s.str(), out);
  } else {
    auto j = to_json(report, options);
    j["run_config"] = std::move(config);
    j["tool"] = detail::tool_json();
    detail::emit(rc, detail::json_text(j), out);
  }
}

inline int run_sweep(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  const auto ds = detail::load(rc.data);
  detail::check_columns(ds, {rc.response});
  detail::check_columns(ds, rc.z);
  std::vector<std::string> candidates = rc.candidates;
  if (candidates.empty()) {
    for (const auto& name : ds.names()) {
      if (name == rc.response || std::find(rc.z.begin(), rc.z.end(), name) != rc.z.end()) continue;
      candidates.push_back(name);
    }
  }
  detail::check_columns(ds, candidates);
  const auto kind = test_kind_from_string(rc.test);
  const auto engines = detail::resolve_engines(rc.engines);
  const auto tc = detail::make_test_config(kind, engines, rc.k, rc.alpha);
  TestReport report;
  try {
    report = variable_sweep(ds, rc.response, candidates, tc, RngStream(rc.seed), rc.z);
  } catch (const RoleError& e) {
    throw UsageError(e.what());
  }
  auto config = run_config_json(rc);
  config["candidates"] = candidates;
  config["test"] = rc.test;
  if (kind == TestKind::pcm) config["k"] = rc.k;
  config["engines"] = detail::engines_json(engines, kind);
  emit_family(rc, report, std::move(config), out, err);
  return kExitOk;
}

inline int run_modality(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  const auto ds = detail::load(rc.data);
  nlohmann::ordered_json raw_groups;
  const auto modalities = detail::read_groups(rc.groups, raw_groups);
  detail::check_columns(ds, {rc.response});
  detail::check_columns(ds, rc.z);
  for (const auto& m : modalities) detail::check_columns(ds, m.columns);
  const auto kind = test_kind_from_string(rc.test);
  const auto engines = detail::resolve_engines(rc.engines);
  const auto tc = detail::make_test_config(kind, engines, rc.k, rc.alpha);
  TestReport report;
  try {
    report = modality_select(ds, rc.response, modalities, tc, RngStream(rc.seed), rc.z);
  } catch (const RoleError& e) {
    throw UsageError(e.what());
  }
  auto config = run_config_json(rc);
  config["test"] = rc.test;
  config["group_definitions"] = nlohmann::json::parse(raw_groups.dump());
  if (kind == TestKind::pcm) config["k"] = rc.k;
  config["engines"] = detail::engines_json(engines, kind);
  emit_family(rc, report, std::move(config), out, err);
  return kExitOk;
}

// Experiment description shared by the config file and the flags.
inline ExperimentConfig experiment_from(const RunConfig& rc, detail::ResolvedEngines& engines, std::string& test) {
  ExperimentConfig ec;
  ec.dgp = rc.dgp;
  ec.dgp.noise = rc.noise;
  ec.replicates = rc.replicates;
  ec.alpha = rc.alpha;
  ec.seed = rc.seed;
  std::size_t k = rc.k;
  EngineFlags flags = rc.engines;

  if (!rc.config_path.empty()) {
    std::ifstream in(rc.config_path);
    if (!in) throw UsageError("cannot open experiment config '" + rc.config_path + "'");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
      if (j.contains("dgp")) {
        const auto& d = j["dgp"];
        ec.dgp.name = d.value("name", ec.dgp.name);
        ec.dgp.n = d.value("n", ec.dgp.n);
        ec.dgp.d_x = d.value("d_x", ec.dgp.d_x);
        ec.dgp.d_z = d.value("d_z", ec.dgp.d_z);
        ec.dgp.theta = d.value("theta", ec.dgp.theta);
        if (d.contains("noise")) ec.dgp.noise = d["noise"].get<double>();
      }
      ec.replicates = j.value("replicates", ec.replicates);
      ec.alpha = j.value("alpha", ec.alpha);
      test = j.value("test", test);
      k = j.value("K", k);
      if (j.contains("engines")) {
        const auto& e = j["engines"];
        auto text = [&](const char* key, std::string& slot) {
          if (e.contains(key)) slot = e[key].is_string() ? e[key].get<std::string>() : e[key].dump();
        };
        text("default", flags.all);
        text("yz", flags.yz);
        text("xz", flags.xz);
        text("g", flags.g);
        text("m", flags.m);
        text("v", flags.v);
        text("d1_yz", flags.d1_yz);
        text("d1_fz", flags.d1_fz);
        flags.binary_variance = e.value("binary_variance", flags.binary_variance);
      }
    } catch (const UsageError&) {
      throw;
    } catch (const std::exception& e) {
      throw UsageError("experiment config '" + rc.config_path + "': " + e.what());
    }
  }
  try {
    validate(ec.dgp);
  } catch (const SpecError& e) {
    throw UsageError(e.what());
  }
  engines = detail::resolve_engines(flags);
  ec.test = detail::make_test_config(test_kind_from_string(test), engines, k, ec.alpha);
  return ec;
}

inline int run_simulate(const RunConfig& rc, std::ostream& out) {
  detail::ResolvedEngines engines;
  std::string test = rc.test;
  const auto ec = experiment_from(rc, engines, test);
  ExperimentResult result;
  if (rc.mode == "calibration") {
    if (!satisfies_null(ec.dgp)) {
      throw UsageError("--mode calibration needs a null process; '" + ec.dgp.name + "' is an alternative");
    }
    result = run_calibration(ec);
  } else {
    result = run_power(ec);
  }
  const ReportOptions options{rc.timings};
  auto config = run_config_json(rc);
  config["mode"] = rc.mode;
  if (!rc.config_path.empty()) config["config_file"] = rc.config_path;
  config["experiment"] = describe(ec);
  if (!rc.pvalues_path.empty()) {
    std::ofstream f(rc.pvalues_path, std::ios::binary);
    if (!f) throw Error("cannot write '" + rc.pvalues_path + "'");
    write_replicates_csv(f, result, options);
  }
  if (rc.format == "csv") {
    std::ostringstream s;
    s << detail::csv_preamble(config);
    write_replicates_csv(s, result, options);
    detail::emit(rc, s.str(), out);
  } else {
    auto j = to_json(result, options);
    j["run_config"] = config;
    j["tool"] = detail::tool_json();
    detail::emit(rc, detail::json_text(j), out);
  }
  out << "rejection_rate=" << nlohmann::json(result.rejection_rate).dump() << '\n';
  return kExitOk;
}

inline int run_bench(const RunConfig& rc, std::ostream& out) {
  const auto kind = test_kind_from_string(rc.test);
  const auto engines = detail::resolve_engines(rc.engines);
  const auto tc = detail::make_test_config(kind, engines, rc.k, rc.alpha);
  std::vector<std::pair<std::size_t, std::size_t>> grid;
  for (auto n : rc.ns)
    for (auto d : rc.ds) grid.emplace_back(n, d);
  std::vector<TimingCell> cells;
  try {
    cells = run_timing(grid, tc, rc.repeats, rc.seed, rc.dgp.name);
  } catch (const SpecError& e) {
    throw UsageError(e.what());
  }

  std::ostringstream table;
  write_timing_csv(table, cells, rc.test);
  if (rc.table_path.empty()) {
    out << table.str();
  } else {
    std::ofstream f(rc.table_path, std::ios::binary);
    if (!f) throw Error("cannot write '" + rc.table_path + "'");
    f << table.str();
  }

  auto config = run_config_json(rc);
  config["test"] = rc.test;
  config["ns"] = rc.ns;
  config["ds"] = rc.ds;
  config["repeats"] = rc.repeats;
  config["dgp"] = rc.dgp.name;
  if (kind == TestKind::pcm) config["k"] = rc.k;
  config["engines"] = detail::engines_json(engines, kind);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& c : cells) rows.push_back({{"n", c.n}, {"d", c.d}, {"regressions", c.regression_count}});
  nlohmann::json j = {{"test", rc.test}, {"cells", rows}, {"run_config", config}, {"tool", detail::tool_json()}};
  if (!rc.out.empty()) detail::emit(rc, detail::json_text(j), out);
  return kExitOk;
}

// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Conditional independence testing with covariance measure tests (GCM, PCM)", "comets"};
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
  app.require_subcommand(1);
  RunConfig rc;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", rc.seed, "Master seed (required)")->required();
    sub->add_option("--out", rc.out, "Report path (default: standard output)");
    sub->add_option("--format", rc.format, "Report format")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--threads", rc.threads, "Worker cap; does not change results");
    sub->add_option("--alpha", rc.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
    sub->add_flag("-v,--verbose", rc.verbosity, "More diagnostics on standard error");
    sub->add_flag("--timings", rc.timings, "Include wall-clock seconds in the report");
  };
  auto data_opts = [&](CLI::App* sub, bool x_required) {
    sub->add_option("--data", rc.data, "CSV file with a header row")->required()->check(CLI::ExistingFile);
    sub->add_option("--response", rc.response, "Response column")->required();
    auto* x = sub->add_option("--x", rc.x, "Candidate columns (comma separated)")->delimiter(',');
    if (x_required) x->required();
    sub->add_option("--z", rc.z, "Conditioning columns (comma separated)")->delimiter(',');
  };
  auto gcm_engines = [&](CLI::App* sub) {
    sub->add_option("--engine", rc.engines.all, "Engine JSON for every slot");
    sub->add_option("--engine-yz", rc.engines.yz, "Engine JSON for Y ~ Z");
    sub->add_option("--engine-xz", rc.engines.xz, "Engine JSON for X_j ~ Z");
  };
  auto pcm_engines = [&](CLI::App* sub) {
    sub->add_option("--engine-g", rc.engines.g, "Engine JSON for Y ~ (X, Z) on D2");
    sub->add_option("--engine-m", rc.engines.m, "Engine JSON for Y ~ Z on D2");
    sub->add_option("--engine-v", rc.engines.v, "Engine JSON for the conditional variance (default: as g)");
    sub->add_option("--engine-d1-yz", rc.engines.d1_yz, "Engine JSON for Y ~ Z on D1");
    sub->add_option("--engine-d1-fz", rc.engines.d1_fz, "Engine JSON for f(X, Z) ~ Z on D1");
    sub->add_flag("--binary-variance", rc.engines.binary_variance, "Use g(1 - g) as variance for 0/1 responses");
    sub->add_option("--k", rc.k, "Number of sample splits")->check(CLI::PositiveNumber);
  };

  auto* gcm = app.add_subcommand("gcm", "Generalised covariance measure test");
  common(gcm);
  data_opts(gcm, true);
  gcm_engines(gcm);

  auto* pcm = app.add_subcommand("pcm", "Projected covariance measure test");
  common(pcm);
  data_opts(pcm, true);
  pcm->add_option("--engine", rc.engines.all, "Engine JSON for every slot");
  pcm_engines(pcm);

  auto* sweep = app.add_subcommand("sweep", "Test every candidate given all other candidates (Holm adjusted)");
  common(sweep);
  sweep->add_option("--data", rc.data, "CSV file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--response", rc.response, "Response column")->required();
  sweep->add_option("--candidates", rc.candidates, "Candidate columns (default: all others)")->delimiter(',');
  sweep->add_option("--z", rc.z, "Columns conditioned on in every test")->delimiter(',');
  sweep->add_option("--test", rc.test, "gcm or pcm")->check(CLI::IsMember({"gcm", "pcm"}));
  gcm_engines(sweep);
  pcm_engines(sweep);

  auto* modality = app.add_subcommand("modality", "Test every modality given the others (Holm adjusted)");
  common(modality);
  modality->add_option("--data", rc.data, "CSV file")->required()->check(CLI::ExistingFile);
  modality->add_option("--response", rc.response, "Response column")->required();
  modality->add_option("--groups", rc.groups, "JSON file {\"group\": [columns...]}")
      ->required()
      ->check(CLI::ExistingFile);
  modality->add_option("--z", rc.z, "Columns conditioned on in every test")->delimiter(',');
  modality->add_option("--test", rc.test, "gcm or pcm (default pcm)")->check(CLI::IsMember({"gcm", "pcm"}));
  gcm_engines(modality);
  pcm_engines(modality);

  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo calibration or power study");
  common(simulate);
  simulate->add_option("--config", rc.config_path, "Experiment JSON file")->check(CLI::ExistingFile);
  simulate->add_option("--mode", rc.mode, "calibration (requires a null process), power or auto")
      ->check(CLI::IsMember({"calibration", "power", "auto"}));
  simulate->add_option("--dgp", rc.dgp.name, "Catalog process name");
  simulate->add_option("--n", rc.dgp.n, "Sample size");
  simulate->add_option("--dx", rc.dgp.d_x, "Width of X");
  simulate->add_option("--dz", rc.dgp.d_z, "Width of Z");
  simulate->add_option("--theta", rc.dgp.theta, "Effect size for partially-linear and sweep-planted");
  simulate->add_option("--noise", rc.noise, "Response noise scale");
  simulate->add_option("--reps", rc.replicates, "Replicates")->check(CLI::PositiveNumber);
  simulate->add_option("--test", rc.test, "gcm or pcm")->check(CLI::IsMember({"gcm", "pcm"}));
  simulate->add_option("--pvalues", rc.pvalues_path, "Per-replicate CSV output");
  gcm_engines(simulate);
  pcm_engines(simulate);

  auto* bench = app.add_subcommand("bench", "Median wall-clock over an (n, d) grid");
  common(bench);
  bench->add_option("--ns", rc.ns, "Sample sizes")->delimiter(',');
  bench->add_option("--ds", rc.ds, "Widths of X")->delimiter(',');
  bench->add_option("--repeats", rc.repeats, "Timed repeats per cell (>= 5)");
  bench->add_option("--test", rc.test, "gcm or pcm")->check(CLI::IsMember({"gcm", "pcm"}));
  bench->add_option("--dgp", rc.dgp.name, "Catalog process name");
  bench->add_option("--table", rc.table_path, "Timing CSV path (default: standard output)");
  gcm_engines(bench);
  pcm_engines(bench);

  std::vector<std::string> args;
  for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp") {
      out << app.help();
      return kExitOk;
    }
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  if (modality->parsed() && rc.test == "gcm" && modality->count("--test") == 0) rc.test = "pcm";
  std::unique_ptr<ThreadLimit> limit;
  if (rc.threads > 0) limit = std::make_unique<ThreadLimit>(rc.threads);

  try {
    if (gcm->parsed()) {
      rc.subcommand = "gcm";
      return run_gcm(rc, out);
    }
    if (pcm->parsed()) {
      rc.subcommand = "pcm";
      return run_pcm(rc, out);
    }
    if (sweep->parsed()) {
      rc.subcommand = "sweep";
      return run_sweep(rc, out, err);
    }
    if (modality->parsed()) {
      rc.subcommand = "modality";
      return run_modality(rc, out, err);
    }
    if (simulate->parsed()) {
      rc.subcommand = "simulate";
      return run_simulate(rc, out);
    }
    rc.subcommand = "bench";
    return run_bench(rc, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << " [seed=" << rc.seed << "]\n";
    return kExitRuntime;
  }
}

}  // namespace comets::cli
