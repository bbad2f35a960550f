#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <safegain/config.hpp>
#include <safegain/pendulum.hpp>
#include <safegain/suites.hpp>

namespace safegain {

// Exit-code convention: 0 pass, 1 config/runtime error, 2 safety violation.
inline constexpr int kExitPass = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUnsafe = 2;

//! Command-line values that take precedence over the config file.
struct CliOverrides {
  std::optional<double> dt;
  std::optional<double> t_end;
  std::optional<std::uint64_t> seed;
};

namespace detail {

inline void apply(const CliOverrides& overrides, ScenarioConfig& config) {
  if (overrides.dt) config.dt = *overrides.dt;
  if (overrides.t_end) config.t_end = *overrides.t_end;
  if (overrides.seed) config.seed = *overrides.seed;
  config.validate();
}

inline std::uint64_t pick_seed(const CliOverrides& overrides, const nlohmann::json& root) {
  if (overrides.seed) return *overrides.seed;
  if (root.is_object() && root.contains("seed")) return root["seed"].get<std::uint64_t>();
  return 0;
}

}  // namespace detail

/*!
  `simulate`: run a benchmark scenario, write trajectory.csv and report.txt
  into the output directory, and print a summary. Exit 0 when all declared
  safety margins hold, 2 on a margin violation, 1 on a config or runtime
  error.
*/
inline int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                        const CliOverrides& overrides = {}, std::ostream& out = std::cout) {
  try {
    ScenarioConfig config = parse_scenario_config(load_json_file(config_path));
    detail::apply(overrides, config);
    const BenchmarkResult result = run_scenario(config);

    std::filesystem::create_directories(out_dir);
    const auto csv_path = std::filesystem::path(out_dir) / "trajectory.csv";
    const auto report_path = std::filesystem::path(out_dir) / "report.txt";
    {
      std::ofstream csv(csv_path, std::ios::binary);
      if (!csv) throw std::runtime_error("cannot write " + csv_path.string());
      write_benchmark_csv(result, csv);
    }
    {
      std::ofstream report(report_path, std::ios::binary);
      if (!report) throw std::runtime_error("cannot write " + report_path.string());
      write_benchmark_report(result, config, report);
    }
    write_benchmark_report(result, config, out);
    out << "wrote " << csv_path.string() << " and " << report_path.string() << "\n";
    return result.margins_hold ? kExitPass : kExitUnsafe;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}

/*!
  `check-smallgain`: print the small-gain report as a table. An empty config
  path runs the benchmark's default gain set. Exit 0 on pass, 1 on fail or
  error.
*/
inline int cmd_check_smallgain(const std::string& config_path, std::ostream& out = std::cout) {
  try {
    SmallGainConfig config;
    if (config_path.empty()) {
      const ScenarioConfig defaults;
      config.gains_1 = benchmark_gains(defaults.params, defaults.gains, 0, defaults.sigma_slope);
      config.gains_2 = benchmark_gains(defaults.params, defaults.gains, 1, defaults.sigma_slope);
    } else {
      config = parse_small_gain_config(load_json_file(config_path));
    }
    const SmallGainReport report = check_small_gain(config.gains_1, config.gains_2, config.grid);

    char buf[128];
    out << "small-gain condition |phi_hat_{1,1} o phi_hat_{2,1}(s)| < |s|\n";
    out << "         s       ratio\n";
    for (std::size_t i = 0; i < report.grid.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%10.4g  %10.4g\n", report.grid[i], report.ratios[i]);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "max ratio: %.6g\n", report.max_ratio);
    out << buf;
    if (report.all_linear) {
      std::snprintf(buf, sizeof buf, "closed-form loop ratio (all-linear gains): %.6g\n",
                    report.closed_form_ratio);
      out << buf;
    }
    if (!report.caveat.empty()) out << "caveat: " << report.caveat << "\n";
    out << "verdict: " << (report.pass ? "PASS" : "FAIL") << "\n";
    return report.pass ? kExitPass : kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}

namespace detail {

inline void print_suite(const SuiteResult& result, std::ostream& out) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "suite %-12s %zu checks, %zu failures, worst slack %.3g -> %s\n",
                result.name.c_str(), result.cases, result.failures, result.worst,
                result.pass() ? "PASS" : "FAIL");
  out << buf;
  for (const auto& note : result.notes) out << "  " << note << "\n";
}

}  // namespace detail

/*!
  `verify`: run one of the randomized property suites (margin-form,
  comparison, invariance, weak-ineq), deterministic for a given seed.
*/
inline int cmd_verify(const std::string& suite, const std::string& config_path,
                      const CliOverrides& overrides = {}, std::ostream& out = std::cout) {
  try {
    nlohmann::json root;
    if (!config_path.empty()) root = load_json_file(config_path);
    const std::uint64_t seed = detail::pick_seed(overrides, root);

    SuiteResult result;
    if (suite == "margin-form")
      result = run_margin_form_suite(seed);
    else if (suite == "comparison")
      result = run_comparison_suite(seed);
    else if (suite == "invariance")
      result = run_invariance_suite(seed);
    else if (suite == "weak-ineq")
      result = run_weak_inequality_suite(seed);
    else {
      std::cerr << "error: unknown suite '" << suite
                << "' (expected margin-form, comparison, invariance or weak-ineq)\n";
      return kExitError;
    }
    out << "seed: " << seed << "\n";
    detail::print_suite(result, out);
    return result.pass() ? kExitPass : kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}

//! `compare-lemma`: the comparison-lemma randomized suite plus the analytic
//! linear-decay spot checks.
inline int cmd_compare_lemma(const std::string& config_path, const CliOverrides& overrides = {},
                             std::ostream& out = std::cout) {
  try {
    nlohmann::json root;
    if (!config_path.empty()) root = load_json_file(config_path);
    const std::uint64_t seed = detail::pick_seed(overrides, root);

    const GainFn unit = GainFn::linear(1.0);
    double worst_analytic = 0.0;
    for (double s : {-2.0, -0.5, 0.0, 0.5, 2.0})
      for (double t : {0.0, 0.5, 1.0, 2.0, 5.0})
        worst_analytic = std::max(worst_analytic,
                                  std::abs(beta(unit, s, t, 1e-3) - s * std::exp(-t)));
    char buf[128];
    std::snprintf(buf, sizeof buf,
                  "analytic check (alpha linear): max |beta(s,t) - s e^{-t}| = %.3g\n",
                  worst_analytic);
    out << buf;

    SuiteResult result = run_comparison_suite(seed);
    out << "seed: " << seed << "\n";
    detail::print_suite(result, out);
    const bool pass = result.pass() && worst_analytic <= 1e-6;
    out << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? kExitPass : kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace safegain
