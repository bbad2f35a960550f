#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include <safegain/gain_algebra.hpp>
#include <safegain/gains.hpp>
#include <safegain/pendulum.hpp>

namespace safegain {

namespace detail {

// Unknown keys are errors, so a typo in a gain name cannot silently fall
// back to a default.
inline void check_keys(const nlohmann::json& obj, const std::string& context,
                       std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        known = true;
        break;
      }
    if (!known)
      throw std::invalid_argument("unknown key '" + item.key() + "' in " + context);
  }
}

inline double get_number(const nlohmann::json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) throw std::invalid_argument(std::string(key) + " must be a number");
  return obj[key].get<double>();
}

inline std::array<double, 2> get_pair(const nlohmann::json& obj, const char* key,
                                      std::array<double, 2> fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj[key];
  if (v.is_number()) {
    const double s = v.get<double>();
    return {s, s};
  }
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw std::invalid_argument(std::string(key) + " must be a number or an array of 2 numbers");
  return {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace detail

/*!
  Gain descriptor: {"kind":"linear","slope":20.0},
  {"kind":"pwl","knots":[[0,0],[1,2]]} or {"kind":"zero"} (cascade coupling).
*/
inline GainFn parse_gain(const nlohmann::json& j, GainDomain domain = GainDomain::Extended) {
  if (!j.is_object() || !j.contains("kind"))
    throw std::invalid_argument("gain descriptor must be an object with a 'kind'");
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "linear") {
    detail::check_keys(j, "linear gain", {"kind", "slope"});
    if (!j.contains("slope")) throw std::invalid_argument("linear gain needs a 'slope'");
    return GainFn::linear(j["slope"].get<double>(), domain);
  }
  if (kind == "pwl") {
    detail::check_keys(j, "pwl gain", {"kind", "knots"});
    if (!j.contains("knots") || !j["knots"].is_array())
      throw std::invalid_argument("pwl gain needs a 'knots' array");
    std::vector<std::pair<double, double>> knots;
    for (const auto& k : j["knots"]) {
      if (!k.is_array() || k.size() != 2)
        throw std::invalid_argument("pwl knots must be [s, value] pairs");
      knots.emplace_back(k[0].get<double>(), k[1].get<double>());
    }
    return GainFn::piecewise_linear(std::move(knots), domain);
  }
  if (kind == "zero") {
    detail::check_keys(j, "zero gain", {"kind"});
    return GainFn::zero();
  }
  throw std::invalid_argument("unknown gain kind '" + kind + "'");
}

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("config parse error in '" + path + "': " + e.what());
  }
  return j;
}

/*!
  Parses and validates a scenario config. Top-level keys: name, params,
  gains, sigma_slope, init, reference, dt, t_end, use_filter, seed, plus an
  optional smallgain section consumed by parse_small_gain_config(). Every
  key is optional and defaults to the benchmark values.
*/
inline ScenarioConfig parse_scenario_config(const nlohmann::json& root) {
  if (!root.is_object()) throw std::invalid_argument("config root must be an object");
  detail::check_keys(root, "config",
                     {"name", "params", "gains", "sigma_slope", "init", "reference", "dt", "t_end",
                      "use_filter", "seed", "smallgain"});
  ScenarioConfig config;
  if (root.contains("name")) config.name = root["name"].get<std::string>();

  if (root.contains("params")) {
    const auto& p = root["params"];
    detail::check_keys(p, "params", {"g", "l", "k", "M", "m", "b", "a", "theta_min"});
    config.params.g = detail::get_number(p, "g", config.params.g);
    config.params.l = detail::get_number(p, "l", config.params.l);
    config.params.k = detail::get_number(p, "k", config.params.k);
    config.params.M = detail::get_number(p, "M", config.params.M);
    config.params.m = detail::get_number(p, "m", config.params.m);
    config.params.b = detail::get_number(p, "b", config.params.b);
    config.params.a = detail::get_number(p, "a", config.params.a);
    config.params.theta_min = detail::get_pair(p, "theta_min", config.params.theta_min);
  }

  if (root.contains("gains")) {
    const auto& g = root["gains"];
    detail::check_keys(g, "gains", {"r1", "r2", "c1", "c2"});
    config.gains.r1 = detail::get_pair(g, "r1", config.gains.r1);
    config.gains.r2 = detail::get_pair(g, "r2", config.gains.r2);
    config.gains.c1 = detail::get_pair(g, "c1", config.gains.c1);
    config.gains.c2 = detail::get_pair(g, "c2", config.gains.c2);
  }

  config.sigma_slope = detail::get_number(root, "sigma_slope", config.sigma_slope);

  if (root.contains("init")) {
    const auto& init = root["init"];
    if (!init.is_array() || init.size() != 2)
      throw std::invalid_argument("init must be an array of two [angle, velocity] pairs");
    for (int i = 0; i < 2; ++i) {
      const auto& xi = init[static_cast<std::size_t>(i)];
      if (!xi.is_array() || xi.size() != 2)
        throw std::invalid_argument("init entries must be [angle, velocity] pairs");
      config.init[static_cast<std::size_t>(i)] = {xi[0].get<double>(), xi[1].get<double>()};
    }
  }

  if (root.contains("reference")) {
    const auto& ref = root["reference"];
    if (!ref.is_array() || ref.size() != 2)
      throw std::invalid_argument("reference must be an array of two selectors");
    config.reference = {ref[0].get<std::string>(), ref[1].get<std::string>()};
  }

  config.dt = detail::get_number(root, "dt", config.dt);
  config.t_end = detail::get_number(root, "t_end", config.t_end);
  if (root.contains("use_filter")) config.use_filter = root["use_filter"].get<bool>();
  if (root.contains("seed")) config.seed = root["seed"].get<std::uint64_t>();

  config.validate();
  return config;
}

struct SmallGainConfig {
  SubsystemGains gains_1;
  SubsystemGains gains_2;
  std::vector<double> grid = default_small_gain_grid();
};

namespace detail {

inline SubsystemGains parse_subsystem_gains(const nlohmann::json& j, const GainFn& sigma) {
  check_keys(j, "smallgain subsystem", {"alphas", "phi", "gamma"});
  if (!j.contains("alphas") || !j["alphas"].is_array() || j["alphas"].empty())
    throw std::invalid_argument("smallgain subsystem needs a nonempty 'alphas' array");
  SubsystemGains g;
  g.alphas.clear();
  for (const auto& a : j["alphas"]) g.alphas.push_back(parse_gain(a));
  if (j.contains("phi")) g.phi = parse_gain(j["phi"]);
  if (j.contains("gamma")) g.gamma = parse_gain(j["gamma"], GainDomain::NonNegative);
  g.sigma = sigma;
  return g;
}

}  // namespace detail

/*!
  Builds the small-gain check inputs from a config: the explicit "smallgain"
  section when present (subsystem1/subsystem2 gain descriptors, shared sigma,
  optional grid), otherwise the gain set implied by the scenario's benchmark
  parameters.
*/
inline SmallGainConfig parse_small_gain_config(const nlohmann::json& root) {
  SmallGainConfig out;
  if (root.is_object() && root.contains("smallgain")) {
    const auto& sg = root["smallgain"];
    detail::check_keys(sg, "smallgain", {"subsystem1", "subsystem2", "sigma", "grid"});
    if (!sg.contains("subsystem1") || !sg.contains("subsystem2"))
      throw std::invalid_argument("smallgain section needs subsystem1 and subsystem2");
    GainFn sigma = GainFn::linear(0.1);
    if (sg.contains("sigma")) sigma = parse_gain(sg["sigma"]);
    out.gains_1 = detail::parse_subsystem_gains(sg["subsystem1"], sigma);
    out.gains_2 = detail::parse_subsystem_gains(sg["subsystem2"], sigma);
    if (sg.contains("grid")) {
      const auto& gr = sg["grid"];
      detail::check_keys(gr, "smallgain grid", {"log10_min", "log10_max", "points_per_sign"});
      const double lo = detail::get_number(gr, "log10_min", -3.0);
      const double hi = detail::get_number(gr, "log10_max", 3.0);
      const auto pts = static_cast<int>(detail::get_number(gr, "points_per_sign", 61.0));
      if (!(hi > lo) || pts < 2)
        throw std::invalid_argument("smallgain grid must have log10_max > log10_min and >= 2 points");
      out.grid.clear();
      for (int i = pts - 1; i >= 0; --i)
        out.grid.push_back(-std::pow(10.0, lo + (hi - lo) * i / (pts - 1)));
      for (int i = 0; i < pts; ++i)
        out.grid.push_back(std::pow(10.0, lo + (hi - lo) * i / (pts - 1)));
    }
    return out;
  }
  const ScenarioConfig scenario = parse_scenario_config(root);
  out.gains_1 = benchmark_gains(scenario.params, scenario.gains, 0, scenario.sigma_slope);
  out.gains_2 = benchmark_gains(scenario.params, scenario.gains, 1, scenario.sigma_slope);
  return out;
}

}  // namespace safegain
