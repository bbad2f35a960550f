#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <safegain/errors.hpp>
#include <safegain/report.hpp>

namespace safegain {

//! Per-component state magnitude beyond which integration treats the
//! trajectory as escaping in finite time.
inline constexpr double kFiniteEscapeBound = 1e9;

/*!
  An input-driven ODE system dx/dt = f(t, x, u) with an exogenous input
  signal u(t). `vector_field` writes the derivative into its last argument;
  `input_signal` fills the input vector for a given time and may be empty
  when input_dim is 0.
*/
struct SystemSpec {
  int state_dim = 0;
  int input_dim = 0;
  std::function<void(double t, std::span<const double> x, std::span<const double> u,
                     std::span<double> dxdt)>
      vector_field;
  std::function<void(double t, std::span<double> u)> input_signal;
};

/*!
  A fixed-step trajectory record: times, states and inputs sampled on the
  integration grid (row-major, one row per sample). If the integration
  aborted on a non-finite or escaping state, `finite_escape` is set and the
  arrays end at the last valid sample.
*/
struct Trajectory {
  double dt = 0.0;
  int state_dim = 0;
  int input_dim = 0;
  std::vector<double> times;
  std::vector<double> states;
  std::vector<double> inputs;
  std::string meta;
  bool finite_escape = false;
  double last_valid_time = std::numeric_limits<double>::quiet_NaN();

  std::size_t samples() const noexcept { return times.size(); }

  std::span<const double> state(std::size_t j) const {
    return {states.data() + j * static_cast<std::size_t>(state_dim),
            static_cast<std::size_t>(state_dim)};
  }

  std::span<const double> input(std::size_t j) const {
    return {inputs.data() + j * static_cast<std::size_t>(input_dim),
            static_cast<std::size_t>(input_dim)};
  }
};

namespace detail {

inline bool state_ok(std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v) || std::abs(v) > kFiniteEscapeBound) return false;
  return true;
}

//! floor(t_end / dt) with a relative nudge so exact divisions are not lost
//! to the rounding of the quotient.
inline std::size_t step_count(double t_end, double dt) {
  return static_cast<std::size_t>(std::floor(t_end / dt * (1.0 + 1e-12)));
}

}  // namespace detail

/*!
  Classical fixed-step RK4. The input signal is sampled at the stage times
  t, t + dt/2 and t + dt. Integration stops early (with the finite-escape
  flag set) as soon as a step produces a non-finite state or one with a
  component beyond kFiniteEscapeBound; the partial trajectory up to the last
  valid sample is returned.
*/
inline Trajectory integrate(const SystemSpec& sys, std::span<const double> x0, double t_end,
                            double dt, std::string meta = {}) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate: dt must be positive");
  if (!(t_end >= dt)) throw std::invalid_argument("integrate: t_end must be >= dt");
  if (static_cast<int>(x0.size()) != sys.state_dim)
    throw std::invalid_argument("integrate: x0 dimension mismatch");
  if (!sys.vector_field) throw std::invalid_argument("integrate: missing vector field");
  if (sys.input_dim > 0 && !sys.input_signal)
    throw std::invalid_argument("integrate: input_dim > 0 but no input signal");

  const std::size_t n_steps = detail::step_count(t_end, dt);
  const auto nd = static_cast<std::size_t>(sys.state_dim);
  const auto mu = static_cast<std::size_t>(sys.input_dim);

  Trajectory traj;
  traj.dt = dt;
  traj.state_dim = sys.state_dim;
  traj.input_dim = sys.input_dim;
  traj.meta = std::move(meta);
  traj.times.reserve(n_steps + 1);
  traj.states.reserve((n_steps + 1) * nd);
  traj.inputs.reserve((n_steps + 1) * mu);

  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> u(mu, 0.0), u_mid(mu, 0.0), u_end(mu, 0.0);
  std::vector<double> k1(nd), k2(nd), k3(nd), k4(nd), xt(nd);

  auto sample_input = [&](double t, std::vector<double>& dst) {
    if (mu > 0) sys.input_signal(t, dst);
  };
  auto record = [&](double t) {
    traj.times.push_back(t);
    traj.states.insert(traj.states.end(), x.begin(), x.end());
    traj.inputs.insert(traj.inputs.end(), u.begin(), u.end());
  };

  if (!detail::state_ok(x)) throw std::invalid_argument("integrate: non-finite initial state");
  sample_input(0.0, u);
  record(0.0);

  for (std::size_t j = 0; j < n_steps; ++j) {
    const double t = static_cast<double>(j) * dt;
    const double t_next = static_cast<double>(j + 1) * dt;
    sample_input(t + 0.5 * dt, u_mid);
    sample_input(t_next, u_end);

    sys.vector_field(t, x, u, k1);
    for (std::size_t c = 0; c < nd; ++c) xt[c] = x[c] + 0.5 * dt * k1[c];
    sys.vector_field(t + 0.5 * dt, xt, u_mid, k2);
    for (std::size_t c = 0; c < nd; ++c) xt[c] = x[c] + 0.5 * dt * k2[c];
    sys.vector_field(t + 0.5 * dt, xt, u_mid, k3);
    for (std::size_t c = 0; c < nd; ++c) xt[c] = x[c] + dt * k3[c];
    sys.vector_field(t_next, xt, u_end, k4);
    for (std::size_t c = 0; c < nd; ++c)
      x[c] += dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);

    if (!detail::state_ok(x)) {
      traj.finite_escape = true;
      traj.last_valid_time = t;
      return traj;
    }
    u = u_end;
    record(t_next);
  }
  traj.last_valid_time = traj.times.back();
  return traj;
}

/*!
  Descriptor of a sublevel-type set {x : value(x) >= level}. When `normal` is
  nonempty, value is affine with that gradient and point-to-set distances are
  exact; otherwise distances are estimated from the margin via a caller-
  supplied Lipschitz bound.
*/
struct SublevelSetDescriptor {
  std::function<double(std::span<const double>)> value;
  double level = 0.0;
  std::vector<double> normal;
  std::optional<double> lipschitz;
};

inline double point_to_set_distance(std::span<const double> x, const SublevelSetDescriptor& set) {
  const double margin = set.level - set.value(x);
  if (margin <= 0.0) return 0.0;
  if (!set.normal.empty()) {
    double norm_sq = 0.0;
    for (double c : set.normal) norm_sq += c * c;
    if (!(norm_sq > 0.0))
      throw std::invalid_argument("point_to_set_distance: zero normal vector");
    return margin / std::sqrt(norm_sq);
  }
  if (set.lipschitz) {
    if (!(*set.lipschitz > 0.0))
      throw std::invalid_argument("point_to_set_distance: Lipschitz bound must be positive");
    return margin / *set.lipschitz;
  }
  throw MissingLipschitzBound(
      "point_to_set_distance: general set requires a Lipschitz bound for the margin");
}

/*!
  Checks min over samples of margin_fn(x(t)) >= -tol, reporting the worst
  sample and the first crossing time if any.
*/
inline ValidationReport check_forward_invariance(
    const Trajectory& traj, const std::function<double(std::span<const double>)>& margin_fn,
    double tol) {
  ValidationReport report;
  report.subject = "forward invariance";
  bool crossing_reported = false;
  double min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < traj.samples(); ++j) {
    ++report.samples;
    const double margin = margin_fn(traj.state(j));
    if (margin < min_margin) {
      min_margin = margin;
      report.worst = margin;
      report.worst_at = traj.times[j];
    }
    if (margin < -tol) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "set left at t=%.6g (margin %.9g)", traj.times[j], margin);
      ++report.violations;
      report.pass = false;
      if (!crossing_reported) report.add_note(buf);
      crossing_reported = true;
    }
  }
  return report;
}

/*!
  Checks the set-ISS envelope dist(x(t)) <= beta_envelope(dist(x0), t) +
  gain_term + tol sample by sample. The envelope is first sanity-checked to
  be non-increasing in t along the grid (a KL surrogate must be).
*/
inline ValidationReport check_iss_envelope(
    const Trajectory& traj, const std::function<double(std::span<const double>)>& dist_fn,
    const std::function<double(double, double)>& beta_envelope, double gain_term,
    double tol = 1e-6) {
  ValidationReport report;
  report.subject = "set-ISS envelope";
  if (traj.samples() == 0) return report;
  const double d0 = dist_fn(traj.state(0));

  double prev_env = beta_envelope(d0, traj.times[0]);
  for (std::size_t j = 0; j < traj.samples(); ++j) {
    ++report.samples;
    const double env = beta_envelope(d0, traj.times[j]);
    if (env > prev_env + 1e-12) {
      report.add_violation(prev_env - env, traj.times[j],
                           "envelope is not non-increasing in t (not a KL surrogate)");
      return report;
    }
    prev_env = env;
    const double dist = dist_fn(traj.state(j));
    const double slack = env + gain_term + tol - dist;
    if (slack < 0.0) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "envelope exceeded at t=%.6g: dist=%.9g bound=%.9g",
                    traj.times[j], dist, env + gain_term);
      report.add_violation(slack, traj.times[j], buf);
    }
  }
  return report;
}

namespace detail {

inline void append_float(std::string& line, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  line += buf;
}

}  // namespace detail

//! Extra per-sample columns appended to a trajectory CSV.
struct CsvExtraColumns {
  std::vector<std::string> names;
  std::function<void(std::size_t sample, std::span<double> values)> fill;
};

/*!
  Serializes a trajectory as CSV: header `t,x1,...,xn,u1,...,um`, one row per
  sample, 17-significant-digit decimal floats (enough to round-trip a
  double, and byte-stable for identical runs).
*/
inline void write_csv(const Trajectory& traj, std::ostream& out,
                      const CsvExtraColumns* extras = nullptr) {
  std::string line = "t";
  for (int c = 1; c <= traj.state_dim; ++c) line += ",x" + std::to_string(c);
  for (int c = 1; c <= traj.input_dim; ++c) line += ",u" + std::to_string(c);
  if (extras)
    for (const auto& name : extras->names) line += "," + name;
  line += "\n";
  out << line;

  std::vector<double> extra_values(extras ? extras->names.size() : 0, 0.0);
  for (std::size_t j = 0; j < traj.samples(); ++j) {
    line.clear();
    detail::append_float(line, traj.times[j]);
    for (double v : traj.state(j)) {
      line += ',';
      detail::append_float(line, v);
    }
    for (double v : traj.input(j)) {
      line += ',';
      detail::append_float(line, v);
    }
    if (extras) {
      extras->fill(j, extra_values);
      for (double v : extra_values) {
        line += ',';
        detail::append_float(line, v);
      }
    }
    line += "\n";
    out << line;
  }
}

}  // namespace safegain
