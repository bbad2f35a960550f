#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <safegain/barrier_chain.hpp>
#include <safegain/errors.hpp>
#include <safegain/gain_algebra.hpp>
#include <safegain/gains.hpp>
#include <safegain/simulator.hpp>

namespace safegain {

//! Integration-error allowance on the benchmark safety margins.
inline constexpr double kSafetyMarginTol = 1e-3;

/*!
  Physical parameters of the two spring-coupled inverted pendulums on carts.
  SI units; `a` is the (constant) attachment distance of the spring along the
  pendulum and `b` the cart separation. theta_min holds the angular lower
  bounds of the two safety constraints theta_i >= theta_min_i.
*/
struct PendulumParams {
  double g = 9.8;
  double l = 1.0;
  double k = 1.0;
  double M = 15.0;
  double m = 5.0;
  double b = 2.0;
  double a = 0.75;
  std::array<double, 2> theta_min{{-0.4, -0.5}};

  double w() const noexcept { return m / (M + m); }
  double wml2() const noexcept { return w() * m * l * l; }
  //! Coupling gain slope a*k*(a - w*l) / (w*m*l^2).
  double coupling_slope() const noexcept { return a * k * (a - w() * l) / wml2(); }

  void validate() const {
    for (double v : {g, l, k, M, m, b}) {
      if (!(v > 0.0) || !std::isfinite(v))
        throw std::invalid_argument("pendulum params must be positive and finite");
    }
    if (!(a >= 0.0 && a <= l))
      throw std::invalid_argument("spring attachment a must lie in [0, l]");
    const double w_val = w();
    if (!(w_val > 0.0 && w_val < 1.0))
      throw std::invalid_argument("mass ratio w must lie in (0, 1)");
    for (double v : theta_min)
      if (!std::isfinite(v)) throw std::invalid_argument("theta_min must be finite");
  }
};

//! Backstepping gains r1, r2 and barrier chain slopes c1, c2, per subsystem.
struct ControllerGains {
  std::array<double, 2> r1{{10.0, 10.0}};
  std::array<double, 2> r2{{5.0, 5.0}};
  std::array<double, 2> c1{{20.0, 20.0}};
  std::array<double, 2> c2{{10.0, 10.0}};

  void validate() const {
    for (const auto& arr : {r1, r2, c1, c2})
      for (double v : arr)
        if (!(v > 0.0) || !std::isfinite(v))
          throw std::invalid_argument("controller gains must be positive and finite");
  }
};

//! A reference trajectory sample: value and its first two derivatives.
struct Reference {
  double y = 0.0;
  double dy = 0.0;
  double ddy = 0.0;
};

using ReferenceFn = std::function<Reference(double)>;

//! Selectors: "sin", "cos" (the benchmark pair) and "zero".
inline ReferenceFn make_reference(std::string_view selector) {
  if (selector == "sin")
    return [](double t) { return Reference{std::sin(t), std::cos(t), -std::sin(t)}; };
  if (selector == "cos")
    return [](double t) { return Reference{std::cos(t), -std::sin(t), -std::cos(t)}; };
  if (selector == "zero") return [](double) { return Reference{0.0, 0.0, 0.0}; };
  throw std::invalid_argument("unknown reference selector '" + std::string(selector) + "'");
}

/*!
  The coupled pendulum dynamics, subsystem state (theta_i, dtheta_i) stacked
  as x = (x11, x12, x21, x22):

    dx_{i,1} = x_{i,2}
    dx_{i,2} = (g/wl) x_{i,1} - (m/M) x_{i,2}^2 sin x_{i,1}
               - (a k (a-wl)/(w m l^2)) x_{i,1} + k b (a-wl)/(w m l^2)
               + u_i/(w m l^2) + (a k (a-wl)/(w m l^2)) x_{3-i,1}.
*/
inline std::array<double, 4> pendulum_dynamics(const PendulumParams& p, double /*t*/,
                                               std::span<const double> x,
                                               std::span<const double> u) {
  const double wml2 = p.wml2();
  const double grav = p.g / (p.w() * p.l);
  const double cent = p.m / p.M;
  const double couple = p.coupling_slope();
  const double spring_lin = couple;                          // same coefficient on own angle
  const double spring_const = p.k * p.b * (p.a - p.w() * p.l) / wml2;

  std::array<double, 4> dx{};
  for (int i = 0; i < 2; ++i) {
    const double x1 = x[2 * i];
    const double x2 = x[2 * i + 1];
    const double x_other = x[2 * (1 - i)];
    dx[2 * i] = x2;
    dx[2 * i + 1] = grav * x1 - cent * x2 * x2 * std::sin(x1) - spring_lin * x1 + spring_const +
                    u[static_cast<std::size_t>(i)] / wml2 + couple * x_other;
  }
  return dx;
}

/*!
  Backstepping tracking controller for subsystem i (0-based):

    u_hat_i = w m l^2 ( -r_{i,2} z_{i,2} - W_i
                        - (a k (a-wl)/(2 w m l^2)) (z_{i,2} + 2 y_{r,3-i}) )

  with z_{i,1} = x_{i,1} - y_{r,i}, varpi_i = -r_{i,1} z_{i,1} + dy_{r,i},
  z_{i,2} = x_{i,2} - varpi_i, dvarpi_i = -r_{i,1}(x_{i,2} - dy_{r,i}) +
  ddy_{r,i}, and W_i the feedback-linearizing residual.
*/
inline double nominal_controller(const PendulumParams& p, const ControllerGains& gains, int i,
                                 double /*t*/, std::span<const double> x_i, const Reference& ref,
                                 double y_ref_other) {
  const double wml2 = p.wml2();
  const double x1 = x_i[0];
  const double x2 = x_i[1];
  const double z1 = x1 - ref.y;
  const double varpi = -gains.r1[static_cast<std::size_t>(i)] * z1 + ref.dy;
  const double z2 = x2 - varpi;
  const double dvarpi = -gains.r1[static_cast<std::size_t>(i)] * (x2 - ref.dy) + ref.ddy;
  const double couple = p.coupling_slope();
  const double W = z1 - dvarpi + p.g / (p.w() * p.l) * x1 - p.m / p.M * x2 * x2 * std::sin(x1) -
                   couple * x1 + p.k * p.b * (p.a - p.w() * p.l) / wml2;
  return wml2 * (-gains.r2[static_cast<std::size_t>(i)] * z2 - W -
                 0.5 * couple * (z2 + 2.0 * y_ref_other));
}

/*!
  The affine-in-input decomposition of the chain's top level for subsystem i,
  eta_{i,2} = psi_{i,1}(x_i) + psi_{i,0} u_i + phi_i(h_{3-i}):

    psi_{i,1} = (g/wl) x_{i,1} - (m/M) x_{i,2}^2 sin x_{i,1}
                + c_{i,1} x_{i,2} + c_{i,2} eta_{i,1}
                - (k (a-wl)/(w m l^2)) (a x_{i,1} - b - theta_min_{3-i}),
    psi_{i,0} = 1 / (w m l^2).
*/
inline std::pair<double, double> psi_terms(const PendulumParams& p, const ControllerGains& gains,
                                           int i, std::span<const double> x_i) {
  const double x1 = x_i[0];
  const double x2 = x_i[1];
  const double c1 = gains.c1[static_cast<std::size_t>(i)];
  const double c2 = gains.c2[static_cast<std::size_t>(i)];
  const double eta1 = x2 + c1 * (x1 - p.theta_min[static_cast<std::size_t>(i)]);
  const double q = p.k * (p.a - p.w() * p.l) / p.wml2();
  const double psi1 = p.g / (p.w() * p.l) * x1 - p.m / p.M * x2 * x2 * std::sin(x1) + c1 * x2 +
                      c2 * eta1 - q * (p.a * x1 - p.b - p.theta_min[static_cast<std::size_t>(1 - i)]);
  const double psi0 = 1.0 / p.wml2();
  return {psi1, psi0};
}

/*!
  Closed-form scalar safety filter: the projection of u_hat onto
  {u : psi1 + psi0 * u >= 0}.

  Throws InfeasibleError when psi0 = 0 and psi1 < 0 (empty constraint set).
*/
inline double qp_filter(double u_hat, double psi1, double psi0) {
  if (psi0 > 0.0) return std::max(u_hat, -psi1 / psi0);
  if (psi0 < 0.0) return std::min(u_hat, -psi1 / psi0);
  if (psi1 >= 0.0) return u_hat;
  throw InfeasibleError("qp_filter: psi0 = 0 with psi1 < 0 admits no input");
}

//! The relative-degree-two barrier chain of subsystem i over the full
//! 4-dimensional state and the 2-dimensional torque input.
inline BarrierChain benchmark_chain(const PendulumParams& p, const ControllerGains& gains, int i) {
  const double theta_floor = p.theta_min[static_cast<std::size_t>(i)];
  const double c1 = gains.c1[static_cast<std::size_t>(i)];
  const double c2 = gains.c2[static_cast<std::size_t>(i)];
  auto h = [p, i, theta_floor](std::span<const double> x) { return x[2 * i] - theta_floor; };
  ScalarField eta0 = [h](std::span<const double> x, std::span<const double>) { return h(x); };
  ScalarField eta1 = [i, c1, theta_floor](std::span<const double> x, std::span<const double>) {
    return x[2 * i + 1] + c1 * (x[2 * i] - theta_floor);
  };
  ScalarField eta2 = [p, i, c1, c2, theta_floor](std::span<const double> x,
                                                 std::span<const double> u) {
    const auto dx = pendulum_dynamics(p, 0.0, x, u);
    const double eta1_val = x[2 * i + 1] + c1 * (x[2 * i] - theta_floor);
    const double eta1_dot = dx[2 * i + 1] + c1 * x[2 * i + 1];
    return eta1_dot + c2 * eta1_val;
  };
  return make_barrier_chain(h, {eta0, eta1, eta2},
                            {GainFn::linear(c1), GainFn::linear(c2)});
}

//! The benchmark gain set of subsystem i for the small-gain machinery:
//! linear chain gains c1, c2, the derived coupling slope as phi, unit input
//! gain, and the configured slack slope.
inline SubsystemGains benchmark_gains(const PendulumParams& p, const ControllerGains& gains, int i,
                                      double sigma_slope) {
  SubsystemGains g;
  g.alphas = {GainFn::linear(gains.c1[static_cast<std::size_t>(i)]),
              GainFn::linear(gains.c2[static_cast<std::size_t>(i)])};
  g.phi = GainFn::linear(p.coupling_slope());
  g.gamma = GainFn::linear(1.0, GainDomain::NonNegative);
  g.sigma = GainFn::linear(sigma_slope);
  return g;
}

/*!
  One benchmark run: physical parameters, controller gains, initial
  conditions, reference selectors and integration settings.
*/
struct ScenarioConfig {
  std::string name = "scenario";
  PendulumParams params{};
  ControllerGains gains{};
  double sigma_slope = 0.1;
  std::array<std::array<double, 2>, 2> init{{{0.5, 1.0}, {0.5, 1.0}}};
  std::array<std::string, 2> reference{{"sin", "cos"}};
  double dt = 1e-3;
  double t_end = 20.0;
  bool use_filter = true;
  std::uint64_t seed = 0;

  void validate() const {
    params.validate();
    gains.validate();
    if (!std::isfinite(dt) || !(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (dt > 0.1) throw std::invalid_argument("dt must be at most 0.1");
    if (!std::isfinite(t_end) || t_end < dt)
      throw std::invalid_argument("t_end must be at least dt");
    if (t_end > 1e4) throw std::invalid_argument("t_end must be at most 1e4");
    if (!(sigma_slope > 0.0) || !std::isfinite(sigma_slope))
      throw std::invalid_argument("sigma slope must be positive and finite");
    for (const auto& xi : init)
      for (double v : xi)
        if (!std::isfinite(v)) throw std::invalid_argument("initial state must be finite");
    for (const auto& sel : reference) make_reference(sel);  // validates the selector
  }
};

//! Per-sample derived benchmark signals, in CSV column order.
struct DerivedSample {
  double h1, h2, eta11, eta21, u1_nom, u1_filt, u2_nom, u2_filt;
};

struct BenchmarkResult {
  Trajectory traj;
  std::vector<DerivedSample> derived;
  std::array<double, 2> min_h{};            // min over t of h_i
  std::array<double, 2> t_entry{};          // NaN when the safe set is never (re)entered
  std::array<bool, 2> entered{};            // entry time exists
  std::array<bool, 2> safe_throughout{};    // h_i >= -kSafetyMarginTol for all t
  std::array<bool, 2> started_safe{};       // h_i(0) >= 0
  std::array<double, 2> max_tracking_error{};
  std::array<std::size_t, 2> tracking_samples{};
  std::array<double, 2> min_barrier_slack{};  // min over t of eta_{i,2} - phi_i(h_{3-i})
  SmallGainReport smallgain;
  bool backstepping_gain_ok = false;
  bool margins_hold = false;
};

/*!
  Runs the closed-loop benchmark: decentralized backstepping tracking through
  the safety filter on both pendulums, then derives per-sample barrier
  signals, safety margins, entry times and tracking statistics.

  The safety verdict `margins_hold` demands, per pendulum: if it starts
  safe, it never leaves the safe set (beyond the kSafetyMarginTol
  allowance); if it starts unsafe, it enters the safe set at some finite
  time and never leaves afterwards.
*/
inline BenchmarkResult run_scenario(const ScenarioConfig& config) {
  config.validate();
  const PendulumParams& p = config.params;
  const ControllerGains& gains = config.gains;
  const std::array<ReferenceFn, 2> refs{make_reference(config.reference[0]),
                                        make_reference(config.reference[1])};

  BenchmarkResult result;
  result.smallgain = check_small_gain(benchmark_gains(p, gains, 0, config.sigma_slope),
                                      benchmark_gains(p, gains, 1, config.sigma_slope));
  // Combined backstepping small-gain condition chi1(chi2(s)/lambda2)/lambda1 < s
  // with chi_i(s) = (coupling/2) s and lambda_i = min{r_{i,1}, r_{i,2}}.
  {
    const double chi = 0.5 * p.coupling_slope();
    const double lambda1 = std::min(gains.r1[0], gains.r2[0]);
    const double lambda2 = std::min(gains.r1[1], gains.r2[1]);
    result.backstepping_gain_ok = (chi * chi) / (lambda1 * lambda2) < 1.0;
  }

  const bool use_filter = config.use_filter;
  auto controls = [&](double t, std::span<const double> x, std::array<double, 2>& u_nom,
                      std::array<double, 2>& u_filt) {
    for (int i = 0; i < 2; ++i) {
      const std::span<const double> x_i = x.subspan(static_cast<std::size_t>(2 * i), 2);
      const Reference ref = refs[static_cast<std::size_t>(i)](t);
      const double y_other = refs[static_cast<std::size_t>(1 - i)](t).y;
      u_nom[static_cast<std::size_t>(i)] = nominal_controller(p, gains, i, t, x_i, ref, y_other);
      if (use_filter) {
        const auto [psi1, psi0] = psi_terms(p, gains, i, x_i);
        u_filt[static_cast<std::size_t>(i)] =
            qp_filter(u_nom[static_cast<std::size_t>(i)], psi1, psi0);
      } else {
        u_filt[static_cast<std::size_t>(i)] = u_nom[static_cast<std::size_t>(i)];
      }
    }
  };

  SystemSpec closed_loop;
  closed_loop.state_dim = 4;
  closed_loop.input_dim = 0;
  closed_loop.vector_field = [&](double t, std::span<const double> x, std::span<const double>,
                                 std::span<double> dxdt) {
    std::array<double, 2> u_nom{}, u_filt{};
    controls(t, x, u_nom, u_filt);
    const auto dx = pendulum_dynamics(p, t, x, u_filt);
    std::copy(dx.begin(), dx.end(), dxdt.begin());
  };

  const std::array<double, 4> x0{config.init[0][0], config.init[0][1], config.init[1][0],
                                 config.init[1][1]};
  result.traj = integrate(closed_loop, x0, config.t_end, config.dt, config.name);

  const std::array<BarrierChain, 2> chains{benchmark_chain(p, gains, 0),
                                           benchmark_chain(p, gains, 1)};
  const double phi_slope = p.coupling_slope();
  const std::size_t n = result.traj.samples();
  result.derived.reserve(n);
  result.min_h = {std::numeric_limits<double>::infinity(),
                  std::numeric_limits<double>::infinity()};
  result.min_barrier_slack = result.min_h;
  result.max_tracking_error = {0.0, 0.0};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  result.t_entry = {nan, nan};

  std::array<std::vector<double>, 2> h_series;
  for (auto& hs : h_series) hs.reserve(n);

  for (std::size_t j = 0; j < n; ++j) {
    const double t = result.traj.times[j];
    const std::span<const double> x = result.traj.state(j);
    std::array<double, 2> u_nom{}, u_filt{};
    controls(t, x, u_nom, u_filt);

    DerivedSample row{};
    std::array<double, 2> h{}, eta1{};
    for (int i = 0; i < 2; ++i) {
      h[static_cast<std::size_t>(i)] = chains[static_cast<std::size_t>(i)].h(x);
      eta1[static_cast<std::size_t>(i)] = eta(chains[static_cast<std::size_t>(i)], 1, x, u_filt);
      h_series[static_cast<std::size_t>(i)].push_back(h[static_cast<std::size_t>(i)]);
      result.min_h[static_cast<std::size_t>(i)] =
          std::min(result.min_h[static_cast<std::size_t>(i)], h[static_cast<std::size_t>(i)]);
    }
    for (int i = 0; i < 2; ++i) {
      const double eta2 = eta(chains[static_cast<std::size_t>(i)], 2, x, u_filt);
      const double slack = eta2 - phi_slope * h[static_cast<std::size_t>(1 - i)];
      result.min_barrier_slack[static_cast<std::size_t>(i)] =
          std::min(result.min_barrier_slack[static_cast<std::size_t>(i)], slack);

      // Tracking statistics over samples where the reference sits safely
      // inside the constraint and the transient has settled.
      const double y_ref = refs[static_cast<std::size_t>(i)](t).y;
      if (t >= 3.0 && y_ref >= p.theta_min[static_cast<std::size_t>(i)] + 0.05) {
        const double err = std::abs(x[static_cast<std::size_t>(2 * i)] - y_ref);
        result.max_tracking_error[static_cast<std::size_t>(i)] =
            std::max(result.max_tracking_error[static_cast<std::size_t>(i)], err);
        ++result.tracking_samples[static_cast<std::size_t>(i)];
      }
    }
    row.h1 = h[0];
    row.h2 = h[1];
    row.eta11 = eta1[0];
    row.eta21 = eta1[1];
    row.u1_nom = u_nom[0];
    row.u1_filt = u_filt[0];
    row.u2_nom = u_nom[1];
    row.u2_filt = u_filt[1];
    result.derived.push_back(row);
  }

  for (int i = 0; i < 2; ++i) {
    const auto& hs = h_series[static_cast<std::size_t>(i)];
    result.started_safe[static_cast<std::size_t>(i)] = !hs.empty() && hs.front() >= 0.0;
    result.safe_throughout[static_cast<std::size_t>(i)] =
        result.min_h[static_cast<std::size_t>(i)] >= -kSafetyMarginTol;
    // Entry time: first sample at h >= 0 after which h never drops below the
    // margin tolerance again.
    double trailing_min = std::numeric_limits<double>::infinity();
    std::size_t entry_index = hs.size();
    for (std::size_t j = hs.size(); j-- > 0;) {
      trailing_min = std::min(trailing_min, hs[j]);
      if (hs[j] >= 0.0 && trailing_min >= -kSafetyMarginTol) entry_index = j;
    }
    if (entry_index < hs.size()) {
      result.entered[static_cast<std::size_t>(i)] = true;
      result.t_entry[static_cast<std::size_t>(i)] = result.traj.times[entry_index];
    }
  }

  bool ok = !result.traj.finite_escape;
  for (int i = 0; i < 2; ++i) {
    if (result.started_safe[static_cast<std::size_t>(i)])
      ok = ok && result.safe_throughout[static_cast<std::size_t>(i)];
    else
      ok = ok && result.entered[static_cast<std::size_t>(i)];
  }
  result.margins_hold = ok;
  return result;
}

//! Trajectory CSV with the derived benchmark columns appended.
inline void write_benchmark_csv(const BenchmarkResult& result, std::ostream& out) {
  CsvExtraColumns extras;
  extras.names = {"h1", "h2", "eta11", "eta21", "u1_nom", "u1_filtered", "u2_nom", "u2_filtered"};
  extras.fill = [&](std::size_t j, std::span<double> v) {
    const DerivedSample& d = result.derived[j];
    v[0] = d.h1;
    v[1] = d.h2;
    v[2] = d.eta11;
    v[3] = d.eta21;
    v[4] = d.u1_nom;
    v[5] = d.u1_filt;
    v[6] = d.u2_nom;
    v[7] = d.u2_filt;
  };
  write_csv(result.traj, out, &extras);
}

inline void write_benchmark_report(const BenchmarkResult& result, const ScenarioConfig& config,
                                   std::ostream& out) {
  char buf[256];
  auto line = [&](const char* fmt, auto... args) {
    if constexpr (sizeof...(args) == 0)
      out << fmt << "\n";
    else {
      std::snprintf(buf, sizeof buf, fmt, args...);
      out << buf << "\n";
    }
  };
  line("scenario: %s", config.name.c_str());
  line("samples: %zu  dt: %.17g  t_end: %.17g", result.traj.samples(), config.dt, config.t_end);
  line("safety filter: %s", config.use_filter ? "on" : "off");
  if (result.traj.finite_escape)
    line("finite escape at t = %.6g", result.traj.last_valid_time);
  line("backstepping small-gain condition: %s", result.backstepping_gain_ok ? "ok" : "VIOLATED");
  for (int i = 0; i < 2; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    line("pendulum %d:", i + 1);
    line("  theta floor: %.6g  started safe: %s", config.params.theta_min[idx],
         result.started_safe[idx] ? "yes" : "no");
    line("  min h = %.9g  safe throughout (tol %.1e): %s", result.min_h[idx], kSafetyMarginTol,
         result.safe_throughout[idx] ? "yes" : "no");
    if (result.entered[idx])
      line("  entered safe set at t = %.6g", result.t_entry[idx]);
    else
      line("  never entered the safe set");
    line("  min barrier slack eta_2 - phi(h_other) = %.9g", result.min_barrier_slack[idx]);
    if (result.tracking_samples[idx] > 0)
      line("  max tracking error (t >= 3, reference inside safe region): %.6g over %zu samples",
           result.max_tracking_error[idx], result.tracking_samples[idx]);
    else
      line("  no qualifying tracking samples");
  }
  line("small-gain check: max ratio = %.6g -> %s", result.smallgain.max_ratio,
       result.smallgain.pass ? "PASS" : "FAIL");
  if (result.smallgain.all_linear)
    line("  closed-form loop ratio: %.6g", result.smallgain.closed_form_ratio);
  if (!result.smallgain.caveat.empty()) line("  caveat: %s", result.smallgain.caveat.c_str());
  line("verdict: %s", result.margins_hold ? "SAFE" : "MARGIN VIOLATION");
}

}  // namespace safegain
