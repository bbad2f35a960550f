#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include <safegain/gains.hpp>
#include <safegain/report.hpp>

namespace safegain {

//! Uniform time grid starting at 0: times are j * dt for j = 0..samples-1.
struct TimeGrid {
  double dt = 1e-3;
  std::size_t samples = 0;

  double time(std::size_t j) const noexcept { return dt * static_cast<double>(j); }
  double horizon() const noexcept { return samples == 0 ? 0.0 : time(samples - 1); }
};

/*!
  The scalar comparison problem behind the trajectory lower bound: a forced
  differential inequality

    d/dt eta(t) >= -alpha(eta(t)) + w(t)

  reduced to the equality case at the worst forcing level. `w_inf` is the
  infimum of the forcing over the horizon, and the associated equilibrium is
  eta_star = alpha^{-1}(w_inf).
*/
struct ComparisonProblem {
  GainFn alpha;
  double eta0 = 0.0;
  double w_inf = 0.0;
  TimeGrid grid;
};

namespace detail {

inline constexpr int kMaxStepHalvings = 60;

inline double rk4_scalar(const std::function<double(double)>& rhs, double y, double h) {
  const double k1 = rhs(y);
  const double k2 = rhs(y + 0.5 * h * k1);
  const double k3 = rhs(y + 0.5 * h * k2);
  const double k4 = rhs(y + h * k3);
  return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// One step toward the equilibrium y_eq of an autonomous contraction. Splits
// the step while |y - y_eq| < 10 h |rhs(y)| (a step that large could jump the
// equilibrium) and clamps any remaining overshoot to y_eq, so the iterate
// never crosses to the other side.
inline double advance_clamped(const std::function<double(double)>& rhs, double y, double h,
                              double y_eq, int depth = 0) {
  if (y == y_eq) return y_eq;
  if (depth < kMaxStepHalvings && std::abs(y - y_eq) < 10.0 * h * std::abs(rhs(y))) {
    const double mid = advance_clamped(rhs, y, 0.5 * h, y_eq, depth + 1);
    return advance_clamped(rhs, mid, 0.5 * h, y_eq, depth + 1);
  }
  double next = rk4_scalar(rhs, y, h);
  if ((y - y_eq) * (next - y_eq) < 0.0) next = y_eq;
  return next;
}

}  // namespace detail

/*!
  Solves the comparison equation

    dy/dt = -alpha(y) + alpha(eta_star),  y(0) = eta0,

  with eta_star = alpha^{-1}(w_inf), on the problem's time grid. y is monotone
  toward eta_star and, by construction, never crosses it.
*/
inline std::vector<double> solve_comparison(const ComparisonProblem& prob) {
  if (prob.grid.samples == 0) return {};
  if (!(prob.grid.dt > 0.0)) throw std::invalid_argument("solve_comparison: dt must be positive");
  const double eta_star = invert(GainExpr(prob.alpha), prob.w_inf);
  // Using alpha(eta_star) rather than w_inf makes eta_star an exact
  // equilibrium of the discrete right-hand side.
  const double w_eq = prob.alpha(eta_star);
  const auto rhs = [&](double y) { return w_eq - prob.alpha(y); };

  std::vector<double> out;
  out.reserve(prob.grid.samples);
  double y = prob.eta0;
  out.push_back(y);
  for (std::size_t j = 1; j < prob.grid.samples; ++j) {
    y = detail::advance_clamped(rhs, y, prob.grid.dt, eta_star);
    out.push_back(y);
  }
  return out;
}

/*!
  The extended class KL bound: beta(s, t) is the time-t flow of

    dy/dt = -alpha(y),  y(0) = s,

  integrated with step dt. beta(s, 0) = s exactly; sign(beta(s, t)) = sign(s)
  and |beta(s, t)| is non-increasing in t.
*/
inline double beta(const GainFn& alpha, double s, double t, double dt) {
  if (t < 0.0) throw std::invalid_argument("beta: t must be >= 0");
  if (!(dt > 0.0)) throw std::invalid_argument("beta: dt must be positive");
  if (t == 0.0 || s == 0.0) return s;
  const auto rhs = [&](double y) { return -alpha(y); };
  // Relative nudge so an exact multiple of dt is not rounded down.
  const auto steps = static_cast<std::size_t>(std::floor(t / dt * (1.0 + 1e-12)));
  double y = s;
  for (std::size_t j = 0; j < steps; ++j) y = detail::advance_clamped(rhs, y, dt, 0.0);
  const double rem = t - static_cast<double>(steps) * dt;
  if (rem > 1e-12 * t) y = detail::advance_clamped(rhs, y, rem, 0.0);
  return y;
}

/*!
  Certifies the comparison-lemma lower bound along a sampled trajectory:

    eta(t) >= beta(eta0 - eta_star, t) + eta_star,
    eta_star = alpha^{-1}(min w)

  where the bound is realized as the solution of the comparison equation on
  the same grid. Violations beyond 1e-6 plus a 10*dt integration allowance
  are reported.
*/
inline ValidationReport check_lower_bound(std::span<const double> eta_traj, const TimeGrid& grid,
                                          const GainFn& alpha, std::span<const double> w_traj) {
  if (eta_traj.size() != grid.samples || w_traj.size() != grid.samples)
    throw std::invalid_argument("check_lower_bound: trajectory/grid length mismatch");
  ValidationReport report;
  report.subject = "comparison-lemma lower bound";
  if (grid.samples == 0) return report;

  const double w_min = *std::min_element(w_traj.begin(), w_traj.end());
  ComparisonProblem prob{alpha, eta_traj[0], w_min, grid};
  const std::vector<double> bound = solve_comparison(prob);

  const double tol = 1e-6 + 10.0 * grid.dt;
  for (std::size_t j = 0; j < grid.samples; ++j) {
    ++report.samples;
    const double slack = eta_traj[j] - bound[j];
    if (slack < -tol) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "bound violated at t=%.6g: eta=%.9g bound=%.9g",
                    grid.time(j), eta_traj[j], bound[j]);
      report.add_violation(slack, grid.time(j), buf);
    }
  }
  return report;
}

}  // namespace safegain
