#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <safegain/gains.hpp>
#include <safegain/report.hpp>

namespace safegain {

/*!
  The comparison-function data of one subsystem's barrier condition:
  the chain gains alpha_1..alpha_r, the interconnection gain phi (how the
  other subsystem's constraint value enters), the input gain gamma, and the
  slack gain sigma used in the derived-gain constructions.

  phi may be GainFn::zero() for a cascade interconnection (no coupling into
  this subsystem), in which case the small-gain condition holds trivially.
*/
struct SubsystemGains {
  std::vector<GainFn> alphas;
  GainFn phi = GainFn::zero();
  GainFn gamma = GainFn::linear(1.0, GainDomain::NonNegative);
  GainFn sigma = GainFn::linear(0.1);

  int relative_degree() const noexcept { return static_cast<int>(alphas.size()); }
};

//! Sampled validity check of a gain set. A zero phi is reported as a cascade
//! note rather than a failure.
inline ValidationReport validate(const SubsystemGains& g) {
  ValidationReport report;
  report.subject = "subsystem gain set";
  if (g.alphas.empty()) {
    report.add_violation(0.0, 0.0, "relative degree must be >= 1");
    return report;
  }
  auto merge = [&](const ValidationReport& sub, const std::string& who) {
    report.samples += sub.samples;
    report.violations += sub.violations;
    if (!sub.pass) {
      report.pass = false;
      for (const auto& f : sub.findings) report.add_note(who + ": " + f);
    }
  };
  for (std::size_t k = 0; k < g.alphas.size(); ++k)
    merge(check_extended_kinf(g.alphas[k]), "alpha_" + std::to_string(k + 1));
  if (g.phi.is_zero())
    report.add_note("phi is zero: cascade interconnection");
  else
    merge(check_extended_kinf(g.phi), "phi");
  merge(check_extended_kinf(g.sigma), "sigma");
  merge(check_extended_kinf(g.gamma), "gamma");
  return report;
}

namespace detail {

inline void check_chain_index(const SubsystemGains& g, int k, const char* who) {
  if (k < 1 || k > g.relative_degree())
    throw std::out_of_range(std::string(who) + ": k outside [1, r]");
}

}  // namespace detail

/*!
  The derived interconnection gain

    phi_hat_{i,k} = (Id+sigma) o alpha_{i,k}^{-1} o (Id+sigma) o ... o
                    alpha_{i,r}^{-1} o (Id+sigma) o phi_i

  as a composition tree. Satisfies the recursion
  phi_hat_{i,k} = (Id+sigma) o alpha_{i,k}^{-1} o phi_hat_{i,k+1}.
*/
inline GainExpr build_phi_hat(const SubsystemGains& g, int k) {
  detail::check_chain_index(g, k, "build_phi_hat");
  const GainExpr id_sigma = GainExpr::id_plus(GainExpr(g.sigma));
  GainExpr expr = GainExpr::compose(id_sigma, GainExpr(g.phi));
  for (int j = g.relative_degree(); j >= k; --j) {
    expr = GainExpr::compose(GainExpr::inverse(GainExpr(g.alphas[static_cast<std::size_t>(j - 1)])),
                             std::move(expr));
    expr = GainExpr::compose(id_sigma, std::move(expr));
  }
  return expr;
}

/*!
  The derived input gain

    gamma_hat_{i,k}(s) = -(Id+sigma) o alpha_{i,k}^{-1} o (Id+sigma) o ... o
                         alpha_{i,r}^{-1} o (Id+sigma^{-1}) (-gamma_i(s)),

  class K-infinity on [0, inf). sigma^{-1} is the functional inverse of sigma.
  Built as NegateReflect(F) o gamma_i with F the inner extended-K-infinity
  chain, so that gamma_i is only ever evaluated on its own domain.
*/
inline GainExpr build_gamma_hat(const SubsystemGains& g, int k) {
  detail::check_chain_index(g, k, "build_gamma_hat");
  const GainExpr id_sigma = GainExpr::id_plus(GainExpr(g.sigma));
  GainExpr expr = GainExpr::id_plus(GainExpr::inverse(GainExpr(g.sigma)));
  for (int j = g.relative_degree(); j >= k; --j) {
    expr = GainExpr::compose(GainExpr::inverse(GainExpr(g.alphas[static_cast<std::size_t>(j - 1)])),
                             std::move(expr));
    expr = GainExpr::compose(id_sigma, std::move(expr));
  }
  return GainExpr::compose(GainExpr::negate_reflect(std::move(expr)), GainExpr(g.gamma));
}

/*!
  The margin level

    d_{i,k-1} = min{ phi_hat_{i,k}(-gamma_hat_{3-i,1}(u_norm)),
                     -gamma_hat_{i,k}(u_norm) }

  for subsystem i in {1, 2}. Non-positive for every u_norm >= 0 and exactly 0
  at u_norm = 0.
*/
inline double compute_margin(const SubsystemGains& gains_1, const SubsystemGains& gains_2, int i,
                             int k, double u_norm) {
  if (i != 1 && i != 2) throw std::out_of_range("compute_margin: i must be 1 or 2");
  if (!(u_norm >= 0.0)) throw std::invalid_argument("compute_margin: u_norm must be >= 0");
  const SubsystemGains& own = (i == 1) ? gains_1 : gains_2;
  const SubsystemGains& other = (i == 1) ? gains_2 : gains_1;
  detail::check_chain_index(own, k, "compute_margin");
  const double gamma_other = build_gamma_hat(other, 1)(u_norm);
  const double via_phi = build_phi_hat(own, k)(-gamma_other);
  const double via_gamma = -build_gamma_hat(own, k)(u_norm);
  return std::min(via_phi, via_gamma);
}

struct SmallGainReport {
  std::vector<double> grid;
  std::vector<double> ratios;  // |phi_hat_{1,1} o phi_hat_{2,1}(s)| / |s|
  double max_ratio = 0.0;
  bool pass = false;
  bool all_linear = false;                                       // closed form available
  double closed_form_ratio = std::numeric_limits<double>::quiet_NaN();
  std::string caveat;
};

//! Default grid for the small-gain check: +/- logspace(1e-3, 1e3), 61 points
//! per sign.
inline std::vector<double> default_small_gain_grid() {
  std::vector<double> grid;
  grid.reserve(122);
  for (int i = 60; i >= 0; --i) grid.push_back(-std::pow(10.0, -3.0 + 6.0 * i / 60.0));
  for (int i = 0; i <= 60; ++i) grid.push_back(std::pow(10.0, -3.0 + 6.0 * i / 60.0));
  return grid;
}

namespace detail {

// Loop-gain slope for an all-linear subsystem: (1+sigma0)^{r+1} * phi0 / prod(c_k).
inline bool linear_loop_slope(const SubsystemGains& g, double* slope) {
  if (!g.sigma.is_linear()) return false;
  double phi_slope = 0.0;
  if (g.phi.is_zero())
    phi_slope = 0.0;
  else if (g.phi.is_linear())
    phi_slope = g.phi.slope();
  else
    return false;
  double denom = 1.0;
  for (const auto& a : g.alphas) {
    if (!a.is_linear()) return false;
    denom *= a.slope();
  }
  const double s0 = g.sigma.slope();
  *slope = std::pow(1.0 + s0, g.relative_degree() + 1) * phi_slope / denom;
  return true;
}

}  // namespace detail

/*!
  Grid-based check of the small-gain condition |phi_hat_{1,1} o
  phi_hat_{2,1}(s)| < |s| for nonzero s. Pass requires a strict margin
  (max ratio < 1 - 1e-9) so floating-point ties do not count as passes.

  For all-linear gain sets the closed-form loop slope is computed as a
  cross-check and the verdict is exact; otherwise the report carries a caveat
  that the verdict is certified only on the grid.
*/
inline SmallGainReport check_small_gain(const SubsystemGains& gains_1,
                                        const SubsystemGains& gains_2,
                                        std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("check_small_gain: empty grid");
  SmallGainReport report;
  report.grid.assign(grid.begin(), grid.end());
  const GainExpr loop = GainExpr::compose(build_phi_hat(gains_1, 1), build_phi_hat(gains_2, 1));

  report.ratios.reserve(grid.size());
  for (double s : grid) {
    if (s == 0.0) throw std::invalid_argument("check_small_gain: grid must exclude 0");
    const double ratio = std::abs(loop(s)) / std::abs(s);
    report.ratios.push_back(ratio);
    report.max_ratio = std::max(report.max_ratio, ratio);
  }
  report.pass = report.max_ratio < 1.0 - 1e-9;

  double s1 = 0.0, s2 = 0.0;
  if (detail::linear_loop_slope(gains_1, &s1) && detail::linear_loop_slope(gains_2, &s2)) {
    report.all_linear = true;
    report.closed_form_ratio = s1 * s2;
  } else {
    char buf[128];
    std::snprintf(buf, sizeof buf,
                  "nonlinear gains: verdict certified only on the grid [%.3g, %.3g]",
                  std::abs(report.grid.front()), std::abs(report.grid.back()));
    report.caveat = buf;
  }
  return report;
}

inline SmallGainReport check_small_gain(const SubsystemGains& gains_1,
                                        const SubsystemGains& gains_2) {
  const auto grid = default_small_gain_grid();
  return check_small_gain(gains_1, gains_2, grid);
}

/*!
  Sampled check of the weak triangle inequalities used throughout the
  small-gain bookkeeping: for extended class K-infinity gamma and sigma,

    gamma(a+b) >= min{ gamma o (Id+sigma)(a), gamma o (Id+sigma^{-1})(b) }

  for all real a, b, and for a, b <= 0 additionally

    gamma(a+b) >= gamma o (Id+sigma)(a) + gamma o (Id+sigma^{-1})(b).

  Violations beyond 1e-9 are reported. sigma is inverted numerically with a
  tolerance well below the check tolerance.
*/
inline ValidationReport check_weak_inequalities(
    const GainFn& gamma, const GainFn& sigma,
    std::span<const std::pair<double, double>> samples) {
  constexpr double kTol = 1e-9;
  constexpr double kInvTol = 1e-12;
  ValidationReport report;
  report.subject = "weak triangle inequalities";
  const GainExpr sig(sigma);
  for (const auto& [a, b] : samples) {
    ++report.samples;
    const double lhs = gamma(a + b);
    const double via_a = gamma(a + sigma(a));
    const double via_b = gamma(b + invert(sig, b, kInvTol));
    const double min_bound = std::min(via_a, via_b);
    if (lhs < min_bound - kTol) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "min-form violated at (a,b)=(%.6g,%.6g): lhs=%.9g rhs=%.9g",
                    a, b, lhs, min_bound);
      report.add_violation(lhs - min_bound, a, buf);
    }
    if (a <= 0.0 && b <= 0.0) {
      const double sum_bound = via_a + via_b;
      if (lhs < sum_bound - kTol) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "sum-form violated at (a,b)=(%.6g,%.6g): lhs=%.9g rhs=%.9g",
                      a, b, lhs, sum_bound);
        report.add_violation(lhs - sum_bound, a, buf);
      }
    }
  }
  return report;
}

}  // namespace safegain
