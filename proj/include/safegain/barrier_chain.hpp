#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <safegain/errors.hpp>
#include <safegain/gains.hpp>
#include <safegain/report.hpp>
#include <safegain/simulator.hpp>

namespace safegain {

using StateField = std::function<double(std::span<const double> x)>;
using ScalarField = std::function<double(std::span<const double> x, std::span<const double> u)>;

/*!
  A relative-degree-r barrier chain: the constraint function h = eta_0 and
  the recursion

    eta_k = d/dt eta_{k-1} + alpha_k(eta_{k-1}),  k = 1..r,

  realized by caller-supplied closed-form oracles. eta_0..eta_{r-1} must
  ignore the input argument; only eta_r may depend on it (that is where the
  input first appears). finite_diff_check() is the numerical guard that the
  oracles actually satisfy the recursion along trajectories.
*/
struct BarrierChain {
  int r = 0;
  StateField h;
  std::vector<ScalarField> eta_oracles;  // size r + 1, [0] evaluates h
  std::vector<GainFn> alphas;            // size r
};

inline BarrierChain make_barrier_chain(StateField h, std::vector<ScalarField> eta_oracles,
                                       std::vector<GainFn> alphas) {
  if (alphas.empty()) throw std::invalid_argument("make_barrier_chain: relative degree must be >= 1");
  if (eta_oracles.size() != alphas.size() + 1)
    throw std::invalid_argument("make_barrier_chain: need r + 1 eta oracles");
  if (!h) throw std::invalid_argument("make_barrier_chain: missing h");
  BarrierChain chain;
  chain.r = static_cast<int>(alphas.size());
  chain.h = std::move(h);
  chain.eta_oracles = std::move(eta_oracles);
  chain.alphas = std::move(alphas);
  return chain;
}

inline double eta(const BarrierChain& chain, int k, std::span<const double> x,
                  std::span<const double> u) {
  if (k < 0 || k > chain.r) throw std::out_of_range("eta: k outside [0, r]");
  return chain.eta_oracles[static_cast<std::size_t>(k)](x, u);
}

/*!
  The inflation gain alpha_hat_k(s) = -alpha_k^{-1} o ... o alpha_r^{-1}(-s)
  for k in [1, r]. For linear alphas with slopes c_k..c_r this is
  s / (c_k * ... * c_r).
*/
inline GainExpr alpha_hat(const BarrierChain& chain, int k) {
  if (k < 1 || k > chain.r) throw std::out_of_range("alpha_hat: k outside [1, r]");
  GainExpr expr = GainExpr::inverse(GainExpr(chain.alphas[static_cast<std::size_t>(chain.r - 1)]));
  for (int j = chain.r - 1; j >= k; --j)
    expr = GainExpr::compose(
        GainExpr::inverse(GainExpr(chain.alphas[static_cast<std::size_t>(j - 1)])), std::move(expr));
  return GainExpr::negate_reflect(std::move(expr));
}

/*!
  The shifted chain value eta~_k = eta_k + alpha_hat_{k+1}(gamma(u_norm)) for
  k in [0, r-1]; the coordinate change that turns the input-to-state-safe
  chain into a zeroing one. Equal to eta_k bit-for-bit when u_norm = 0.
*/
inline double tilde_eta(const BarrierChain& chain, int k, std::span<const double> x,
                        std::span<const double> u, double u_norm, const GainFn& gamma) {
  if (k < 0 || k > chain.r - 1) throw std::out_of_range("tilde_eta: k outside [0, r-1]");
  if (!(u_norm >= 0.0)) throw std::invalid_argument("tilde_eta: u_norm must be >= 0");
  const double base = eta(chain, k, x, u);
  if (u_norm == 0.0) return base;
  return base + alpha_hat(chain, k + 1)(gamma(u_norm));
}

/*!
  Membership flags per chain level: in_S[k] is eta_k(x) >= 0 and in_C[k] is
  eta_k(x) >= margin_levels[k]; `distances` carries the raw eta values as
  signed margins. With margin levels <= 0, S is a subset of C levelwise.
*/
struct SetMembership {
  std::vector<bool> in_S;
  std::vector<bool> in_C;
  std::vector<double> distances;

  bool all_in_S() const {
    for (bool b : in_S)
      if (!b) return false;
    return true;
  }
  bool all_in_C() const {
    for (bool b : in_C)
      if (!b) return false;
    return true;
  }
};

inline SetMembership membership(const BarrierChain& chain, std::span<const double> x,
                                std::span<const double> u,
                                std::span<const double> margin_levels) {
  if (margin_levels.size() != static_cast<std::size_t>(chain.r))
    throw std::invalid_argument("membership: need r margin levels");
  SetMembership result;
  result.in_S.reserve(chain.r);
  result.in_C.reserve(chain.r);
  result.distances.reserve(chain.r);
  for (int k = 0; k < chain.r; ++k) {
    const double value = eta(chain, k, x, u);
    result.distances.push_back(value);
    result.in_S.push_back(value >= 0.0);
    result.in_C.push_back(value >= margin_levels[static_cast<std::size_t>(k)]);
  }
  return result;
}

/*!
  The safety Lyapunov function V(x) = max_k max{0, margin_k - eta_k(x)}:
  zero exactly on the inflated set C = {eta_k >= margin_k for all k} and
  positive outside it.
*/
inline double safety_lyapunov(const BarrierChain& chain, std::span<const double> x,
                              std::span<const double> u,
                              std::span<const double> margin_levels) {
  if (margin_levels.size() != static_cast<std::size_t>(chain.r))
    throw std::invalid_argument("safety_lyapunov: need r margin levels");
  double v = 0.0;
  for (int k = 0; k < chain.r; ++k) {
    const double deficit = margin_levels[static_cast<std::size_t>(k)] - eta(chain, k, x, u);
    if (deficit > v) v = deficit;
  }
  return v;
}

/*!
  The sampled margin-form implication: at every sample where
  |eta_{r-1}(x)| >= phi(|u|), the chain must give eta_r(x, u) >= -1e-9.
  This is the testable face of the equivalence between the margin form and
  the input-gain form of the barrier condition.
*/
inline ValidationReport check_margin_form(
    const BarrierChain& chain, const GainFn& phi,
    std::span<const std::pair<std::vector<double>, std::vector<double>>> samples) {
  ValidationReport report;
  report.subject = "margin-form implication";
  std::size_t triggered = 0;
  for (const auto& [x, u] : samples) {
    ++report.samples;
    double u_norm_sq = 0.0;
    for (double v : u) u_norm_sq += v * v;
    const double u_norm = std::sqrt(u_norm_sq);
    const double eta_rm1 = eta(chain, chain.r - 1, x, u);
    if (std::abs(eta_rm1) < phi(u_norm)) continue;
    ++triggered;
    const double eta_r = eta(chain, chain.r, x, u);
    if (eta_r < -1e-9) {
      char buf[128];
      std::snprintf(buf, sizeof buf,
                    "implication violated: |eta_{r-1}|=%.6g >= phi(|u|)=%.6g but eta_r=%.9g",
                    std::abs(eta_rm1), phi(u_norm), eta_r);
      report.add_violation(eta_r, u_norm, buf);
    }
  }
  if (triggered == 0) report.add_note("antecedent never triggered: vacuous pass");
  return report;
}

/*!
  Finite-difference consistency of the oracles with the chain recursion:
  central differences of eta_{k-1} along a uniformly sampled trajectory are
  compared against eta_k - alpha_k(eta_{k-1}) at interior samples, for the
  input-independent levels k = 1..r-1. The tolerance is max(10*dt, tol).
*/
inline ValidationReport finite_diff_check(const BarrierChain& chain, const Trajectory& traj,
                                          double tol) {
  if (traj.samples() < 3) throw TooShortError("finite_diff_check: need at least 3 samples");
  ValidationReport report;
  report.subject = "chain recursion finite-difference consistency";
  const double effective_tol = std::max(10.0 * traj.dt, tol);
  if (chain.r < 2) {
    report.add_note("relative degree 1: no input-independent recursion levels to check");
    return report;
  }
  for (int k = 1; k <= chain.r - 1; ++k) {
    for (std::size_t j = 1; j + 1 < traj.samples(); ++j) {
      ++report.samples;
      const double fd = (eta(chain, k - 1, traj.state(j + 1), traj.input(j + 1)) -
                         eta(chain, k - 1, traj.state(j - 1), traj.input(j - 1))) /
                        (2.0 * traj.dt);
      const double eta_km1 = eta(chain, k - 1, traj.state(j), traj.input(j));
      const double rhs = eta(chain, k, traj.state(j), traj.input(j)) -
                         chain.alphas[static_cast<std::size_t>(k - 1)](eta_km1);
      const double residual = std::abs(fd - rhs);
      if (residual > effective_tol) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "recursion residual %.6g at level k=%d, t=%.6g", residual,
                      k, traj.times[j]);
        report.add_violation(effective_tol - residual, traj.times[j], buf);
      }
    }
  }
  return report;
}

}  // namespace safegain
