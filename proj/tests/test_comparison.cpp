#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include <safegain/comparison.hpp>
#include <safegain/suites.hpp>

using namespace safegain;
using Catch::Approx;

TEST_CASE("solve_comparison against analytic linear decay", "[comparison]") {
  const TimeGrid grid{1e-3, 1001};

  const auto unit_decay = solve_comparison({GainFn::linear(1.0), 1.0, 0.0, grid});
  CHECK(unit_decay.front() == 1.0);
  CHECK(unit_decay.back() == Approx(std::exp(-1.0)).margin(1e-6));
  // Monotone toward the equilibrium, never crossing it.
  for (std::size_t j = 1; j < unit_decay.size(); ++j) {
    CHECK(unit_decay[j] <= unit_decay[j - 1]);
    CHECK(unit_decay[j] >= 0.0);
  }

  // Starting at the equilibrium stays there.
  const auto at_eq = solve_comparison({GainFn::linear(1.0), 0.5, 0.5, grid});
  for (double y : at_eq) CHECK(y == Approx(0.5).margin(1e-9));

  const TimeGrid half{1e-3, 501};
  const auto neg = solve_comparison({GainFn::linear(2.0), -1.0, 0.0, half});
  CHECK(neg.back() == Approx(-std::exp(-1.0)).margin(1e-6));
}

TEST_CASE("beta flow: exactness at t=0 and analytic decay", "[comparison]") {
  const auto unit = GainFn::linear(1.0);
  for (double s : {-2.0, -0.5, 0.0, 0.5, 2.0}) CHECK(beta(unit, s, 0.0, 1e-3) == s);
  CHECK(beta(unit, 2.0, 1.0, 1e-3) == Approx(2.0 * std::exp(-1.0)).margin(1e-6));
  for (double t : {0.1, 1.0, 10.0}) CHECK(beta(unit, 0.0, t, 1e-3) == 0.0);
}

TEST_CASE("beta is an extended-KL surrogate on sampled gains", "[comparison]") {
  const std::vector<GainFn> alphas{
      GainFn::linear(0.8),
      GainFn::piecewise_linear({{-2.0, -5.0}, {0.0, 0.0}, {1.0, 0.6}, {3.0, 4.0}}),
  };
  const double dt = 1e-3;
  for (const auto& alpha : alphas) {
    // Strictly increasing in s for fixed t.
    for (double t : {0.0, 0.5, 2.0}) {
      double prev = beta(alpha, -3.0, t, dt);
      for (double s = -2.5; s <= 3.0; s += 0.5) {
        const double cur = beta(alpha, s, t, dt);
        CHECK(cur > prev);
        prev = cur;
      }
    }
    // |beta| decreasing toward zero in t, sign preserved.
    for (double s : {-2.0, 1.5}) {
      double prev = std::abs(s);
      for (double t : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) {
        const double b = beta(alpha, s, t, dt);
        CHECK(b * s >= 0.0);
        CHECK(std::abs(b) <= prev + 1e-12);
        prev = std::abs(b);
      }
      CHECK(std::abs(beta(alpha, s, 30.0, dt)) < 1e-6);
    }
  }
}

TEST_CASE("beta satisfies the flow semigroup property", "[comparison]") {
  const auto alpha = GainFn::piecewise_linear({{-1.0, -2.0}, {0.0, 0.0}, {2.0, 1.5}});
  const double dt = 1e-3;
  for (double s : {-1.5, 0.75, 2.5}) {
    for (double t1 : {0.25, 1.0}) {
      for (double t2 : {0.5, 2.0}) {
        const double direct = beta(alpha, s, t1 + t2, dt);
        const double composed = beta(alpha, beta(alpha, s, t1, dt), t2, dt);
        CHECK(composed == Approx(direct).margin(1e-8));
      }
    }
  }
}

TEST_CASE("comparison solution equals the shifted flow for linear alpha", "[comparison]") {
  // For linear alpha the shift alpha(s + eta_star) - alpha(eta_star) is alpha
  // itself, so the comparison solution is beta(eta0 - eta_star, t) + eta_star.
  const auto alpha = GainFn::linear(1.7);
  const double eta0 = 2.3, w_inf = -0.8;
  const TimeGrid grid{1e-3, 2001};
  const auto y = solve_comparison({alpha, eta0, w_inf, grid});
  const double eta_star = invert(GainExpr(alpha), w_inf);
  for (std::size_t j = 0; j < grid.samples; j += 250) {
    const double expected = beta(alpha, eta0 - eta_star, grid.time(j), grid.dt) + eta_star;
    CHECK(y[j] == Approx(expected).margin(1e-9));
  }
}

TEST_CASE("check_lower_bound on hand-built trajectories", "[comparison]") {
  const double dt = 1e-3;
  const TimeGrid grid{dt, 4001};
  const auto unit = GainFn::linear(1.0);

  SECTION("equality case meets the bound with zero slack") {
    std::vector<double> eta(grid.samples), w(grid.samples, 0.0);
    double y = 1.0;
    eta[0] = y;
    for (std::size_t j = 1; j < grid.samples; ++j) {
      const double k1 = -y, k2 = -(y + 0.5 * dt * k1), k3 = -(y + 0.5 * dt * k2),
                   k4 = -(y + dt * k3);
      y += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
      eta[j] = y;
    }
    CHECK(check_lower_bound(eta, grid, unit, w).pass);
  }

  SECTION("sinusoidal forcing holds strictly") {
    std::vector<double> eta(grid.samples), w(grid.samples);
    double y = 0.0;
    for (std::size_t j = 0; j < grid.samples; ++j) w[j] = 1.0 + 0.5 * std::sin(grid.time(j));
    eta[0] = y;
    auto rhs = [&](double t, double yy) { return -yy + 1.0 + 0.5 * std::sin(t); };
    for (std::size_t j = 1; j < grid.samples; ++j) {
      const double t = grid.time(j - 1);
      const double k1 = rhs(t, y), k2 = rhs(t + dt / 2, y + dt / 2 * k1),
                   k3 = rhs(t + dt / 2, y + dt / 2 * k2), k4 = rhs(t + dt, y + dt * k3);
      y += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
      eta[j] = y;
    }
    CHECK(check_lower_bound(eta, grid, unit, w).pass);
  }

  SECTION("fabricated dip below the bound fails") {
    std::vector<double> eta(grid.samples, 1.0), w(grid.samples, 0.0);
    for (std::size_t j = 0; j < grid.samples; ++j)
      eta[j] = std::exp(-grid.time(j)) - 0.05;  // below e^{-t} by more than the allowance
    eta[0] = 1.0;
    const auto report = check_lower_bound(eta, grid, unit, w);
    CHECK_FALSE(report.pass);
    CHECK(report.violations > 0);
  }

  SECTION("length mismatch throws") {
    std::vector<double> eta(grid.samples - 1), w(grid.samples);
    CHECK_THROWS_AS(check_lower_bound(eta, grid, unit, w), std::invalid_argument);
  }
}

TEST_CASE("relative-degree-one safe-set floor under bounded input", "[comparison]") {
  // d/dt eta = -alpha(eta) - gamma(|u(t)|): starting at or above the floor
  // alpha^{-1}(-gamma(sup|u|)), the trajectory never drops below it.
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> uni(0.3, 2.0);
  const double dt = 1e-3;
  for (int trial = 0; trial < 20; ++trial) {
    const auto alpha = GainFn::linear(uni(rng));
    const auto gamma = GainFn::linear(uni(rng), GainDomain::NonNegative);
    const double amp = uni(rng);
    const double omega = uni(rng);
    const double floor = invert(GainExpr(alpha), -gamma(amp));
    double y = floor + (trial % 2 == 0 ? 0.0 : uni(rng));
    double min_y = y;
    auto rhs = [&](double t, double yy) { return -alpha(yy) - gamma(std::abs(amp * std::sin(omega * t))); };
    for (std::size_t j = 0; j < 5000; ++j) {
      const double t = dt * static_cast<double>(j);
      const double k1 = rhs(t, y), k2 = rhs(t + dt / 2, y + dt / 2 * k1),
                   k3 = rhs(t + dt / 2, y + dt / 2 * k2), k4 = rhs(t + dt, y + dt * k3);
      y += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
      min_y = std::min(min_y, y);
    }
    CHECK(min_y >= floor - 1e-6);
  }
}

TEST_CASE("comparison randomized suite (reduced)", "[comparison]") {
  const auto result = run_comparison_suite(2024, 60);
  INFO((result.notes.empty() ? std::string("no notes") : result.notes.front()));
  CHECK(result.pass());
}
