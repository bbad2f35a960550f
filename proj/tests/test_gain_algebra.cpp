#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include <safegain/gain_algebra.hpp>
#include <safegain/suites.hpp>

using namespace safegain;
using Catch::Approx;

namespace {

SubsystemGains linear_gains(std::vector<double> alpha_slopes, double phi_slope, double gamma_slope,
                            double sigma_slope) {
  SubsystemGains g;
  g.alphas.clear();
  for (double c : alpha_slopes) g.alphas.push_back(GainFn::linear(c));
  g.phi = phi_slope > 0.0 ? GainFn::linear(phi_slope) : GainFn::zero();
  g.gamma = GainFn::linear(gamma_slope, GainDomain::NonNegative);
  g.sigma = GainFn::linear(sigma_slope);
  return g;
}

// Independent closed form for the all-linear derived interconnection gain:
// (1+sigma0)^{r+1} * phi0 / prod(c_k) from level k upward.
double phi_hat_slope_oracle(const std::vector<double>& alpha_slopes, double phi_slope,
                            double sigma_slope, std::size_t k) {
  double value = (1.0 + sigma_slope) * phi_slope;
  for (std::size_t j = alpha_slopes.size(); j >= k; --j)
    value = (1.0 + sigma_slope) * value / alpha_slopes[j - 1];
  return value;
}

}  // namespace

TEST_CASE("build_phi_hat matches hand-expanded linear chains", "[gain_algebra]") {
  // r = 1: (Id+sigma) o alpha^{-1} o (Id+sigma) o phi with all gains linear.
  CHECK(build_phi_hat(linear_gains({2.0}, 0.3, 1.0, 0.1), 1)(1.0) ==
        Approx(1.1 * 1.1 * 0.3 / 2.0).margin(1e-9));

  // Near-identity chain: vanishing slack makes phi_hat collapse to phi.
  CHECK(build_phi_hat(linear_gains({1.0, 1.0}, 1.0, 1.0, 1e-12), 1)(1.0) ==
        Approx(1.0).margin(1e-6));

  // Benchmark gains: 1.1^3 * 0.3 / 200.
  CHECK(build_phi_hat(linear_gains({20.0, 10.0}, 0.3, 1.0, 0.1), 1)(1.0) ==
        Approx(0.0019965).margin(1e-8));
}

TEST_CASE("build_gamma_hat hand cases", "[gain_algebra]") {
  const auto unit = linear_gains({1.0}, 0.3, 1.0, 1.0);
  for (int k : {1}) CHECK(build_gamma_hat(unit, k)(0.0) == Approx(0.0).margin(1e-12));

  // r = 1 with alpha = gamma = sigma = Id: the inner map is
  // (Id+sigma^{-1})(-s) = -2s, alpha^{-1} passes it through and (Id+sigma)
  // doubles again, so gamma_hat(s) = 4s.
  CHECK(build_gamma_hat(unit, 1)(2.0) == Approx(8.0).margin(1e-9));

  const auto pendulum = linear_gains({20.0, 10.0}, 0.3, 1.0, 0.1);
  CHECK(build_gamma_hat(pendulum, 1)(1.0) < build_gamma_hat(pendulum, 1)(2.0));
}

TEST_CASE("phi_hat and gamma_hat satisfy the level recursion", "[gain_algebra]") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> slope(0.5, 5.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto gains = linear_gains({slope(rng), slope(rng), slope(rng)}, slope(rng) * 0.2,
                                    slope(rng), 0.1);
    const GainExpr id_sigma = GainExpr::id_plus(GainExpr(gains.sigma));
    for (int k = 1; k < gains.relative_degree(); ++k) {
      const auto lhs_phi = build_phi_hat(gains, k);
      const auto rhs_phi = GainExpr::compose(
          id_sigma, GainExpr::compose(GainExpr::inverse(GainExpr(gains.alphas[k - 1])),
                                      build_phi_hat(gains, k + 1)));
      const auto lhs_gamma = build_gamma_hat(gains, k);
      const auto rhs_gamma = GainExpr::compose(
          GainExpr::negate_reflect(GainExpr::compose(
              id_sigma, GainExpr::inverse(GainExpr(gains.alphas[k - 1])))),
          build_gamma_hat(gains, k + 1));
      for (double s : {-3.0, -0.4, 0.7, 2.5}) {
        CHECK(lhs_phi(s) == Approx(rhs_phi(s)).margin(1e-8));
        if (s >= 0.0) CHECK(lhs_gamma(s) == Approx(rhs_gamma(s)).margin(1e-8));
      }
    }
  }
}

TEST_CASE("all-linear phi_hat equals the closed-form product", "[gain_algebra]") {
  const std::vector<double> slopes{4.0, 0.8, 2.5};
  const auto gains = linear_gains(slopes, 0.45, 1.0, 0.1);
  for (std::size_t k = 1; k <= slopes.size(); ++k) {
    const double expected = phi_hat_slope_oracle(slopes, 0.45, 0.1, k);
    for (double s : {-2.0, 1.0, 7.0})
      CHECK(build_phi_hat(gains, static_cast<int>(k))(s) == Approx(expected * s).margin(1e-9));
  }
}

TEST_CASE("derived gains match an exact piecewise-linear oracle", "[gain_algebra]") {
  // Expected values computed independently by exact rational piecewise
  // algebra (pwl inversion is knot swapping).
  SubsystemGains g;
  g.alphas = {GainFn::piecewise_linear({{-1, -2}, {0, 0}, {1, 1}, {2, 3}}),
              GainFn::piecewise_linear({{-2, -1}, {0, 0}, {1, 2}})};
  g.phi = GainFn::piecewise_linear({{-1, -0.5}, {0, 0}, {2, 1}});
  g.gamma = GainFn::piecewise_linear({{0, 0}, {1, 0.5}, {3, 2}}, GainDomain::NonNegative);
  g.sigma = GainFn::linear(0.1);

  const auto phi_hat = build_phi_hat(g, 1);
  CHECK(phi_hat(1.7) == Approx(0.565675).margin(1e-9));
  CHECK(phi_hat(-0.8) == Approx(-0.5324).margin(1e-9));
  CHECK(phi_hat(0.35) == Approx(0.1164625).margin(1e-9));

  const auto gamma_hat = build_gamma_hat(g, 1);
  CHECK(gamma_hat(2.0) == Approx(16.6375).margin(1e-9));
  CHECK(gamma_hat(0.6) == Approx(3.993).margin(1e-9));

  CHECK(compute_margin(g, g, 1, 1, 0.9) == Approx(-5.9895).margin(1e-9));
}

TEST_CASE("build index bounds", "[gain_algebra]") {
  const auto gains = linear_gains({2.0, 3.0}, 0.3, 1.0, 0.1);
  CHECK_THROWS_AS(build_phi_hat(gains, 0), std::out_of_range);
  CHECK_THROWS_AS(build_phi_hat(gains, 3), std::out_of_range);
  CHECK_THROWS_AS(build_gamma_hat(gains, 0), std::out_of_range);
  CHECK_THROWS_AS(build_gamma_hat(gains, 3), std::out_of_range);
}

TEST_CASE("compute_margin hand cases", "[gain_algebra]") {
  const auto pendulum = linear_gains({20.0, 10.0}, 0.3, 1.0, 0.1);
  CHECK(compute_margin(pendulum, pendulum, 1, 1, 0.0) == Approx(0.0).margin(1e-12));

  // Both subsystems with alpha = gamma = sigma = Id and phi slope 0.3:
  // gamma_hat(1) = 4, phi_hat(s) = 2 * 2 * 0.3 s = 1.2 s, so
  // d = min(1.2 * (-4), -4) = -4.8.
  const auto unit = linear_gains({1.0}, 0.3, 1.0, 1.0);
  CHECK(compute_margin(unit, unit, 1, 1, 1.0) == Approx(-4.8).margin(1e-9));

  // Non-increasing in the input norm.
  CHECK(compute_margin(pendulum, pendulum, 1, 1, 2.0) <=
        compute_margin(pendulum, pendulum, 1, 1, 1.0));
}

TEST_CASE("margins are nonpositive for randomized valid gains", "[gain_algebra]") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> slope(0.2, 8.0);
  std::uniform_real_distribution<double> unorm(0.0, 10.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int r = 1 + static_cast<int>(rng() % 3);
    std::vector<double> a1, a2;
    for (int k = 0; k < r; ++k) {
      a1.push_back(slope(rng));
      a2.push_back(slope(rng));
    }
    const auto g1 = linear_gains(a1, slope(rng) * 0.2, slope(rng), 0.1);
    const auto g2 = linear_gains(a2, slope(rng) * 0.2, slope(rng), 0.1);
    const int i = 1 + static_cast<int>(rng() % 2);
    const int k = 1 + static_cast<int>(rng() % r);
    CHECK(compute_margin(g1, g2, i, k, unorm(rng)) <= 1e-12);
  }
}

TEST_CASE("small-gain verdicts on the benchmark and degraded gain sets", "[gain_algebra]") {
  const auto g1 = linear_gains({20.0, 10.0}, 0.3, 1.0, 0.1);
  const auto g2 = linear_gains({20.0, 10.0}, 0.3, 1.0, 0.1);
  const auto report = check_small_gain(g1, g2);
  CHECK(report.pass);
  CHECK(report.max_ratio == Approx(0.09 * std::pow(1.1, 6) / 40000.0).margin(1e-8));
  CHECK(report.all_linear);
  CHECK(report.closed_form_ratio == Approx(report.max_ratio).margin(1e-8));

  const auto weak1 = linear_gains({0.5, 0.5}, 0.3, 1.0, 0.1);
  const auto weak2 = linear_gains({0.5, 0.5}, 0.3, 1.0, 0.1);
  const auto degraded = check_small_gain(weak1, weak2);
  CHECK_FALSE(degraded.pass);
  CHECK(degraded.max_ratio == Approx(0.09 * std::pow(1.1, 6) / 0.0625).margin(1e-6));

  // Cascade: a vanishing coupling gain passes trivially.
  const auto cascade1 = linear_gains({20.0, 10.0}, 0.0, 1.0, 0.1);
  const auto cascade = check_small_gain(cascade1, g2);
  CHECK(cascade.pass);
  CHECK(cascade.max_ratio == 0.0);
}

TEST_CASE("small-gain pass is strict at ratio one", "[gain_algebra]") {
  // Unit loop gain (up to a vanishing slack): not a contraction, must fail.
  const auto g1 = linear_gains({1.0}, 1.0, 1.0, 1e-14);
  const auto g2 = linear_gains({1.0}, 1.0, 1.0, 1e-14);
  const auto report = check_small_gain(g1, g2);
  CHECK(report.max_ratio == Approx(1.0).margin(1e-9));
  CHECK_FALSE(report.pass);
}

TEST_CASE("small-gain report flags nonlinear gain sets with a caveat", "[gain_algebra]") {
  auto g1 = linear_gains({2.0, 2.0}, 0.3, 1.0, 0.1);
  g1.phi = GainFn::piecewise_linear({{-1.0, -0.4}, {0.0, 0.0}, {1.0, 0.3}});
  const auto g2 = linear_gains({2.0, 2.0}, 0.3, 1.0, 0.1);
  const auto report = check_small_gain(g1, g2);
  CHECK_FALSE(report.all_linear);
  CHECK_FALSE(report.caveat.empty());
}

TEST_CASE("weak inequalities on hand samples", "[gain_algebra]") {
  const auto gamma = GainFn::linear(1.0);
  const auto sigma = GainFn::linear(1.0);
  const std::vector<std::pair<double, double>> samples{{1.0, 1.0}, {-1.0, -1.0}, {0.0, 0.0}};
  const auto report = check_weak_inequalities(gamma, sigma, samples);
  CHECK(report.pass);
  CHECK(report.samples == 3);
}

TEST_CASE("weak-inequality randomized suite", "[gain_algebra]") {
  const auto result = run_weak_inequality_suite(123, 2000);
  INFO((result.notes.empty() ? std::string("no notes") : result.notes.front()));
  CHECK(result.pass());
}

TEST_CASE("margin levels are invariance levels for coupled chains", "[gain_algebra]") {
  const auto result = run_interconnection_suite(17, 20);
  INFO((result.notes.empty() ? std::string("no notes") : result.notes.front()));
  CHECK(result.pass());
}

TEST_CASE("subsystem gain validation", "[gain_algebra]") {
  auto good = linear_gains({2.0, 3.0}, 0.3, 1.0, 0.1);
  CHECK(validate(good).pass);

  auto cascade = linear_gains({2.0, 3.0}, 0.0, 1.0, 0.1);
  CHECK(validate(cascade).pass);  // zero phi is a cascade, not a failure

  auto bad = good;
  bad.phi = GainFn::custom([](double) { return 0.5; }, GainDomain::Extended, "constant");
  CHECK_FALSE(validate(bad).pass);
}
