#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include <safegain/barrier_chain.hpp>
#include <safegain/simulator.hpp>
#include <safegain/suites.hpp>

using namespace safegain;
using Catch::Approx;

namespace {

// Double integrator dx1 = x2, dx2 = u with h = x1 and unit linear chain
// gains: eta_0 = x1, eta_1 = x2 + x1, eta_2 = u + x1 + 2 x2.
BarrierChain double_integrator_chain(double scale_eta1 = 1.0) {
  std::vector<ScalarField> oracles;
  oracles.push_back([](std::span<const double> x, std::span<const double>) { return x[0]; });
  oracles.push_back([scale_eta1](std::span<const double> x, std::span<const double>) {
    return scale_eta1 * (x[1] + x[0]);
  });
  oracles.push_back([](std::span<const double> x, std::span<const double> u) {
    return u[0] + x[0] + 2.0 * x[1];
  });
  return make_barrier_chain([](std::span<const double> x) { return x[0]; }, std::move(oracles),
                            {GainFn::linear(1.0), GainFn::linear(1.0)});
}

Trajectory integrate_double_integrator(std::array<double, 2> x0, double t_end, double dt) {
  SystemSpec spec;
  spec.state_dim = 2;
  spec.input_dim = 1;
  spec.input_signal = [](double, std::span<double> u) { u[0] = 0.0; };
  spec.vector_field = [](double, std::span<const double> x, std::span<const double> u,
                         std::span<double> dxdt) {
    dxdt[0] = x[1];
    dxdt[1] = u[0];
  };
  return integrate(spec, x0, t_end, dt);
}

}  // namespace

TEST_CASE("eta evaluates the chain oracles", "[barrier_chain]") {
  const auto chain = double_integrator_chain();
  const std::array<double, 2> x{1.0, 2.0};
  const std::array<double, 1> u{0.0};
  CHECK(eta(chain, 0, x, u) == 1.0);
  CHECK(eta(chain, 1, x, u) == 3.0);
  CHECK(eta(chain, 2, x, u) == 5.0);

  const std::array<double, 2> origin{0.0, 0.0};
  for (int k = 0; k <= 2; ++k) CHECK(eta(chain, k, origin, u) == 0.0);

  CHECK_THROWS_AS(eta(chain, 3, x, u), std::out_of_range);
  CHECK_THROWS_AS(eta(chain, -1, x, u), std::out_of_range);
}

TEST_CASE("pendulum-style eta_1 hand value", "[barrier_chain]") {
  // eta_1 = x2 + c1 (x1 - theta_floor) with c1 = 20, theta_floor = -0.4.
  const double eta1 = 1.0 + 20.0 * (0.5 - (-0.4));
  CHECK(eta1 == Approx(19.0));
}

TEST_CASE("alpha_hat closed form for linear chains", "[barrier_chain]") {
  std::vector<ScalarField> oracles(3, [](std::span<const double>, std::span<const double>) {
    return 0.0;
  });
  const auto chain = make_barrier_chain([](std::span<const double>) { return 0.0; },
                                        std::move(oracles),
                                        {GainFn::linear(2.0), GainFn::linear(4.0)});
  CHECK(alpha_hat(chain, 1)(1.0) == Approx(1.0 / 8.0).margin(1e-12));
  CHECK(alpha_hat(chain, 2)(1.0) == Approx(1.0 / 4.0).margin(1e-12));
  CHECK(alpha_hat(chain, 1)(0.0) == Approx(0.0).margin(1e-15));
  CHECK_THROWS_AS(alpha_hat(chain, 0), std::out_of_range);
  CHECK_THROWS_AS(alpha_hat(chain, 3), std::out_of_range);

  // Piecewise-linear chain against the exact knot-swapping oracle.
  std::vector<ScalarField> pwl_dummy(3, [](std::span<const double>, std::span<const double>) {
    return 0.0;
  });
  const auto pwl_chain = make_barrier_chain(
      [](std::span<const double>) { return 0.0; }, std::move(pwl_dummy),
      {GainFn::piecewise_linear({{-1, -2}, {0, 0}, {1, 1}, {2, 3}}),
       GainFn::piecewise_linear({{-2, -1}, {0, 0}, {1, 2}})});
  CHECK(alpha_hat(pwl_chain, 1)(1.5) == Approx(1.5).margin(1e-9));
  CHECK(alpha_hat(pwl_chain, 1)(-2.5) == Approx(-1.125).margin(1e-9));

  // Reciprocal product within 1e-12 on random slopes.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> slope(0.5, 20.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> slopes{slope(rng), slope(rng), slope(rng)};
    std::vector<GainFn> alphas;
    for (double c : slopes) alphas.push_back(GainFn::linear(c));
    std::vector<ScalarField> dummy(4, [](std::span<const double>, std::span<const double>) {
      return 0.0;
    });
    const auto c3 = make_barrier_chain([](std::span<const double>) { return 0.0; },
                                       std::move(dummy), std::move(alphas));
    for (int k = 1; k <= 3; ++k) {
      double prod = 1.0;
      for (int j = k; j <= 3; ++j) prod *= slopes[static_cast<std::size_t>(j - 1)];
      for (double s : {-3.0, 1.0, 2.0})
        CHECK(alpha_hat(c3, k)(s) == Approx(s / prod).margin(1e-12));
    }
  }
}

TEST_CASE("tilde_eta shifts by the inflated input gain", "[barrier_chain]") {
  const auto chain = double_integrator_chain();
  const std::array<double, 2> x{0.7, -0.3};
  const std::array<double, 1> u{0.0};
  const auto gamma = GainFn::linear(1.0, GainDomain::NonNegative);

  // u_norm = 0: identical bits.
  for (int k = 0; k <= 1; ++k)
    CHECK(tilde_eta(chain, k, x, u, 0.0, gamma) == eta(chain, k, x, u));

  // Unit slopes: alpha_hat_1(8) = 8.
  CHECK(tilde_eta(chain, 0, x, u, 8.0, gamma) == Approx(eta(chain, 0, x, u) + 8.0).margin(1e-8));

  // Non-decreasing in u_norm.
  double prev = tilde_eta(chain, 0, x, u, 0.0, gamma);
  for (double un : {0.5, 1.0, 2.0, 4.0}) {
    const double cur = tilde_eta(chain, 0, x, u, un, gamma);
    CHECK(cur >= prev);
    prev = cur;
  }

  CHECK_THROWS_AS(tilde_eta(chain, 2, x, u, 1.0, gamma), std::out_of_range);
}

TEST_CASE("membership against margin levels", "[barrier_chain]") {
  const auto chain = double_integrator_chain();
  const std::array<double, 1> u{0.0};

  const std::array<double, 2> inside{0.5, 0.2};
  const std::vector<double> zero_margins{0.0, 0.0};
  const auto all_in = membership(chain, inside, u, zero_margins);
  CHECK(all_in.all_in_S());
  CHECK(all_in.all_in_C());
  CHECK(all_in.distances[0] == 0.5);

  // eta_0 = -0.1 with margin -0.5: outside S, inside C.
  const std::array<double, 2> between{-0.1, 0.3};
  const std::vector<double> margins{-0.5, -0.5};
  const auto split = membership(chain, between, u, margins);
  CHECK_FALSE(split.in_S[0]);
  CHECK(split.in_C[0]);

  const std::array<double, 2> outside{-0.6, 0.3};
  const auto both_out = membership(chain, outside, u, margins);
  CHECK_FALSE(both_out.in_S[0]);
  CHECK_FALSE(both_out.in_C[0]);

  // S is a subset of C whenever margins are nonpositive.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> coord(-2.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::array<double, 2> x{coord(rng), coord(rng)};
    const auto ms = membership(chain, x, u, margins);
    for (int k = 0; k < chain.r; ++k)
      if (ms.in_S[static_cast<std::size_t>(k)]) CHECK(ms.in_C[static_cast<std::size_t>(k)]);
  }
}

TEST_CASE("safety_lyapunov is the worst margin deficit", "[barrier_chain]") {
  const auto chain = double_integrator_chain();
  const std::array<double, 1> u{0.0};
  const std::vector<double> zero_margins{0.0, 0.0};

  const std::array<double, 2> inside{0.5, 0.2};
  CHECK(safety_lyapunov(chain, inside, u, zero_margins) == 0.0);

  // eta = (-1, 0.5) -> V = 1; eta = (-1, -2) -> V = 2. With the unit chain,
  // eta_0 = x1, eta_1 = x1 + x2.
  const std::array<double, 2> mixed{-1.0, 1.5};
  CHECK(safety_lyapunov(chain, mixed, u, zero_margins) == Approx(1.0));
  const std::array<double, 2> deep{-1.0, -1.0};
  CHECK(safety_lyapunov(chain, deep, u, zero_margins) == Approx(2.0));

  // Zero exactly on C, positive outside.
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> coord(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::array<double, 2> x{coord(rng), coord(rng)};
    const auto ms = membership(chain, x, u, zero_margins);
    const double v = safety_lyapunov(chain, x, u, zero_margins);
    if (ms.all_in_C())
      CHECK(v == 0.0);
    else
      CHECK(v > 0.0);
  }
}

TEST_CASE("margin-form implication checks", "[barrier_chain]") {
  const auto chain = double_integrator_chain();

  SECTION("huge phi never triggers the antecedent") {
    const auto phi = GainFn::linear(1e6, GainDomain::NonNegative);
    std::vector<std::pair<std::vector<double>, std::vector<double>>> samples;
    for (double v = -3.0; v <= 3.0; v += 0.5) samples.push_back({{v, -v}, {0.1}});
    const auto report = check_margin_form(chain, phi, samples);
    CHECK(report.pass);
  }

  SECTION("randomized construction passes (suite)") {
    const auto result = run_margin_form_suite(7, 2000);
    INFO((result.notes.empty() ? std::string("no notes") : result.notes.front()));
    CHECK(result.pass());
  }

  SECTION("broken chain fails at large |eta_{r-1}|") {
    std::vector<ScalarField> oracles;
    oracles.push_back([](std::span<const double> x, std::span<const double>) { return x[0]; });
    oracles.push_back(
        [](std::span<const double> x, std::span<const double>) { return x[1] + x[0]; });
    oracles.push_back([](std::span<const double>, std::span<const double>) { return -1.0; });
    const auto broken =
        make_barrier_chain([](std::span<const double> x) { return x[0]; }, std::move(oracles),
                           {GainFn::linear(1.0), GainFn::linear(1.0)});
    std::vector<std::pair<std::vector<double>, std::vector<double>>> samples{
        {{10.0, 10.0}, {0.0}}};
    const auto report = check_margin_form(broken, GainFn::linear(1.0, GainDomain::NonNegative),
                                          samples);
    CHECK_FALSE(report.pass);
  }
}

TEST_CASE("finite-difference consistency guard", "[barrier_chain]") {
  const double dt = 1e-3;
  const auto traj = integrate_double_integrator({1.0, 2.0}, 2.0, dt);

  const auto good = double_integrator_chain();
  const auto report = finite_diff_check(good, traj, 1e-2);
  CHECK(report.pass);
  CHECK(report.samples > 0);

  // Constant trajectory at the equilibrium: zero residual.
  const auto frozen = integrate_double_integrator({0.0, 0.0}, 0.1, dt);
  CHECK(finite_diff_check(good, frozen, 1e-9).pass);

  // A deliberately rescaled eta_1 violates the recursion at O(1).
  const auto scaled = double_integrator_chain(2.0);
  CHECK_FALSE(finite_diff_check(scaled, traj, 1e-2).pass);

  // Fewer than 3 samples cannot support the stencil.
  Trajectory tiny = traj;
  tiny.times.resize(2);
  tiny.states.resize(2 * 2);
  tiny.inputs.resize(2 * 1);
  CHECK_THROWS_AS(finite_diff_check(good, tiny, 1e-2), TooShortError);
}

TEST_CASE("single-chain invariance and decay (reduced suite)", "[barrier_chain]") {
  const auto result = run_invariance_suite(31, 20);
  INFO((result.notes.empty() ? std::string("no notes") : result.notes.front()));
  CHECK(result.pass());
}

TEST_CASE("safety Lyapunov decay sits under a conservative KL envelope", "[barrier_chain]") {
  // Undriven chain integrator with slopes (2, 3) started outside S with
  // eta = (-1, 0): eta_1 stays at its equilibrium and eta_0 = -e^{-2t}, so
  // V(t) = e^{-2t}. A flow envelope built from the much slower alpha = 0.4 s
  // must dominate it at every sample.
  auto sys = detail::LinearChainSystem::make(
      {2.0, 3.0}, GainFn::linear(1.0, GainDomain::NonNegative), 0.0);
  const auto chain = sys.chain();
  const std::vector<double> x0 = sys.state_for(std::vector<double>{-1.0, 0.0});
  const auto spec = sys.system([](double, std::span<double> u) { u[0] = 0.0; });
  const auto traj = integrate(spec, x0, 6.0, 1e-3);

  const std::vector<double> zero_margins{0.0, 0.0};
  const std::array<double, 1> u0{0.0};
  const auto dist = [&](std::span<const double> x) {
    return safety_lyapunov(chain, x, u0, zero_margins);
  };
  CHECK(dist(traj.state(0)) == Approx(1.0));

  const auto slow = GainFn::linear(0.4);
  const auto envelope = [&](double s0, double t) { return beta(slow, s0, t, 1e-3); };
  CHECK(check_iss_envelope(traj, dist, envelope, 0.0).pass);
}
