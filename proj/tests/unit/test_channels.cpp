#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "nmsvr/channels.hpp"
#include "nmsvr/error.hpp"
#include "oracles.hpp"

using namespace nmsvr;

TEST_SUITE("channels") {

TEST_CASE("time grid") {
  const TimeGrid g(20.0, 4);
  CHECK(g.size() == 5);
  CHECK(g[0] == 0.0);
  CHECK(g[4] == 20.0);
  CHECK(g.step() == 5.0);
  CHECK(g.refined().n_steps() == 8);
  CHECK_THROWS_AS(TimeGrid(1.0, 0), ConfigError);
  CHECK_THROWS_AS(TimeGrid(-1.0, 10), ConfigError);
  CHECK_THROWS_AS(g[5], DimensionError);
  CHECK(TimeGrid(0.0, 1).size() == 2);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(validate(PhaseDamping{0.0}), ConfigError);
  CHECK_THROWS_AS(validate(AmplitudeDamping{-1.0, 1.0}), ConfigError);
  CHECK_THROWS_AS(validate(DrivenAmplitudeDamping{1.0, 1.0, -0.1, 8}), ConfigError);
  CHECK_THROWS_AS(validate(DrivenAmplitudeDamping{1.0, 1.0, 0.1, 1}), ConfigError);
  CHECK_NOTHROW(validate(DrivenAmplitudeDamping{1.0, 1.0, 0.0, 8}));
}

TEST_CASE("dephasing factor") {
  CHECK(pd_lambda(0.0, 0.5) == 1.0);
  CHECK(pd_lambda(0.0, 0.1) == 1.0);

  SUBCASE("first zero at tau = 1/2") {
    const double s3 = std::sqrt(3.0);
    const double root = oracle::bisect([&](double v) { return std::cos(s3 * v) + std::sin(s3 * v) / s3; }, 0.5, 1.5);
    CHECK(std::abs(root - 2.0 * std::numbers::pi / (3.0 * s3)) < 1e-12);
    CHECK(std::abs(pd_lambda(root, 0.5)) < 1e-12);
    CHECK(pd_lambda(root - 1e-3, 0.5) > 0.0);
    CHECK(pd_lambda(root + 1e-3, 0.5) < 0.0);
  }
  SUBCASE("matches the complex-frequency form") {
    for (double tau : {0.1, 0.2, 0.2499, 0.25, 0.2501, 0.3, 0.5}) {
      for (double nu = 0.0; nu <= 20.0; nu += 0.37) {
        CHECK(std::abs(pd_lambda(nu, tau) - oracle::pd_lambda(nu, tau)) < 1e-9);
      }
    }
  }
  SUBCASE("positive and decreasing below tau = 1/4") {
    double prev = 2.0;
    for (int i = 0; i <= 2000; ++i) {
      const double v = pd_lambda(0.01 * i, 0.2);
      CHECK(v > 0.0);
      CHECK(v < prev);
      prev = v;
    }
  }
  SUBCASE("continuous across tau = 1/4") {
    for (double nu : {0.5, 2.0, 7.0}) {
      CHECK(std::abs(pd_lambda(nu, 0.25 - 1e-6) - pd_lambda(nu, 0.25)) < 1e-4);
      CHECK(std::abs(pd_lambda(nu, 0.25 + 1e-6) - pd_lambda(nu, 0.25)) < 1e-4);
    }
  }
}

TEST_CASE("dephasing map") {
  std::mt19937_64 rng(1);
  const auto rho = oracle::random_state(2, 2, rng);
  const auto out = pd_apply(rho, 1.3, 0.5);
  const double l = pd_lambda(1.3, 0.5);
  CHECK(std::abs(out(0, 0) - rho(0, 0)) < 1e-15);
  CHECK(std::abs(out(1, 1) - rho(1, 1)) < 1e-15);
  CHECK(std::abs(out(0, 1) - l * rho(0, 1)) < 1e-15);

  const auto k = pd_kraus(1.3, 0.5);
  CHECK(max_abs_diff(apply_kraus(rho, k).matrix(), out.matrix()) < 1e-12);
  CHECK(max_abs_diff(pd_apply(rho, 0.0, 0.5).matrix(), rho.matrix()) < 1e-15);
  CHECK(std::abs(expectation(ops::pauli_x(), pd_apply(DensityMatrix::plus(), 1.3, 0.5)) - l) < 1e-14);

  ComplexMatrix sum(2, 2);
  for (const auto& m : k) sum += m.adjoint() * m;
  CHECK(max_abs_diff(sum, ComplexMatrix::identity(2)) < 1e-14);
}

TEST_CASE("amplitude damping survival") {
  CHECK(ad_survival(0.0, 1.0) == 1.0);
  CHECK(ad_survival(0.0, 3.0) == 1.0);
  for (double lambda : {0.1, 1.0, 1.9, 2.0, 2.5, 3.0}) {
    for (double t = 0.0; t <= 20.0; t += 0.61) {
      CHECK(std::abs(ad_survival(t, lambda) - oracle::ad_survival(t, lambda)) < 1e-10);
      CHECK(std::abs(ad_amplitude(t, lambda) * ad_amplitude(t, lambda) - ad_survival(t, lambda)) < 1e-15);
    }
  }

  SUBCASE("first zero for lambda = 1") {
    const double d = 1.0;
    const double want = 2.0 / d * (std::numbers::pi - std::atan(d / 1.0));
    const double root = oracle::bisect([](double t) { return ad_amplitude(t, 1.0); }, 1.0, 6.0);
    CHECK(std::abs(root - want) < 1e-10);
    CHECK(ad_survival(want, 1.0) < 1e-20);
  }
  SUBCASE("monotone in the Markovian regime") {
    double prev = 1.0;
    for (int i = 1; i <= 2000; ++i) {
      const double p = ad_survival(0.01 * i, 3.0);
      CHECK(p < prev);
      prev = p;
    }
  }
}

TEST_CASE("amplitude damping map") {
  const auto g = DensityMatrix::ground();
  CHECK(max_abs_diff(ad_apply(g, 2.0, 0.7).matrix(), g.matrix()) < 1e-15);

  std::mt19937_64 rng(2);
  const auto rho = oracle::random_state(2, 2, rng);
  CHECK(max_abs_diff(ad_apply(rho, 0.0, 0.7).matrix(), rho.matrix()) < 1e-15);

  const double t36 = oracle::bisect([](double t) { return ad_survival(t, 1.0) - 0.36; }, 0.0, 2.0);
  const auto e = ad_apply(DensityMatrix::excited(), t36, 1.0);
  CHECK(std::abs(e(0, 0) - 0.36) < 1e-12);
  CHECK(std::abs(e(1, 1) - 0.64) < 1e-12);
  CHECK(std::abs(e(0, 1)) < 1e-15);

  for (double t : {0.5, 3.0, 4.0, 6.0}) {
    const auto k = ad_kraus(t, 0.4);
    CHECK(max_abs_diff(apply_kraus(rho, k).matrix(), ad_apply(rho, t, 0.4).matrix()) < 1e-12);
    ComplexMatrix sum(2, 2);
    for (const auto& m : k) sum += m.adjoint() * m;
    CHECK(max_abs_diff(sum, ComplexMatrix::identity(2)) < 1e-14);
  }
  CHECK_THROWS_AS(ad_apply(DensityMatrix::bell_phi_plus(), 1.0, 1.0), DimensionError);
}

TEST_CASE("one-sided maps preserve states") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    const auto rho = oracle::random_state(4, 1 + rep % 4, rng);
    const double nu = 0.3 * rep, t = 0.25 * rep;
    const auto a = pd_apply_one_sided(rho, nu, 0.5);
    const auto b = apply_one_sided(rho, pd_kraus(nu, 0.5));
    CHECK(max_abs_diff(a.matrix(), b.matrix()) < 1e-12);
    const auto c = ad_apply_one_sided(rho, t, 0.3);
    const auto d = apply_one_sided(rho, ad_kraus(t, 0.3));
    CHECK(max_abs_diff(c.matrix(), d.matrix()) < 1e-12);
    // the untouched factor keeps its marginal
    const std::array<std::size_t, 2> dims{2, 2};
    const std::array<std::size_t, 1> keep{0};
    CHECK(max_abs_diff(partial_trace(c, dims, keep).matrix(), partial_trace(rho, dims, keep).matrix()) < 1e-12);
  }
  CHECK_THROWS_AS(pd_apply_one_sided(DensityMatrix::plus(), 1.0, 0.5), DimensionError);
}

TEST_CASE("pseudomode integrator without drive reproduces the closed form") {
  const TimeGrid grid(20.0, 2000);
  for (double lambda : {0.3, 2.5}) {
    const DrivenAmplitudeDamping spec{lambda, 1.0, 0.0, 8};
    const auto states = driven_ad_evolve(DensityMatrix::plus(), grid, spec);
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto want = ad_apply(DensityMatrix::plus(), grid[i], lambda);
      worst = std::max(worst, max_abs_diff(states[i].matrix(), want.matrix()));
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("pseudomode integrator bookkeeping") {
  const DrivenAmplitudeDamping spec{0.5, 1.0, 0.2, 8};
  PseudomodeIntegrator integ(spec, DensityMatrix::bell_phi_plus());
  CHECK(integ.system_dim() == 4);
  integ.advance(0.0);
  CHECK(max_abs_diff(integ.reduced_matrix(), DensityMatrix::bell_phi_plus().matrix()) < 1e-15);
  integ.advance(10.0);
  CHECK(integ.time() == 10.0);
  CHECK(std::abs(integ.full_trace() - 1.0) < 1e-10);
  // the ancilla marginal never moves
  const std::array<std::size_t, 2> dims{2, 2};
  const std::array<std::size_t, 1> keep{0};
  const auto anc = partial_trace(integ.reduced_state(), dims, keep);
  CHECK(max_abs_diff(anc.matrix(), ComplexMatrix::identity(2) * cplx(0.5, 0)) < 1e-10);
  CHECK_THROWS_AS(integ.advance(-1.0), ConfigError);
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(PseudomodeIntegrator(spec, oracle::random_state(8, 1, rng)), DimensionError);
}

TEST_CASE("halving the integrator step does not move the trajectory") {
  const DrivenAmplitudeDamping spec{0.5, 1.0, 0.2, 8};
  const TimeGrid grid(20.0, 200);
  const auto coarse = driven_ad_evolve(DensityMatrix::plus(), grid, spec, {1e-3, 1e-6});
  const auto fine = driven_ad_evolve(DensityMatrix::plus(), grid, spec, {5e-4, 1e-6});
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    worst = std::max(worst, max_abs_diff(coarse[i].matrix(), fine[i].matrix()));
  CHECK(worst < 1e-9);
}

TEST_CASE("zero-length grid returns the input") {
  const DrivenAmplitudeDamping spec{0.5, 1.0, 0.3, 8};
  const auto out = driven_ad_evolve(DensityMatrix::plus(), TimeGrid(0.0, 1), spec);
  REQUIRE(out.size() == 2);
  CHECK(max_abs_diff(out[1].matrix(), DensityMatrix::plus().matrix()) == 0.0);
}

TEST_CASE("too small a truncation leaks") {
  const DrivenAmplitudeDamping spec{0.1, 1.0, 0.0, 2};
  CHECK_THROWS_AS(driven_ad_evolve(DensityMatrix::excited(), TimeGrid(20.0, 200), spec), TruncationLeak);
}

}  // TEST_SUITE
