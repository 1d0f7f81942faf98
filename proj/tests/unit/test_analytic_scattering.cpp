#include <cmath>
#include <random>

#include "doctest.h"
#include "kgstep/analytic_scattering.hpp"
#include "kgstep/errors.hpp"

using namespace kgstep;

namespace {

ScatteringSolution solve(double e, double v, BranchRule rule = BranchRule::Physical) {
  return solve_step(ParticleParams::from_energy(e, 1.0), v, rule);
}

}  // namespace

TEST_CASE("ordinary step E=1.25, V0=0.1") {
  const ScatteringSolution s = solve(1.25, 0.1);
  CHECK(s.regime == Regime::Ordinary);
  CHECK(s.p_prime == doctest::Approx(0.567890834580027).epsilon(1e-13));
  CHECK(s.b_over_a.real() == doctest::Approx(0.138182283874829).epsilon(1e-13));
  CHECK(s.reflectivity == doctest::Approx(0.0190943435768638).epsilon(1e-13));
  const WaveCurrents w = wave_currents(s);
  CHECK(w.j_t == doctest::Approx(0.735679242317352).epsilon(1e-13));
  CHECK(group_velocity(s.p_prime, 1.25, 0.1, 1.0) == doctest::Approx(0.493818117026111).epsilon(1e-13));
  CHECK(check_current_balance(s) <= 1e-15);
}

TEST_CASE("evanescent step E=1.25, V0=2 reflects totally") {
  const ScatteringSolution s = solve(1.25, 2.0);
  CHECK(s.regime == Regime::Evanescent);
  CHECK(std::isnan(s.p_prime));
  CHECK(s.decay_rate == doctest::Approx(0.661437827766148).epsilon(1e-13));
  CHECK(s.reflectivity == 1.0);
  CHECK(std::abs(s.b_over_a) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(wave_currents(s).j_t == 0.0);
  CHECK_THROWS_AS(antiparticle_relabel(s), DomainError);
}

TEST_CASE("Klein step E=1.25, V0=3 (oracle values)") {
  const ScatteringSolution s = solve(1.25, 3.0);
  CHECK(s.regime == Regime::Klein);
  CHECK(s.p_prime == doctest::Approx(-1.43614066163450716).epsilon(1e-14));
  CHECK(s.b_over_a.real() == doctest::Approx(-3.18614066163450717).epsilon(1e-14));
  CHECK(s.bprime_over_a.real() == doctest::Approx(-2.18614066163450717).epsilon(1e-14));
  CHECK(s.reflectivity == doctest::Approx(10.1514923157207751).epsilon(1e-14));
  const WaveCurrents w = wave_currents(s);
  CHECK(w.rho_i == doctest::Approx(1.25));
  CHECK(w.rho_r == doctest::Approx(12.6893653946510).epsilon(1e-13));
  CHECK(w.rho_t == doctest::Approx(-8.36361923679058).epsilon(1e-13));
  CHECK(w.j_i == doctest::Approx(0.75));
  CHECK(w.j_r == doctest::Approx(-7.61361923679058).epsilon(1e-13));
  CHECK(w.j_t == doctest::Approx(-6.86361923679058).epsilon(1e-13));
  CHECK(group_velocity(s.p_prime, 1.25, 3.0, 1.0) == doctest::Approx(0.820651806648290).epsilon(1e-13));
  CHECK(check_current_balance(s) <= 1e-12);
  CHECK_FALSE(s.attractive());
}

TEST_CASE("antiparticle relabeling of the Klein wave") {
  const AntiparticleView a = antiparticle_relabel(solve(1.25, 3.0));
  CHECK(a.energy == doctest::Approx(1.75).epsilon(1e-15));
  CHECK(a.momentum == doctest::Approx(1.43614066163450716).epsilon(1e-14));
  CHECK(a.direction == 1);
  CHECK(a.phase_sign == -1);
  CHECK(a.measured_energy(0.3, 0.7) == doctest::Approx(1.75).epsilon(1e-8));
  CHECK(a.measured_momentum(0.3, 0.7) == doctest::Approx(a.momentum).epsilon(1e-8));
}

TEST_CASE("trivial and edge inputs") {
  const ScatteringSolution free = solve(1.25, 0.0);
  CHECK(free.reflectivity == 0.0);
  CHECK(free.bprime_over_a == Complex{1.0, 0.0});
  CHECK(solve(1.25, 0.25).reflectivity == 1.0);
  CHECK(solve(1.25, 2.25).reflectivity == 1.0);
  CHECK(solve(1.25, 2.25).p_prime == 0.0);
  CHECK(solve(1.25, -1.0).attractive());
  CHECK(solve(1.25, -1.0).reflectivity < 1.0);
  CHECK_THROWS_AS(solve_step(ParticleParams{1.0, 1.0, 0.0}, 3.0), DomainError);
  CHECK_THROWS_AS(select_pprime_branch(1.25, 2.0, 1.0), DomainError);
}

TEST_CASE("the Klein pole V0 = 2E gives infinite reflectivity") {
  const ScatteringSolution s = solve(1.5, 3.0);
  CHECK(s.regime == Regime::Klein);
  CHECK(std::isinf(s.reflectivity));
  CHECK(std::isinf(s.b_over_a.real()));
}

TEST_CASE("flipped branch breaks Klein R > 1 but not the algebraic balance") {
  const ScatteringSolution s = solve(1.25, 3.0, BranchRule::Flipped);
  CHECK(s.p_prime > 0.0);
  CHECK(s.reflectivity < 1.0);
  CHECK(group_velocity(s.p_prime, 1.25, 3.0, 1.0) < 0.0);
  CHECK(check_current_balance(s) <= 1e-15);
}

TEST_CASE("randomized matching, regime correspondence and transport") {
  std::mt19937_64 gen(20240611);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 20000; ++i) {
    const double e = 10.0 - 9.0 * u(gen);
    const double v = 20.0 * u(gen);
    const ScatteringSolution s = solve(e, v);
    const double scale = std::max({1.0, std::abs(s.b_over_a), std::abs(s.bprime_over_a)});
    const double ulp = std::nextafter(scale, INFINITY) - scale;
    REQUIRE(std::abs(1.0 + s.b_over_a - s.bprime_over_a) <= 4.0 * ulp);
    switch (s.regime) {
      case Regime::Ordinary: REQUIRE(s.reflectivity < 1.0); break;
      case Regime::Klein: REQUIRE(s.reflectivity > 1.0); break;
      default: REQUIRE(std::abs(s.reflectivity - 1.0) <= 1e-12);
    }
    const WaveCurrents w = wave_currents(s);
    // Relative balance holds everywhere; the absolute 1e-12 form only away
    // from the V0 = 2E pole, where |j| itself exceeds 1e3.
    const double jmax = std::max({std::abs(w.j_i), std::abs(w.j_r), std::abs(w.j_t)});
    REQUIRE(check_current_balance(s) <= 8.0 * std::numeric_limits<double>::epsilon() * jmax);
    if (jmax < 1e3) REQUIRE(check_current_balance(s) <= 1e-12);
    if (s.regime == Regime::Klein) {
      const double vg = group_velocity(s.p_prime, e, v, 1.0);
      REQUIRE(w.rho_t < 0.0);
      REQUIRE(w.j_t < 0.0);
      REQUIRE(vg > 0.0);
      REQUIRE(std::abs(w.rho_t * vg - w.j_t) <= 4.0 * (std::nextafter(std::abs(w.j_t), INFINITY) - std::abs(w.j_t)));
    }
  }
}
