#include <cmath>
#include <random>

#include "doctest.h"
#include "kgstep/core_model.hpp"
#include "kgstep/errors.hpp"

using namespace kgstep;

TEST_CASE("momentum_from_energy returns the positive on-shell root") {
  CHECK(momentum_from_energy(1.25, 1.0) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(momentum_from_energy(1.0, 1.0) == 0.0);
  CHECK(momentum_from_energy(2.5, 2.0) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK_THROWS_AS(momentum_from_energy(0.9, 1.0), DomainError);
  CHECK_THROWS_AS(momentum_from_energy(1.0, 0.0), DomainError);
  CHECK_THROWS_AS(momentum_from_energy(std::nan(""), 1.0), DomainError);
}

TEST_CASE("mass shell holds to 4 ulps over random inputs") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 5000; ++i) {
    const double m = 0.05 + 20.0 * u(gen);
    const double e = m * (1.0 + 50.0 * u(gen));
    const double p = momentum_from_energy(e, m);
    const double e2 = e * e;
    const double ulp = std::nextafter(e2, INFINITY) - e2;
    REQUIRE(std::abs(p * p + m * m - e2) <= 4.0 * ulp);
  }
}

TEST_CASE("transmitted momentum squared for the worked energies") {
  CHECK(transmitted_momentum_squared(1.25, 0.0, 1.0) == doctest::Approx(0.5625).epsilon(1e-15));
  CHECK(transmitted_momentum_squared(1.25, 2.0, 1.0) == doctest::Approx(-0.4375).epsilon(1e-15));
  CHECK(transmitted_momentum_squared(1.25, 3.0, 1.0) == doctest::Approx(2.0625).epsilon(1e-15));
  CHECK(transmitted_momentum_squared(1.25, 0.25, 1.0) == 0.0);
  CHECK(transmitted_momentum_squared(1.25, 2.25, 1.0) == 0.0);
}

TEST_CASE("classify_regime covers all five regimes") {
  CHECK(classify_regime(1.25, 0.1, 1.0) == Regime::Ordinary);
  CHECK(classify_regime(1.25, -3.0, 1.0) == Regime::Ordinary);
  CHECK(classify_regime(1.25, 0.25, 1.0) == Regime::ThresholdLower);
  CHECK(classify_regime(1.25, 2.0, 1.0) == Regime::Evanescent);
  CHECK(classify_regime(1.25, 2.25, 1.0) == Regime::ThresholdUpper);
  CHECK(classify_regime(1.25, 3.0, 1.0) == Regime::Klein);
  CHECK(to_string(Regime::Klein) == "Klein");
  CHECK(is_threshold(Regime::ThresholdUpper));
  CHECK_FALSE(is_oscillatory(Regime::Evanescent));
}

TEST_CASE("classification agrees with the sign of p'^2") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 20000; ++i) {
    const double e = 10.0 - 9.0 * u(gen);
    const double v = 20.0 * u(gen);
    const Regime r = classify_regime(e, v, 1.0);
    const double q = transmitted_momentum_squared(e, v, 1.0);
    if (r == Regime::Evanescent) {
      REQUIRE(q < 0.0);
    } else if (is_threshold(r)) {
      REQUIRE(q == 0.0);
    } else {
      REQUIRE(q > 0.0);
    }
  }
}

TEST_CASE("threshold helpers land exactly on E - V0 = +-m") {
  for (double e : {1.25, 3.0, 7.5, 9.875}) {
    const double lower = threshold_step_height(e, 1.0, Regime::ThresholdLower);
    const double upper = threshold_step_height(e, 1.0, Regime::ThresholdUpper);
    CHECK(classify_regime(e, lower, 1.0) == Regime::ThresholdLower);
    CHECK(classify_regime(e, upper, 1.0) == Regime::ThresholdUpper);
  }
  for (double v : {0.0, 2.0, 3.0, 12.5}) {
    const double e = threshold_energy(v, 1.0, Regime::ThresholdLower);
    CHECK(e - v == 1.0);
  }
  CHECK_THROWS_AS(threshold_energy(3.0, 1.0, Regime::Klein), DomainError);
}

TEST_CASE("group velocity is p'/(E - V0) and defined only for oscillatory waves") {
  CHECK(group_velocity(0.5679, 1.25, 0.1, 1.0) == doctest::Approx(0.493826086956522).epsilon(1e-14));
  CHECK(group_velocity(-1.4361, 1.25, 3.0, 1.0) == doctest::Approx(0.820628571428571).epsilon(1e-14));
  CHECK_THROWS_AS(group_velocity(0.0, 1.25, 2.0, 1.0), DomainError);
  CHECK_THROWS_AS(group_velocity(0.0, 1.25, 2.25, 1.0), DomainError);
}

TEST_CASE("step potential samples and smoothing") {
  const StepPotential sharp{3.0, 0.0, 1.0};
  CHECK(sharp(0.5) == 0.0);
  CHECK(sharp(1.5) == 3.0);
  CHECK(sharp.sample(1.0) == 1.5);
  CHECK(sharp.sharp());
  const StepPotential smooth{3.0, 0.5, 0.0};
  CHECK(smooth(0.0) == doctest::Approx(1.5));
  CHECK(smooth(0.5) == doctest::Approx(1.5 * (1.0 + std::tanh(1.0))));
  CHECK(smooth(-20.0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("particle parameters are built on shell") {
  const ParticleParams p = ParticleParams::from_energy(1.25, 1.0);
  CHECK(p.mass == 1.0);
  CHECK(p.energy == 1.25);
  CHECK(p.momentum == doctest::Approx(0.75));
  CHECK_THROWS_AS(ParticleParams::from_energy(0.5, 1.0), DomainError);
}
