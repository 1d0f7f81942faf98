#include "kgstep/core_model.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "kgstep/errors.hpp"

namespace kgstep {

ParticleParams ParticleParams::from_energy(double energy, double mass) {
  return ParticleParams{mass, energy, momentum_from_energy(energy, mass)};
}

double StepPotential::operator()(double x) const {
  if (smoothing_width > 0.0) {
    return 0.5 * height * (1.0 + std::tanh((x - x_step) / smoothing_width));
  }
  if (x < x_step) return 0.0;
  if (x > x_step) return height;
  return 0.5 * height;
}

double StepPotential::sample(double x) const { return (*this)(x); }

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::Ordinary: return "Ordinary";
    case Regime::Evanescent: return "Evanescent";
    case Regime::Klein: return "Klein";
    case Regime::ThresholdLower: return "ThresholdLower";
    case Regime::ThresholdUpper: return "ThresholdUpper";
  }
  return "Unknown";
}

bool is_threshold(Regime regime) {
  return regime == Regime::ThresholdLower || regime == Regime::ThresholdUpper;
}

bool is_oscillatory(Regime regime) {
  return regime == Regime::Ordinary || regime == Regime::Klein;
}

double momentum_from_energy(double energy, double mass) {
  if (!(mass > 0.0)) {
    throw DomainError("momentum_from_energy: mass must be positive, got " + std::to_string(mass));
  }
  if (!(energy >= mass)) {
    throw DomainError("momentum_from_energy: energy " + std::to_string(energy) +
                      " is below the rest mass " + std::to_string(mass));
  }
  return std::sqrt((energy - mass) * (energy + mass));
}

double transmitted_momentum_squared(double energy, double step_height, double mass) {
  const double local = energy - step_height;
  return (local - mass) * (local + mass);
}

Regime classify_regime(double energy, double step_height, double mass) {
  const double local = energy - step_height;
  if (local > mass) return Regime::Ordinary;
  if (local == mass) return Regime::ThresholdLower;
  if (local > -mass) return Regime::Evanescent;
  if (local == -mass) return Regime::ThresholdUpper;
  return Regime::Klein;
}

double group_velocity(double p_prime, double energy, double step_height, double mass) {
  if (!is_oscillatory(classify_regime(energy, step_height, mass))) {
    throw DomainError("group_velocity: transmitted wave is not oscillatory at E=" +
                      std::to_string(energy) + ", V0=" + std::to_string(step_height));
  }
  return p_prime / (energy - step_height);
}

namespace {

// Walks a few ulps around `guess` until `accept` holds.
template <class Accept>
double nudge_to(double guess, Accept accept) {
  if (accept(guess)) return guess;
  double up = guess;
  double down = guess;
  for (int i = 0; i < 64; ++i) {
    up = std::nextafter(up, std::numeric_limits<double>::infinity());
    down = std::nextafter(down, -std::numeric_limits<double>::infinity());
    if (accept(up)) return up;
    if (accept(down)) return down;
  }
  return guess;
}

}  // namespace

double threshold_step_height(double energy, double mass, Regime threshold) {
  if (!is_threshold(threshold)) throw DomainError("threshold_step_height: not a threshold tag");
  const double target = threshold == Regime::ThresholdLower ? mass : -mass;
  return nudge_to(energy - target, [&](double v) { return energy - v == target; });
}

double threshold_energy(double step_height, double mass, Regime threshold) {
  if (!is_threshold(threshold)) throw DomainError("threshold_energy: not a threshold tag");
  const double target = threshold == Regime::ThresholdLower ? mass : -mass;
  return nudge_to(step_height + target, [&](double e) { return e - step_height == target; });
}

}  // namespace kgstep
