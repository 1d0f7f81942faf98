#pragma once

// Kinematics of a Klein-Gordon particle incident on a potential step.
// Natural units throughout: hbar = c = 1, so mass, energy and momentum share
// one unit and lengths/times carry its inverse.

#include <complex>
#include <string_view>

namespace kgstep {

using Complex = std::complex<double>;

/// On-shell incident particle. Construct through from_energy() so that
/// momentum is always the positive root of E^2 = p^2 + m^2.
struct ParticleParams {
  double mass = 1.0;
  double energy = 1.0;
  double momentum = 0.0;

  static ParticleParams from_energy(double energy, double mass);
};

/// V(x) = 0 left of x_step, V0 right of it. smoothing_width > 0 replaces the
/// jump by V0 * (1 + tanh((x - x_step) / w)) / 2.
struct StepPotential {
  double height = 0.0;
  double smoothing_width = 0.0;
  double x_step = 0.0;

  double operator()(double x) const;
  /// Grid sample: a sharp step evaluated exactly at x_step returns V0 / 2.
  double sample(double x) const;
  bool sharp() const { return smoothing_width == 0.0; }
};

enum class Regime { Ordinary, Evanescent, Klein, ThresholdLower, ThresholdUpper };

std::string_view to_string(Regime regime);
bool is_threshold(Regime regime);
bool is_oscillatory(Regime regime);

double momentum_from_energy(double energy, double mass);

/// (E - V0)^2 - m^2, evaluated as a product of exact-sign factors so that its
/// sign always agrees with classify_regime().
double transmitted_momentum_squared(double energy, double step_height, double mass);

Regime classify_regime(double energy, double step_height, double mass);

/// dE/dp' on the local mass shell (E - V0)^2 = p'^2 + m^2, i.e. p' / (E - V0).
double group_velocity(double p_prime, double energy, double step_height, double mass);

/// Step height whose regime boundary E - V0 = -m (upper) or +m (lower) holds
/// exactly in floating point. Used to place threshold samples in sweeps. When
/// no double satisfies it (E -/+ m not representable), the rounded E -/+ m is
/// returned and classifies as a neighbouring regime.
double threshold_step_height(double energy, double mass, Regime threshold);
/// Energy with E - V0 = +m (lower) or -m (upper) exactly.
double threshold_energy(double step_height, double mass, Regime threshold);

}  // namespace kgstep
