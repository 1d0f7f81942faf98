#include <cmath>

#include "kgstep/errors.hpp"
#include "kgstep/wavepacket_sim.hpp"

namespace kgstep {

LeapfrogStepper::LeapfrogStepper(const KGState& shape, StencilOrder order)
    : grid_(shape.grid), order_(order), force_(shape.grid.n), half_velocity_(shape.grid.n) {}

// d2 psi - (m^2 - V^2) psi
void LeapfrogStepper::restoring_force(const KGState& s, std::span<Complex> out) {
  apply_laplacian(s.psi, grid_, order_, out);
  const double m2 = s.mass * s.mass;
  for (std::size_t k = 0; k < grid_.n; ++k) {
    const double v = s.potential[k];
    out[k] -= (m2 - v * v) * s.psi[k];
  }
}

void LeapfrogStepper::step(KGState& s, double dt) {
  const std::size_t n = grid_.n;
  if (!force_valid_) restoring_force(s, force_);
  const double half = 0.5 * dt;
  for (std::size_t k = 0; k < n; ++k) {
    const Complex drag = Complex{0.0, 2.0 * s.potential[k]} * s.psi_dot[k];
    half_velocity_[k] = s.psi_dot[k] + half * (force_[k] - drag);
    s.psi[k] += dt * half_velocity_[k];
  }
  restoring_force(s, force_);
  for (std::size_t k = 0; k < n; ++k) {
    s.psi_dot[k] = (half_velocity_[k] + half * force_[k]) / Complex{1.0, s.potential[k] * dt};
  }
  s.t += dt;
  force_valid_ = true;
}

KGState kg_oracle_step(const KGState& kg, const SimConfig& config) {
  kg.validate();
  double vmax = 0.0;
  for (double v : kg.potential) vmax = std::max(vmax, std::abs(v));
  SimConfig leapfrog = config;
  leapfrog.integrator = Integrator::Leapfrog;
  leapfrog.validate(kg.mass, vmax);
  KGState out = kg;
  LeapfrogStepper(kg, config.order).step(out, config.dt);
  return out;
}

KGState evolve_kg(const KGState& initial, const SimConfig& config) {
  initial.validate();
  double vmax = 0.0;
  for (double v : initial.potential) vmax = std::max(vmax, std::abs(v));
  SimConfig leapfrog = config;
  leapfrog.integrator = Integrator::Leapfrog;
  leapfrog.validate(initial.mass, vmax);

  KGState state = initial;
  LeapfrogStepper stepper(state, config.order);
  const std::size_t total = config.steps();
  const double t0 = initial.t;
  for (std::size_t s = 0; s < total; ++s) {
    stepper.step(state, config.dt);
    state.t = t0 + static_cast<double>(s + 1) * config.dt;
  }
  return state;
}

}  // namespace kgstep
