#include "kgstep/analytic_scattering.hpp"

#include <string>

#include "kgstep/errors.hpp"

namespace kgstep {

double select_pprime_branch(double energy, double step_height, double mass, BranchRule rule) {
  const Regime regime = classify_regime(energy, step_height, mass);
  if (regime == Regime::Evanescent) {
    throw DomainError("select_pprime_branch: evanescent input (E=" + std::to_string(energy) +
                      ", V0=" + std::to_string(step_height) + ") has no real p'");
  }
  if (is_threshold(regime)) return 0.0;
  const double magnitude = std::sqrt(transmitted_momentum_squared(energy, step_height, mass));
  // Negative local energy forces p' < 0 so that j_t carries the sign of rho_t.
  double sign = energy - step_height > 0.0 ? 1.0 : -1.0;
  if (rule == BranchRule::Flipped) sign = -sign;
  return sign * magnitude;
}

ScatteringSolution solve_step(const ParticleParams& params, double step_height, BranchRule rule) {
  if (!(params.energy > params.mass)) {
    throw DomainError("solve_step: requires E > m (propagating incident wave), got E=" +
                      std::to_string(params.energy) + ", m=" + std::to_string(params.mass));
  }
  ScatteringSolution s;
  s.params = params;
  s.step_height = step_height;
  s.regime = classify_regime(params.energy, step_height, params.mass);

  const Complex p{params.momentum, 0.0};
  Complex p_prime;
  if (s.regime == Regime::Evanescent) {
    s.decay_rate = std::sqrt(-transmitted_momentum_squared(params.energy, step_height, params.mass));
    p_prime = Complex{0.0, s.decay_rate};
  } else {
    s.p_prime = select_pprime_branch(params.energy, step_height, params.mass, rule);
    p_prime = Complex{s.p_prime, 0.0};
  }
  if (p + p_prime == Complex{}) {
    // Klein pole V0 = 2E (p' = -p): both amplitudes diverge.
    const double inf = std::numeric_limits<double>::infinity();
    s.b_over_a = Complex{inf, 0.0};
    s.bprime_over_a = Complex{inf, 0.0};
  } else {
    s.b_over_a = (p - p_prime) / (p + p_prime);
    s.bprime_over_a = 2.0 * p / (p + p_prime);
  }
  s.reflectivity = reflectivity(s);
  return s;
}

double reflectivity(const ScatteringSolution& solution) {
  // |p - iq| = |p + iq| and b/a = 1 at p' = 0: total reflection is exact.
  if (solution.regime == Regime::Evanescent || is_threshold(solution.regime)) return 1.0;
  return std::norm(solution.b_over_a);
}

WaveCurrents wave_currents(const ScatteringSolution& s) {
  const double m = s.params.mass;
  const double transmitted = std::norm(s.bprime_over_a);
  WaveCurrents w;
  w.rho_i = s.params.energy / m;
  w.rho_r = w.rho_i * s.reflectivity;
  w.rho_t = s.local_energy() / m * transmitted;
  w.j_i = s.params.momentum / m;
  w.j_r = -w.j_i * s.reflectivity;
  // A real decaying profile times a global phase carries no current.
  w.j_t = s.regime == Regime::Evanescent ? 0.0 : s.p_prime / m * transmitted;
  return w;
}

double check_current_balance(const ScatteringSolution& solution) {
  const WaveCurrents w = wave_currents(solution);
  return std::abs(w.j_i + w.j_r - w.j_t);
}

AntiparticleView antiparticle_relabel(const ScatteringSolution& s) {
  if (s.regime != Regime::Klein) {
    throw DomainError(std::string("antiparticle_relabel: requires the Klein regime, got ") +
                      std::string(to_string(s.regime)));
  }
  AntiparticleView view;
  view.energy = std::abs(s.local_energy());
  view.momentum = std::abs(s.p_prime);
  const double v = group_velocity(s.p_prime, s.params.energy, s.step_height, s.params.mass);
  view.direction = v > 0.0 ? 1 : -1;
  return view;
}

Complex AntiparticleView::wave(double x, double t) const {
  return std::exp(Complex{0.0, static_cast<double>(phase_sign) * (momentum * x - energy * t)});
}

double AntiparticleView::measured_energy(double x, double t, double h) const {
  const Complex dpsi_dt = (wave(x, t + h) - wave(x, t - h)) / (2.0 * h);
  return (Complex{0.0, -1.0} * dpsi_dt / wave(x, t)).real();
}

double AntiparticleView::measured_momentum(double x, double t, double h) const {
  const Complex dpsi_dx = (wave(x + h, t) - wave(x - h, t)) / (2.0 * h);
  return (Complex{0.0, 1.0} * dpsi_dx / wave(x, t)).real();
}

}  // namespace kgstep
