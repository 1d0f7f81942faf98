#pragma once

// Closed-form plane-wave solution of the Klein-Gordon step problem.
//
// Incident a e^{i(px - Et)} and reflected b e^{-i(px + Et)} for x < 0,
// transmitted b' e^{i(p'x - Et)} for x > 0. Matching psi and psi' at the step
// gives b/a = (p - p')/(p + p') and b'/a = 2p/(p + p'). In the evanescent
// window p' = iq with q > 0 (the decaying root).
//
// All densities and currents are per unit |a|^2.

#include <cmath>
#include <limits>

#include "kgstep/core_model.hpp"

namespace kgstep {

/// Sign rule for the oscillatory transmitted momentum. Flipped exists only as
/// a mutation hook for the verification suite.
enum class BranchRule { Physical, Flipped };

struct ScatteringSolution {
  ParticleParams params;
  double step_height = 0.0;
  Regime regime = Regime::Ordinary;
  Complex b_over_a;
  Complex bprime_over_a;
  /// Signed real p' in oscillatory regimes and 0 at thresholds; NaN when evanescent.
  double p_prime = std::numeric_limits<double>::quiet_NaN();
  /// Decay rate q > 0 of the evanescent wave; NaN otherwise.
  double decay_rate = std::numeric_limits<double>::quiet_NaN();
  double reflectivity = 0.0;

  /// V0 < 0: a potential well rather than a barrier; reported, not rejected.
  bool attractive() const { return step_height < 0.0; }
  double local_energy() const { return params.energy - step_height; }
};

struct WaveCurrents {
  double rho_i = 0.0, rho_r = 0.0, rho_t = 0.0;
  double j_i = 0.0, j_r = 0.0, j_t = 0.0;
};

/// A negative-local-energy transmitted wave read as an antiparticle:
/// psi_c = exp[-i(p_c x - E_c t)] with E_c, p_c > 0.
struct AntiparticleView {
  double energy = 0.0;
  double momentum = 0.0;
  int direction = 0;
  /// Exponent sign of the relabeled plane wave (always -1).
  int phase_sign = -1;

  Complex wave(double x, double t) const;
  /// Eigenvalue of E_c = -i d/dt and p_c = +i d/dx on wave(), evaluated by
  /// central differences of step h.
  double measured_energy(double x, double t, double h = 1e-5) const;
  double measured_momentum(double x, double t, double h = 1e-5) const;
};

double select_pprime_branch(double energy, double step_height, double mass,
                            BranchRule rule = BranchRule::Physical);

/// At the Klein pole V0 = 2E (p + p' = 0) b/a, b'/a and R are +infinity.
ScatteringSolution solve_step(const ParticleParams& params, double step_height,
                              BranchRule rule = BranchRule::Physical);

double reflectivity(const ScatteringSolution& solution);

WaveCurrents wave_currents(const ScatteringSolution& solution);

/// |j_i + j_r - j_t|.
double check_current_balance(const ScatteringSolution& solution);

AntiparticleView antiparticle_relabel(const ScatteringSolution& solution);

}  // namespace kgstep
