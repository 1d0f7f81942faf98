#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <string>

#include "kgstep/errors.hpp"
#include "kgstep/wavepacket_sim.hpp"

namespace kgstep {

PacketMeasurement measure_R(std::span<const ObservableRecord> records, double q_incident,
                            double measurement_time) {
  if (records.empty()) throw MeasurementError("measure_R: no records");
  if (!(q_incident > 0.0)) throw MeasurementError("measure_R: incident charge must be positive");
  const double mt = std::isnan(measurement_time) ? records.back().t : measurement_time;

  const ObservableRecord* at = nullptr;
  double peak_left = 0.0, peak_right = 0.0;
  for (const ObservableRecord& r : records) {
    peak_left = std::max(peak_left, std::abs(r.j_probe_left));
    peak_right = std::max(peak_right, std::abs(r.j_probe_right));
    if (r.t <= mt * (1.0 + 1e-12) + 1e-12) at = &r;
  }
  if (at == nullptr) throw MeasurementError("measure_R: no record at or before the measurement time");

  // Both probes are judged against the larger peak (the incident flux): a
  // nearly empty side would otherwise be held to its own vanishing scale.
  const double peak = std::max(peak_left, peak_right);
  const double left = peak > 0.0 ? std::abs(at->j_probe_left) / peak : 0.0;
  const double right = peak > 0.0 ? std::abs(at->j_probe_right) / peak : 0.0;
  if (left > kQuiescenceTolerance || right > kQuiescenceTolerance) {
    std::ostringstream msg;
    msg << "measure_R: probes not quiescent at t=" << at->t << " (|J_left|/peak=" << left
        << ", |J_right|/peak=" << right << ", limit " << kQuiescenceTolerance
        << "); extend t_end so the scattered packets clear the probes";
    throw MeasurementError(msg.str());
  }

  PacketMeasurement m;
  m.q_incident = q_incident;
  m.q_left = at->q_left;
  m.q_right = at->q_right;
  m.reflectivity = at->q_left / q_incident;
  m.transmission = std::abs(at->q_right) / q_incident;
  m.antiparticle_transmission = at->q_right < 0.0;
  m.balance_defect = m.reflectivity + at->q_right / q_incident - 1.0;
  return m;
}

void ScatteringSetup::validate() const {
  if (!(mass > 0.0)) throw ConfigError("setup: mass must be positive");
  if (!(energy > mass)) {
    throw ConfigError("setup: energy must exceed the rest mass (E > m) for an incident wave");
  }
  if (!(packet.sigma_x > 0.0)) throw ConfigError("setup: packet width must be positive");
  if (!(packet.p0 > 0.0)) throw ConfigError("setup: packet momentum must be positive");
  if (!packet.nearly_monochromatic()) {
    throw ConfigError("setup: packet must satisfy p0 * sigma_x >= 4 (got " +
                      std::to_string(packet.p0 * packet.sigma_x) + ")");
  }
  if (!(packet.x0 < step.x_step)) throw ConfigError("setup: packet must start left of the step");
  if (sim.x_step != step.x_step) throw ConfigError("setup: sim.x_step differs from the step position");
  if (step.smoothing_width < 0.0) throw ConfigError("setup: smoothing width must be >= 0");
}

ScatteringSetup make_setup(const SetupRecipe& recipe) {
  const double mass = recipe.mass;
  if (!(mass > 0.0)) throw ConfigError("setup: mass must be positive");
  if (!(recipe.energy > mass)) {
    throw ConfigError("setup: energy must exceed the rest mass (E > m) for an incident wave");
  }
  ScatteringSetup setup;
  setup.mass = mass;
  setup.energy = recipe.energy;
  setup.step = StepPotential{recipe.step_height, recipe.smoothing_width, recipe.x_step};

  const double p0 = momentum_from_energy(recipe.energy, mass);
  const double sigma = std::isnan(recipe.sigma_x) ? 40.0 / mass : recipe.sigma_x;
  const double dx = std::isnan(recipe.dx) ? 0.05 / mass : recipe.dx;
  if (!(sigma > 0.0)) throw ConfigError("setup: packet width must be positive");
  if (!(dx > 0.0)) throw ConfigError("setup: grid spacing must be positive");
  const double separation = 6.0 * sigma;
  const double margin = 6.5 * sigma;
  const double incident_speed = p0 / recipe.energy;

  setup.packet = WavePacketSpec{recipe.x_step - separation, sigma, p0, Complex{1.0, 0.0}};

  const double t_hit = separation / incident_speed;
  const double t_end = 2.0 * t_hit;

  double right_extent = std::max(50.0 / mass, margin);
  const Regime regime = classify_regime(recipe.energy, recipe.step_height, mass);
  if (is_oscillatory(regime)) {
    const double p_prime = select_pprime_branch(recipe.energy, recipe.step_height, mass);
    const double speed = std::abs(group_velocity(p_prime, recipe.energy, recipe.step_height, mass));
    right_extent = std::max(right_extent, speed * (t_end - t_hit) + margin * speed / incident_speed);
  }
  const double left_cells = std::ceil((separation + margin) / dx);
  const double right_cells = std::ceil(right_extent / dx);

  SimConfig& sim = setup.sim;
  // The step sits on a cell face, half a cell right of point left_cells - 1.
  sim.grid.x_min = recipe.x_step - (left_cells - 0.5) * dx;
  sim.grid.dx = dx;
  sim.grid.n = static_cast<std::size_t>(left_cells + right_cells);
  sim.grid.boundary = Boundary::Periodic;
  sim.order = recipe.order;
  sim.dt = 0.4 * dx;
  // A whole number of steps divisible by 4, so dt / 2 and 2 dt land on t_end too.
  const double steps = 4.0 * std::ceil(t_end / sim.dt / 4.0);
  sim.t_end = steps * sim.dt;
  sim.record_every = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(2.0 / mass / sim.dt)));
  sim.x_step = recipe.x_step;
  sim.probe_offset = std::min(10.0 / mass, 0.25 * sigma);
  return setup;
}

ScatteringSetup default_setup(double mass, double energy, double step_height) {
  SetupRecipe recipe;
  recipe.mass = mass;
  recipe.energy = energy;
  recipe.step_height = step_height;
  return make_setup(recipe);
}

ScatteringRun run_scattering(const ScatteringSetup& setup, const SnapshotSink& sink) {
  setup.validate();
  const auto start = std::chrono::steady_clock::now();
  ScatteringRun run;
  run.setup = setup;
  run.analytic = solve_step(ParticleParams::from_energy(setup.energy, setup.mass), setup.step.height);
  run.initial_state = init_gaussian_packet(
      setup.packet, discrete_dispersion(setup.mass, setup.sim.grid.dx, setup.sim.order),
      setup.sim.grid, setup.mass, setup.step);
  EvolutionResult evolved = evolve(run.initial_state, setup.sim, sink);
  run.records = std::move(evolved.records);
  run.final_state = std::move(evolved.final_state);
  run.measurement = measure_R(run.records, run.records.front().q_left,
                              setup.sim.effective_measurement_time());
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

}  // namespace kgstep
