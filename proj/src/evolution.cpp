#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "fv_kernel.hpp"
#include "kgstep/errors.hpp"
#include "kgstep/wavepacket_sim.hpp"

namespace kgstep {

// Configuration ---------------------------------------------------------------

std::size_t SimConfig::steps() const {
  return static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
}

double SimConfig::effective_measurement_time() const {
  return std::isnan(measurement_time) ? t_end : measurement_time;
}

double stability_bound(const Grid1D& grid, double mass, double max_abs_potential,
                       StencilOrder order, Integrator integrator) {
  const double omega_max =
      max_abs_potential + std::sqrt(mass * mass + max_laplacian_symbol(grid.dx, order));
  const double radius = integrator == Integrator::RK4 ? 2.0 * std::sqrt(2.0) : 2.0;
  return radius / omega_max;
}

void SimConfig::validate(double mass, double max_abs_potential) const {
  grid.validate();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("sim: dt must be positive");
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ConfigError("sim: t_end must be positive");
  if (!(cfl_guard > 0.0 && cfl_guard < 1.0)) throw ConfigError("sim: cfl_guard must lie in (0, 1)");
  if (record_every == 0) throw ConfigError("sim: record_every must be at least 1");
  if (!(probe_offset > 0.0)) throw ConfigError("sim: probe_offset must be positive");
  if (integrator == Integrator::Leapfrog && grid.boundary != Boundary::Periodic) {
    throw ConfigError("sim: the leapfrog integrator supports periodic grids only");
  }
  const double mt = effective_measurement_time();
  if (!(mt > 0.0 && mt <= t_end * (1.0 + 1e-12))) {
    throw ConfigError("sim: measurement_time must lie in (0, t_end]");
  }
  if (enforce_stability) {
    const double limit = cfl_guard * stability_bound(grid, mass, max_abs_potential, order, integrator);
    if (dt > limit) {
      std::ostringstream msg;
      msg.precision(6);
      msg << "sim: dt=" << dt << " exceeds the stability guard " << limit << " (cfl_guard "
          << cfl_guard << " x bound for dx=" << grid.dx << ", m=" << mass << ", max|V|="
          << max_abs_potential << ")";
      throw ConfigError(msg.str());
    }
  }
}

// RK4 ----------------------------------------------------------------------------

RK4Stepper::RK4Stepper(const FVState& shape, StencilOrder order)
    : op_(shape.grid, shape.mass, shape.potential, order),
      a_phi_(shape.grid.n),
      a_chi_(shape.grid.n),
      b_phi_(shape.grid.n),
      b_chi_(shape.grid.n),
      acc_phi_(shape.grid.n),
      acc_chi_(shape.grid.n) {}

void RK4Stepper::step(FVState& s, double dt) {
  const detail::FVKernel kernel{op_.grid(), op_.mass(), op_.potential(), op_.damping(), op_.order()};
  const double half = 0.5 * dt;
  const double sixth = dt / 6.0;
  const double third = dt / 3.0;
  // Stages ping-pong between the a_ and b_ buffers; acc_ gathers the weighted sum.
  kernel.run(s.phi, s.chi, [&](std::size_t k, Complex dp, Complex dc) {
    a_phi_[k] = s.phi[k] + half * dp;
    a_chi_[k] = s.chi[k] + half * dc;
    acc_phi_[k] = s.phi[k] + sixth * dp;
    acc_chi_[k] = s.chi[k] + sixth * dc;
  });
  kernel.run(a_phi_, a_chi_, [&](std::size_t k, Complex dp, Complex dc) {
    b_phi_[k] = s.phi[k] + half * dp;
    b_chi_[k] = s.chi[k] + half * dc;
    acc_phi_[k] += third * dp;
    acc_chi_[k] += third * dc;
  });
  kernel.run(b_phi_, b_chi_, [&](std::size_t k, Complex dp, Complex dc) {
    a_phi_[k] = s.phi[k] + dt * dp;
    a_chi_[k] = s.chi[k] + dt * dc;
    acc_phi_[k] += third * dp;
    acc_chi_[k] += third * dc;
  });
  kernel.run(a_phi_, a_chi_, [&](std::size_t k, Complex dp, Complex dc) {
    s.phi[k] = acc_phi_[k] + sixth * dp;
    s.chi[k] = acc_chi_[k] + sixth * dc;
  });
  s.t += dt;
}

FVState rk4_step(const FVState& state, double dt, StencilOrder order) {
  state.validate();
  FVState out = state;
  RK4Stepper(state, order).step(out, dt);
  return out;
}

// Observables ----------------------------------------------------------------------

namespace {

std::size_t nearest_index(const Grid1D& grid, double x) {
  const double r = std::round((x - grid.x_min) / grid.dx);
  return static_cast<std::size_t>(std::clamp(r, 0.0, static_cast<double>(grid.n - 1)));
}

double current_at(const FVState& s, std::size_t k, StencilOrder order) {
  const std::size_t n = s.grid.n;
  const bool periodic = s.grid.boundary == Boundary::Periodic;
  auto psi = [&](std::ptrdiff_t i) -> Complex {
    const auto sn = static_cast<std::ptrdiff_t>(n);
    if (i < 0 || i >= sn) {
      if (!periodic) return Complex{};
      i = (i % sn + sn) % sn;
    }
    const auto u = static_cast<std::size_t>(i);
    return s.phi[u] + s.chi[u];
  };
  const auto i = static_cast<std::ptrdiff_t>(k);
  Complex d;
  if (order == StencilOrder::Fourth) {
    d = (8.0 * (psi(i + 1) - psi(i - 1)) - (psi(i + 2) - psi(i - 2))) / (12.0 * s.grid.dx);
  } else {
    d = (psi(i + 1) - psi(i - 1)) / (2.0 * s.grid.dx);
  }
  return (std::conj(psi(i)) * d).imag() / s.mass;
}

// (D j)_k and max|rho| at the centre of a residual stencil.
struct ResidualCentre {
  std::vector<double> divergence;
  std::vector<bool> mask;
  double rho_scale = 0.0;
};

ResidualCentre residual_centre(const FVState& centre, StencilOrder order) {
  ResidualCentre rc;
  const std::vector<double> j = current_density(centre, order);
  rc.divergence.resize(j.size());
  apply_first_derivative(std::span<const double>(j), centre.grid, order,
                         std::span<double>(rc.divergence));
  rc.mask = residual_mask(centre);
  for (std::size_t k = 0; k < centre.grid.n; ++k) {
    const double rho = std::norm(centre.phi[k]) - std::norm(centre.chi[k]);
    rc.rho_scale = std::max(rc.rho_scale, std::abs(rho));
  }
  return rc;
}

double finish_residual(const ResidualCentre& rc, std::span<const double> before,
                       std::span<const double> after, double dt) {
  if (rc.rho_scale == 0.0) return 0.0;
  double worst = 0.0;
  for (std::size_t k = 0; k < rc.divergence.size(); ++k) {
    if (!rc.mask[k]) continue;
    const double r = (after[k] - before[k]) / (2.0 * dt) + rc.divergence[k];
    worst = std::max(worst, std::abs(r));
  }
  return worst / rc.rho_scale;
}

}  // namespace

ObservableRecord observe(const FVState& s, const SimConfig& config) {
  ObservableRecord rec;
  rec.t = s.t;
  double moment = 0.0;
  for (std::size_t k = 0; k < s.grid.n; ++k) {
    const double rho = std::norm(s.phi[k]) - std::norm(s.chi[k]);
    const double x = s.grid.x(k);
    if (x < config.x_step - 1e-6 * s.grid.dx) {
      rec.q_left += rho;
    } else {
      rec.q_right += rho;
      moment += x * rho;
    }
  }
  rec.q_left *= s.grid.dx;
  rec.q_right *= s.grid.dx;
  rec.q_total = rec.q_left + rec.q_right;
  if (rec.q_right != 0.0) rec.centroid_right = moment * s.grid.dx / rec.q_right;
  rec.j_probe_left = current_at(s, nearest_index(s.grid, config.x_step - config.probe_offset), config.order);
  rec.j_probe_right = current_at(s, nearest_index(s.grid, config.x_step + config.probe_offset), config.order);
  return rec;
}

std::vector<bool> residual_mask(const FVState& s) {
  const std::size_t n = s.grid.n;
  std::vector<bool> mask(n, true);
  double vmax = 0.0;
  for (double v : s.potential) vmax = std::max(vmax, std::abs(v));
  const bool periodic = s.grid.boundary == Boundary::Periodic;
  if (vmax > 0.0) {
    // A jump of a sizeable fraction of max|V| across one cell marks a sharp step.
    const std::size_t faces = periodic ? n : n - 1;
    for (std::size_t f = 0; f < faces; ++f) {
      const std::size_t next = (f + 1) % n;
      if (std::abs(s.potential[next] - s.potential[f]) < 0.25 * vmax) continue;
      const auto lo = static_cast<std::ptrdiff_t>(f) - static_cast<std::ptrdiff_t>(kStepExclusionRadius);
      const auto hi = static_cast<std::ptrdiff_t>(f + 1 + kStepExclusionRadius);
      for (std::ptrdiff_t i = lo; i <= hi; ++i) {
        const auto sn = static_cast<std::ptrdiff_t>(n);
        std::ptrdiff_t j = i;
        if (j < 0 || j >= sn) {
          if (!periodic) continue;
          j = (j % sn + sn) % sn;
        }
        mask[static_cast<std::size_t>(j)] = false;
      }
    }
  }
  if (!periodic) {
    // Ghost-zero edges and absorbing layers are excluded with a stencil margin.
    const std::size_t margin = s.grid.absorbing_points + 4;
    for (std::size_t k = 0; k < n; ++k) {
      if (k < margin || k + margin >= n) mask[k] = false;
    }
  }
  return mask;
}

double continuity_residual(std::span<const double> rho_before, const FVState& centre,
                           std::span<const double> rho_after, double dt, StencilOrder order) {
  if (rho_before.size() != centre.grid.n || rho_after.size() != centre.grid.n) {
    throw ConfigError("continuity_residual: density sizes do not match the grid");
  }
  return finish_residual(residual_centre(centre, order), rho_before, rho_after, dt);
}

std::vector<double> continuity_residual(std::span<const FVState> snapshots, StencilOrder order) {
  if (snapshots.size() < 3) throw ConfigError("continuity_residual: need at least 3 snapshots");
  const double dt = snapshots[1].t - snapshots[0].t;
  if (!(dt > 0.0)) throw ConfigError("continuity_residual: snapshots must advance in time");
  std::vector<std::vector<double>> rho;
  rho.reserve(snapshots.size());
  for (const FVState& s : snapshots) rho.push_back(charge_density(s));
  std::vector<double> out;
  for (std::size_t i = 1; i + 1 < snapshots.size(); ++i) {
    const double spacing = snapshots[i + 1].t - snapshots[i].t;
    if (std::abs(spacing - dt) > 1e-9 * dt) {
      throw ConfigError("continuity_residual: snapshots are not equally spaced");
    }
    out.push_back(continuity_residual(rho[i - 1], snapshots[i], rho[i + 1], dt, order));
  }
  return out;
}

// Evolution -----------------------------------------------------------------------

namespace {

class Driver {
 public:
  virtual ~Driver() = default;
  virtual void advance(double dt) = 0;
  virtual const FVState& fv() = 0;
  virtual double norm() const = 0;
  virtual void set_time(double t) = 0;
};

class RK4Driver final : public Driver {
 public:
  RK4Driver(const FVState& s, StencilOrder order) : state_(s), stepper_(s, order) {}
  void advance(double dt) override { stepper_.step(state_, dt); }
  const FVState& fv() override { return state_; }
  double norm() const override {
    double sum = 0.0;
    for (std::size_t k = 0; k < state_.grid.n; ++k) sum += std::norm(state_.phi[k]) + std::norm(state_.chi[k]);
    return sum;
  }
  void set_time(double t) override { state_.t = t; }

 private:
  FVState state_;
  RK4Stepper stepper_;
};

class LeapfrogDriver final : public Driver {
 public:
  LeapfrogDriver(const FVState& s, StencilOrder order)
      : kg_(fv_reconstruct(s)), stepper_(kg_, order) {}
  void advance(double dt) override {
    stepper_.step(kg_, dt);
    cached_.reset();
  }
  const FVState& fv() override {
    if (!cached_) cached_ = fv_split(kg_);
    return *cached_;
  }
  double norm() const override {
    const double inv_m2 = 1.0 / (kg_.mass * kg_.mass);
    double sum = 0.0;
    for (std::size_t k = 0; k < kg_.grid.n; ++k) sum += std::norm(kg_.psi[k]) + inv_m2 * std::norm(kg_.psi_dot[k]);
    return sum;
  }
  void set_time(double t) override {
    kg_.t = t;
    if (cached_) cached_->t = t;
  }

 private:
  KGState kg_;
  LeapfrogStepper stepper_;
  std::optional<FVState> cached_;
};

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

EvolutionResult evolve(const FVState& initial, const SimConfig& config, const SnapshotSink& sink) {
  initial.validate();
  if (initial.grid.n != config.grid.n || initial.grid.dx != config.grid.dx) {
    throw ConfigError("evolve: state grid differs from the configured grid");
  }
  config.validate(initial.mass, max_abs(initial.potential));

  std::unique_ptr<Driver> driver;
  if (config.integrator == Integrator::RK4) {
    driver = std::make_unique<RK4Driver>(initial, config.order);
  } else {
    driver = std::make_unique<LeapfrogDriver>(initial, config.order);
  }

  const std::size_t total = config.steps();
  const double t0 = initial.t;
  auto is_record = [&](std::size_t s) { return s % config.record_every == 0 || s == total; };

  EvolutionResult result;
  struct Pending {
    std::size_t record;
    ResidualCentre centre;
    std::vector<double> rho_before;
  };
  std::vector<double> rho_previous;  // rho one step before an upcoming record
  std::optional<Pending> pending;
  double previous_norm = driver->norm();

  for (std::size_t s = 0;; ++s) {
    const FVState& current = driver->fv();
    if (pending) {
      const std::vector<double> rho_after = charge_density(current);
      result.records[pending->record].continuity_residual_max =
          finish_residual(pending->centre, pending->rho_before, rho_after, config.dt);
      pending.reset();
    }
    if (is_record(s)) {
      result.records.push_back(observe(current, config));
      if (s >= 1 && s < total && !rho_previous.empty()) {
        pending = Pending{result.records.size() - 1, residual_centre(current, config.order),
                          std::move(rho_previous)};
      }
    }
    rho_previous.clear();
    if (config.snapshot_every > 0 && sink && (s % config.snapshot_every == 0 || s == total)) {
      sink(current, s);
    }
    if (s == total) break;
    if (is_record(s + 1) && s + 1 < total) rho_previous = charge_density(current);

    driver->advance(config.dt);
    driver->set_time(t0 + static_cast<double>(s + 1) * config.dt);

    const double norm = driver->norm();
    if (!std::isfinite(norm) || norm > 10.0 * previous_norm) {
      std::ostringstream msg;
      msg << "evolve: instability at step " << s + 1 << " (t=" << t0 + static_cast<double>(s + 1) * config.dt
          << "): field norm grew by " << norm / previous_norm << "x in one step; dt=" << config.dt
          << ", stability bound="
          << stability_bound(config.grid, initial.mass, max_abs(initial.potential), config.order,
                             config.integrator);
      throw InstabilityError(msg.str());
    }
    previous_norm = norm;
  }
  result.final_state = driver->fv();
  result.steps = total;
  return result;
}

}  // namespace kgstep
