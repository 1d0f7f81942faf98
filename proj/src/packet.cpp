#include <fftw3.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>

#include "kgstep/errors.hpp"
#include "kgstep/wavepacket_sim.hpp"

namespace kgstep {

namespace {

struct PlanDeleter {
  void operator()(fftw_plan_s* plan) const { fftw_destroy_plan(plan); }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

fftw_complex* as_fftw(std::vector<Complex>& v) { return reinterpret_cast<fftw_complex*>(v.data()); }

// Applies -i E(k) to every Fourier mode of f.
std::vector<Complex> apply_frequency(const std::vector<Complex>& f, double dx,
                                     const Dispersion& energy_of_k) {
  const std::size_t n = f.size();
  std::vector<Complex> spectrum(n), out(n);
  std::vector<Complex> in = f;
  Plan forward(fftw_plan_dft_1d(static_cast<int>(n), as_fftw(in), as_fftw(spectrum), FFTW_FORWARD,
                                FFTW_ESTIMATE));
  Plan backward(fftw_plan_dft_1d(static_cast<int>(n), as_fftw(spectrum), as_fftw(out),
                                 FFTW_BACKWARD, FFTW_ESTIMATE));
  fftw_execute(forward.get());
  const double dk = 2.0 * std::numbers::pi / (static_cast<double>(n) * dx);
  for (std::size_t j = 0; j < n; ++j) {
    const auto signed_j = j <= n / 2 ? static_cast<double>(j) : static_cast<double>(j) - static_cast<double>(n);
    const double omega = energy_of_k(signed_j * dk);
    spectrum[j] *= Complex{0.0, -omega / static_cast<double>(n)};
  }
  fftw_execute(backward.get());
  return out;
}

}  // namespace

Dispersion continuum_dispersion(double mass) {
  return [mass](double k) { return std::sqrt(mass * mass + k * k); };
}

Dispersion discrete_dispersion(double mass, double dx, StencilOrder order) {
  return [=](double k) { return std::sqrt(mass * mass + laplacian_symbol(k, dx, order)); };
}

FVState init_gaussian_packet(const WavePacketSpec& spec, const Dispersion& energy_of_k,
                             const Grid1D& grid, double mass, const StepPotential& potential) {
  grid.validate();
  if (!(spec.sigma_x > 0.0)) throw ConfigError("packet: sigma_x must be positive");
  if (!(mass > 0.0)) throw ConfigError("packet: mass must be positive");

  KGState kg;
  kg.grid = grid;
  kg.mass = mass;
  kg.potential = sample_potential(grid, potential);
  kg.psi.resize(grid.n);
  const double inv_4s2 = 1.0 / (4.0 * spec.sigma_x * spec.sigma_x);
  for (std::size_t k = 0; k < grid.n; ++k) {
    const double x = grid.x(k);
    const double u = x - spec.x0;
    kg.psi[k] = spec.amplitude * std::exp(-u * u * inv_4s2) *
                Complex{std::cos(spec.p0 * x), std::sin(spec.p0 * x)};
  }
  kg.psi_dot = apply_frequency(kg.psi, grid.dx, energy_of_k);
  FVState fv = fv_split(kg);

  const std::vector<double> rho = charge_density(fv);
  double total = 0.0;
  double beyond = 0.0;
  for (std::size_t k = 0; k < grid.n; ++k) {
    total += rho[k];
    if (grid.x(k) >= potential.x_step - 1e-6 * grid.dx) beyond += std::abs(rho[k]);
  }
  if (!(total > 0.0)) throw ConfigError("packet: initial charge is not positive");
  if (beyond > kMaxInitialOverlap * total) {
    std::ostringstream msg;
    msg << "packet: " << beyond / total << " of the initial charge overlaps the step region (limit "
        << kMaxInitialOverlap << "); move x0 further left or narrow sigma_x";
    throw ConfigError(msg.str());
  }
  return fv;
}

}  // namespace kgstep
