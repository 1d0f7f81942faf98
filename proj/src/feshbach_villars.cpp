#include "kgstep/feshbach_villars.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fv_kernel.hpp"
#include "kgstep/errors.hpp"

namespace kgstep {

// Grid -------------------------------------------------------------------------

Grid1D Grid1D::spanning(double x_lo, double x_hi, double dx, Boundary boundary) {
  if (!(dx > 0.0) || !(x_hi > x_lo)) {
    throw ConfigError("Grid1D::spanning: need dx > 0 and x_hi > x_lo");
  }
  Grid1D grid;
  grid.x_min = x_lo;
  grid.dx = dx;
  grid.n = static_cast<std::size_t>(std::ceil((x_hi - x_lo) / dx - 1e-9)) + 1;
  grid.boundary = boundary;
  return grid;
}

bool Grid1D::symmetric() const { return std::abs(x_min + x_max()) <= 1e-9 * dx; }

bool Grid1D::in_absorbing_layer(std::size_t k) const {
  if (boundary != Boundary::Absorbing) return false;
  return k < absorbing_points || k + absorbing_points >= n;
}

std::vector<double> Grid1D::damping_profile() const {
  std::vector<double> gamma(n, 0.0);
  if (boundary != Boundary::Absorbing || absorbing_points == 0) return gamma;
  const double width = static_cast<double>(absorbing_points);
  for (std::size_t k = 0; k < n; ++k) {
    double depth = 0.0;
    if (k < absorbing_points) depth = width - static_cast<double>(k);
    if (k + absorbing_points >= n) depth = std::max(depth, static_cast<double>(k + absorbing_points + 1 - n));
    gamma[k] = absorbing_strength * (depth / width) * (depth / width);
  }
  return gamma;
}

std::vector<double> Grid1D::coordinates() const {
  std::vector<double> xs(n);
  for (std::size_t k = 0; k < n; ++k) xs[k] = x(k);
  return xs;
}

void Grid1D::validate() const {
  if (!(dx > 0.0) || !std::isfinite(dx)) throw ConfigError("grid: dx must be positive and finite");
  if (!std::isfinite(x_min)) throw ConfigError("grid: x_min must be finite");
  if (n < kMinPoints) {
    throw ConfigError("grid: need at least " + std::to_string(kMinPoints) + " points, got " +
                      std::to_string(n));
  }
  if (boundary == Boundary::Absorbing) {
    if (absorbing_points < kMinAbsorbingPoints) {
      throw ConfigError("grid: absorbing layer needs at least " +
                        std::to_string(kMinAbsorbingPoints) + " points, got " +
                        std::to_string(absorbing_points));
    }
    if (2 * absorbing_points >= n) throw ConfigError("grid: absorbing layers cover the whole grid");
    if (!(absorbing_strength > 0.0)) throw ConfigError("grid: absorbing_strength must be positive");
  }
}

std::vector<double> sample_potential(const Grid1D& grid, const StepPotential& potential) {
  std::vector<double> v(grid.n);
  for (std::size_t k = 0; k < grid.n; ++k) {
    const double x = grid.x(k);
    // Grid points within rounding of a sharp step take the midpoint value.
    const bool on_step = potential.sharp() && std::abs(x - potential.x_step) <= 1e-6 * grid.dx;
    v[k] = on_step ? 0.5 * potential.height : potential.sample(x);
  }
  return v;
}

namespace {

void require_same_grid(std::size_t n, std::size_t a, std::size_t b, std::size_t c, const char* what) {
  if (a != n || b != n || c != n) {
    throw ConfigError(std::string(what) + ": field sizes do not match the grid");
  }
}

}  // namespace

void FVState::validate() const {
  grid.validate();
  require_same_grid(grid.n, phi.size(), chi.size(), potential.size(), "FVState");
  if (!(mass > 0.0)) throw ConfigError("FVState: mass must be positive");
}

void KGState::validate() const {
  grid.validate();
  require_same_grid(grid.n, psi.size(), psi_dot.size(), potential.size(), "KGState");
  if (!(mass > 0.0)) throw ConfigError("KGState: mass must be positive");
}

// Stencils ---------------------------------------------------------------------

namespace {

// Symmetric (even) or antisymmetric (odd) stencil of radius <= 2:
//   out_k = scale * (c0 f_k + c1 (f_{k+1} +- f_{k-1}) + c2 (f_{k+2} +- f_{k-2})).
template <class T, bool Odd>
void apply_stencil(std::span<const T> f, const Grid1D& grid, double c0, double c1, double c2,
                   double scale, std::span<T> out) {
  const std::size_t n = grid.n;
  const bool periodic = grid.boundary == Boundary::Periodic;
  auto at = [&](std::ptrdiff_t i) -> T {
    const auto sn = static_cast<std::ptrdiff_t>(n);
    if (i >= 0 && i < sn) return f[static_cast<std::size_t>(i)];
    if (!periodic) return T{};
    return f[static_cast<std::size_t>((i % sn + sn) % sn)];
  };
  auto combine = [](const T& plus, const T& minus) {
    if constexpr (Odd) {
      return plus - minus;
    } else {
      return plus + minus;
    }
  };
  auto edge = [&](std::size_t k) {
    const auto i = static_cast<std::ptrdiff_t>(k);
    out[k] = scale * (c0 * at(i) + c1 * combine(at(i + 1), at(i - 1)) +
                      c2 * combine(at(i + 2), at(i - 2)));
  };
  const std::size_t r = 2;
  for (std::size_t k = 0; k < std::min(r, n); ++k) edge(k);
  for (std::size_t k = r; k + r < n; ++k) {
    out[k] = scale * (c0 * f[k] + c1 * combine(f[k + 1], f[k - 1]) +
                      c2 * combine(f[k + 2], f[k - 2]));
  }
  for (std::size_t k = std::max(r, n - r); k < n; ++k) edge(k);
}

template <class T>
void first_derivative_impl(std::span<const T> f, const Grid1D& grid, StencilOrder order,
                           std::span<T> out) {
  if (order == StencilOrder::Fourth) {
    apply_stencil<T, true>(f, grid, 0.0, 8.0, -1.0, 1.0 / (12.0 * grid.dx), out);
  } else {
    apply_stencil<T, true>(f, grid, 0.0, 1.0, 0.0, 1.0 / (2.0 * grid.dx), out);
  }
}

}  // namespace

void apply_laplacian(std::span<const Complex> f, const Grid1D& grid, StencilOrder order,
                     std::span<Complex> out) {
  const double inv_dx2 = 1.0 / (grid.dx * grid.dx);
  if (order == StencilOrder::Fourth) {
    apply_stencil<Complex, false>(f, grid, -30.0, 16.0, -1.0, inv_dx2 / 12.0, out);
  } else {
    apply_stencil<Complex, false>(f, grid, -2.0, 1.0, 0.0, inv_dx2, out);
  }
}

void apply_first_derivative(std::span<const Complex> f, const Grid1D& grid, StencilOrder order,
                            std::span<Complex> out) {
  first_derivative_impl<Complex>(f, grid, order, out);
}

void apply_first_derivative(std::span<const double> f, const Grid1D& grid, StencilOrder order,
                            std::span<double> out) {
  first_derivative_impl<double>(f, grid, order, out);
}

double laplacian_symbol(double k, double dx, StencilOrder order) {
  const double c = std::cos(k * dx);
  if (order == StencilOrder::Fourth) {
    return (30.0 - 32.0 * c + 2.0 * std::cos(2.0 * k * dx)) / (12.0 * dx * dx);
  }
  return (2.0 - 2.0 * c) / (dx * dx);
}

double max_laplacian_symbol(double dx, StencilOrder order) {
  return laplacian_symbol(std::numbers::pi / dx, dx, order);
}

// Operator ---------------------------------------------------------------------

FVOperator::FVOperator(const Grid1D& grid, double mass, std::vector<double> potential,
                       StencilOrder order)
    : grid_(grid), mass_(mass), potential_(std::move(potential)), order_(order) {
  grid_.validate();
  if (potential_.size() != grid_.n) throw ConfigError("FVOperator: potential size mismatch");
  damping_ = grid_.damping_profile();
  if (std::all_of(damping_.begin(), damping_.end(), [](double g) { return g == 0.0; })) {
    damping_.clear();
  }
}

void FVOperator::apply(std::span<const Complex> phi, std::span<const Complex> chi,
                       std::span<Complex> phi_dot, std::span<Complex> chi_dot) {
  detail::FVKernel{grid_, mass_, potential_, damping_, order_}.run(
      phi, chi, [&](std::size_t k, Complex dp, Complex dc) {
        phi_dot[k] = dp;
        chi_dot[k] = dc;
      });
}

// Split / reconstruct --------------------------------------------------------

FVState fv_split(const KGState& kg) {
  kg.validate();
  FVState fv;
  fv.grid = kg.grid;
  fv.mass = kg.mass;
  fv.potential = kg.potential;
  fv.t = kg.t;
  fv.phi.resize(kg.grid.n);
  fv.chi.resize(kg.grid.n);
  const double m = kg.mass;
  const Complex i_over_m{0.0, 1.0 / m};
  for (std::size_t k = 0; k < kg.grid.n; ++k) {
    const double vm = kg.potential[k] / m;
    const Complex rate = i_over_m * kg.psi_dot[k];
    fv.phi[k] = 0.5 * ((1.0 - vm) * kg.psi[k] + rate);
    fv.chi[k] = 0.5 * ((1.0 + vm) * kg.psi[k] - rate);
  }
  return fv;
}

KGState fv_reconstruct(const FVState& fv) {
  fv.validate();
  KGState kg;
  kg.grid = fv.grid;
  kg.mass = fv.mass;
  kg.potential = fv.potential;
  kg.t = fv.t;
  kg.psi.resize(fv.grid.n);
  kg.psi_dot.resize(fv.grid.n);
  const double m = fv.mass;
  for (std::size_t k = 0; k < fv.grid.n; ++k) {
    const Complex psi = fv.phi[k] + fv.chi[k];
    kg.psi[k] = psi;
    kg.psi_dot[k] = Complex{0.0, -1.0} * (m * (fv.phi[k] - fv.chi[k]) + fv.potential[k] * psi);
  }
  return kg;
}

FVDerivative fv_rhs(const FVState& fv, StencilOrder order) {
  fv.validate();
  FVOperator op(fv.grid, fv.mass, fv.potential, order);
  FVDerivative d{std::vector<Complex>(fv.grid.n), std::vector<Complex>(fv.grid.n)};
  op.apply(fv.phi, fv.chi, d.phi_dot, d.chi_dot);
  return d;
}

// Densities and currents -----------------------------------------------------

std::vector<double> charge_density(const FVState& fv) {
  std::vector<double> rho(fv.phi.size());
  for (std::size_t k = 0; k < rho.size(); ++k) rho[k] = std::norm(fv.phi[k]) - std::norm(fv.chi[k]);
  return rho;
}

double total_charge(const FVState& fv) {
  double q = 0.0;
  for (std::size_t k = 0; k < fv.phi.size(); ++k) q += std::norm(fv.phi[k]) - std::norm(fv.chi[k]);
  return q * fv.grid.dx;
}

std::vector<double> charge_density(const KGState& kg) {
  std::vector<double> rho(kg.psi.size());
  const double m = kg.mass;
  for (std::size_t k = 0; k < rho.size(); ++k) {
    // (i/2m)(psi* psi_dot - psi psi_dot*) = -(1/m) Im(psi* psi_dot)
    const double im = (std::conj(kg.psi[k]) * kg.psi_dot[k]).imag();
    rho[k] = -im / m - kg.potential[k] / m * std::norm(kg.psi[k]);
  }
  return rho;
}

std::vector<double> current_density(const FVState& fv, StencilOrder order) {
  const std::size_t n = fv.grid.n;
  std::vector<Complex> psi(n), dpsi(n);
  for (std::size_t k = 0; k < n; ++k) psi[k] = fv.phi[k] + fv.chi[k];
  apply_first_derivative(std::span<const Complex>(psi), fv.grid, order, std::span<Complex>(dpsi));
  std::vector<double> j(n);
  for (std::size_t k = 0; k < n; ++k) j[k] = (std::conj(psi[k]) * dpsi[k]).imag() / fv.mass;
  return j;
}

std::vector<double> current_density_expanded(const FVState& fv, StencilOrder order) {
  const std::size_t n = fv.grid.n;
  std::vector<Complex> dphi(n), dchi(n);
  apply_first_derivative(std::span<const Complex>(fv.phi), fv.grid, order, std::span<Complex>(dphi));
  apply_first_derivative(std::span<const Complex>(fv.chi), fv.grid, order, std::span<Complex>(dchi));
  const Complex pre{0.0, 0.5 / fv.mass};
  std::vector<double> j(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Complex phi = fv.phi[k], chi = fv.chi[k];
    const Complex sum = (phi * std::conj(dphi[k]) - std::conj(phi) * dphi[k]) +
                        (chi * std::conj(dchi[k]) - std::conj(chi) * dchi[k]) +
                        (phi * std::conj(dchi[k]) - std::conj(chi) * dphi[k]) +
                        (chi * std::conj(dphi[k]) - std::conj(phi) * dchi[k]);
    j[k] = (pre * sum).real();
  }
  return j;
}

std::vector<double> face_current(const FVState& fv, StencilOrder order) {
  const std::size_t n = fv.grid.n;
  const bool periodic = fv.grid.boundary == Boundary::Periodic;
  std::vector<Complex> psi(n);
  for (std::size_t k = 0; k < n; ++k) psi[k] = fv.phi[k] + fv.chi[k];
  auto at = [&](std::ptrdiff_t i) -> Complex {
    const auto sn = static_cast<std::ptrdiff_t>(n);
    if (i >= 0 && i < sn) return psi[static_cast<std::size_t>(i)];
    if (!periodic) return Complex{};
    return psi[static_cast<std::size_t>((i % sn + sn) % sn)];
  };
  // A(k, l) = Im(conj(psi_k) psi_l)
  auto cross = [&](std::ptrdiff_t k, std::ptrdiff_t l) { return (std::conj(at(k)) * at(l)).imag(); };
  std::vector<double> j(n);
  const double scale = 1.0 / (fv.mass * fv.grid.dx);
  for (std::size_t kk = 0; kk < n; ++kk) {
    const auto k = static_cast<std::ptrdiff_t>(kk);
    if (order == StencilOrder::Fourth) {
      j[kk] = scale * (16.0 * cross(k, k + 1) - cross(k - 1, k + 1) - cross(k, k + 2)) / 12.0;
    } else {
      j[kk] = scale * cross(k, k + 1);
    }
  }
  return j;
}

// Content -----------------------------------------------------------------------

double ContentSummary::particle_fraction() const {
  const double total = particle_weight + antiparticle_weight;
  return total > 0.0 ? particle_weight / total : 0.0;
}

double ContentSummary::antiparticle_fraction() const {
  const double total = particle_weight + antiparticle_weight;
  return total > 0.0 ? antiparticle_weight / total : 0.0;
}

ContentSummary content_classify(const FVState& fv, double x_lo, double x_hi) {
  ContentSummary summary;
  bool first = true;
  for (std::size_t k = 0; k < fv.grid.n; ++k) {
    const double x = fv.grid.x(k);
    if (x < x_lo || x > x_hi) continue;
    if (first) {
      summary.first_index = k;
      first = false;
    }
    const double p = std::norm(fv.phi[k]);
    const double a = std::norm(fv.chi[k]);
    summary.particle_weight += p;
    summary.antiparticle_weight += a;
    summary.particle_dominant.push_back(p > a);
  }
  summary.particle_weight *= fv.grid.dx;
  summary.antiparticle_weight *= fv.grid.dx;
  if (summary.particle_weight > summary.antiparticle_weight) {
    summary.dominant = Content::Particle;
  } else if (summary.antiparticle_weight > summary.particle_weight) {
    summary.dominant = Content::Antiparticle;
  }
  return summary;
}

FVState pt_transform(const FVState& fv) {
  fv.validate();
  if (!fv.grid.symmetric()) {
    throw DomainError("pt_transform: grid is not symmetric about x = 0 (x_min=" +
                      std::to_string(fv.grid.x_min) + ", x_max=" + std::to_string(fv.grid.x_max()) + ")");
  }
  const std::size_t n = fv.grid.n;
  FVState out = fv;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t mirror = n - 1 - k;
    out.phi[k] = fv.chi[mirror];
    out.chi[k] = fv.phi[mirror];
    out.potential[k] = -fv.potential[mirror];
  }
  out.t = -fv.t;
  return out;
}

}  // namespace kgstep
