#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "kgstep/errors.hpp"
#include "kgstep/feshbach_villars.hpp"

using namespace kgstep;

namespace {

Grid1D periodic_grid(std::size_t n, double dx) {
  Grid1D g;
  g.x_min = -0.5 * static_cast<double>(n - 1) * dx;
  g.dx = dx;
  g.n = n;
  return g;
}

// A grid plane wave e^{ikx} with k commensurate with the period.
KGState plane_wave(const Grid1D& g, int mode, double energy, double v0 = 0.0) {
  KGState kg;
  kg.grid = g;
  kg.mass = 1.0;
  const double k = 2.0 * std::numbers::pi * mode / (static_cast<double>(g.n) * g.dx);
  for (std::size_t i = 0; i < g.n; ++i) {
    const Complex psi = std::exp(Complex{0.0, k * g.x(i)});
    kg.psi.push_back(psi);
    kg.psi_dot.push_back(Complex{0.0, -energy} * psi);
    kg.potential.push_back(v0);
  }
  return kg;
}

double wavenumber(const Grid1D& g, int mode) {
  return 2.0 * std::numbers::pi * mode / (static_cast<double>(g.n) * g.dx);
}

}  // namespace

TEST_CASE("grid construction and validation") {
  const Grid1D g = Grid1D::spanning(-1.0, 1.0, 0.1);
  CHECK(g.n == 21);
  CHECK(g.x_max() == doctest::Approx(1.0));
  CHECK(g.symmetric());
  Grid1D bad = g;
  bad.n = 4;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = g;
  bad.dx = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  Grid1D absorbing = Grid1D::spanning(0.0, 10.0, 0.1, Boundary::Absorbing);
  absorbing.absorbing_points = 4;
  absorbing.absorbing_strength = 1.0;
  CHECK_THROWS_AS(absorbing.validate(), ConfigError);
  absorbing.absorbing_points = 20;
  CHECK_NOTHROW(absorbing.validate());
  const std::vector<double> damp = absorbing.damping_profile();
  CHECK(damp.front() == doctest::Approx(1.0));
  CHECK(damp[50] == 0.0);
  CHECK(absorbing.in_absorbing_layer(0));
  CHECK_FALSE(absorbing.in_absorbing_layer(50));
}

TEST_CASE("sampled sharp step uses V0/2 on the step point") {
  const Grid1D g = periodic_grid(11, 0.5);
  const std::vector<double> v = sample_potential(g, StepPotential{3.0, 0.0, 0.0});
  CHECK(v[4] == 0.0);
  CHECK(v[5] == 1.5);
  CHECK(v[6] == 3.0);
}

TEST_CASE("discrete Laplacian acts on plane waves through its symbol") {
  const Grid1D g = periodic_grid(64, 0.25);
  for (StencilOrder order : {StencilOrder::Second, StencilOrder::Fourth}) {
    const KGState kg = plane_wave(g, 5, 1.0);
    std::vector<Complex> out(g.n);
    apply_laplacian(kg.psi, g, order, out);
    const double lambda = laplacian_symbol(wavenumber(g, 5), g.dx, order);
    for (std::size_t i = 0; i < g.n; ++i) REQUIRE(std::abs(out[i] + lambda * kg.psi[i]) < 1e-12);
  }
  CHECK(laplacian_symbol(0.3, 0.01, StencilOrder::Fourth) == doctest::Approx(0.09).epsilon(1e-9));
  CHECK(max_laplacian_symbol(0.1, StencilOrder::Second) == doctest::Approx(400.0));
  CHECK(max_laplacian_symbol(0.1, StencilOrder::Fourth) == doctest::Approx(1600.0 / 3.0));
}

TEST_CASE("split of plane waves follows the particle/antiparticle weights") {
  const Grid1D g = periodic_grid(16, 0.5);
  const double e = 1.25;
  FVState fv = fv_split(plane_wave(g, 0, e));
  CHECK(std::abs(fv.phi[3] - 0.5 * (1.0 + e) * Complex{1.0, 0.0}) < 1e-15);
  CHECK(std::abs(fv.chi[3] - 0.5 * (1.0 - e) * Complex{1.0, 0.0}) < 1e-15);

  fv = fv_split(plane_wave(g, 0, 1.0));
  CHECK(std::abs(fv.phi[7] - Complex{1.0, 0.0}) < 1e-15);
  CHECK(std::abs(fv.chi[7]) < 1e-15);

  // Transmitted wave with local energy E - V0.
  const double v0 = 3.0;
  fv = fv_split(plane_wave(g, 0, e, v0));
  CHECK(std::abs(fv.phi[2] - 0.5 * (1.0 + (e - v0))) < 1e-15);
  CHECK(std::abs(fv.chi[2] - 0.5 * (1.0 - (e - v0))) < 1e-15);
}

TEST_CASE("reconstruction inverts the split") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  KGState kg;
  kg.grid = periodic_grid(101, 0.1);
  kg.mass = 1.7;
  for (std::size_t i = 0; i < kg.grid.n; ++i) {
    kg.psi.emplace_back(u(gen), u(gen));
    kg.psi_dot.emplace_back(3.0 * u(gen), 3.0 * u(gen));
    kg.potential.push_back(4.0 * u(gen));
  }
  const KGState back = fv_reconstruct(fv_split(kg));
  for (std::size_t i = 0; i < kg.grid.n; ++i) {
    REQUIRE(std::abs(back.psi[i] - kg.psi[i]) < 1e-14);
    REQUIRE(std::abs(back.psi_dot[i] - kg.psi_dot[i]) < 1e-13);
  }

  FVState rest;
  rest.grid = periodic_grid(8, 1.0);
  rest.phi.assign(8, Complex{0.3, 0.4});
  rest.chi.assign(8, Complex{});
  rest.potential.assign(8, 0.0);
  const KGState r = fv_reconstruct(rest);
  CHECK(std::abs(r.psi_dot[0] - Complex{0.0, -1.0} * rest.phi[0]) < 1e-15);

  const FVState wave = fv_split(plane_wave(periodic_grid(16, 0.5), 2, 1.25));
  const KGState w = fv_reconstruct(wave);
  CHECK(std::abs(w.psi_dot[5] - Complex{0.0, -1.25} * w.psi[5]) < 1e-14);
}

TEST_CASE("fv_rhs on uniform fields and free plane waves") {
  FVState fv;
  fv.grid = periodic_grid(16, 0.5);
  fv.phi.assign(16, Complex{0.2, -0.1});
  fv.chi.assign(16, Complex{0.5, 0.3});
  fv.potential.assign(16, 0.0);
  FVDerivative d = fv_rhs(fv);
  CHECK(std::abs(d.phi_dot[4] - Complex{0.0, -1.0} * fv.phi[4]) < 1e-14);
  CHECK(std::abs(d.chi_dot[4] - Complex{0.0, 1.0} * fv.chi[4]) < 1e-14);

  // The semi-discrete free dispersion is E_h = sqrt(m^2 + lambda_h(k)).
  const Grid1D g = periodic_grid(64, 0.25);
  const double eh = std::sqrt(1.0 + laplacian_symbol(wavenumber(g, 3), g.dx, StencilOrder::Fourth));
  fv = fv_split(plane_wave(g, 3, eh));
  d = fv_rhs(fv);
  for (std::size_t i = 0; i < g.n; ++i) {
    REQUIRE(std::abs(d.phi_dot[i] - Complex{0.0, -eh} * fv.phi[i]) < 1e-12);
    REQUIRE(std::abs(d.chi_dot[i] - Complex{0.0, -eh} * fv.chi[i]) < 1e-12);
  }
}

TEST_CASE("charge density of plane waves") {
  const Grid1D g = periodic_grid(16, 0.5);
  std::vector<double> rho = charge_density(fv_split(plane_wave(g, 0, 1.25)));
  for (double r : rho) CHECK(r == doctest::Approx(1.25).epsilon(1e-14));

  // Transmitted Klein wave b' e^{ip'x}, b'/a = -2.18614..., local energy -1.75.
  KGState t = plane_wave(g, 0, 1.25, 3.0);
  const double bprime = -2.18614066163450717;
  for (std::size_t i = 0; i < g.n; ++i) {
    t.psi[i] *= bprime;
    t.psi_dot[i] *= bprime;
  }
  rho = charge_density(fv_split(t));
  CHECK(rho[0] == doctest::Approx(-8.36361923679058).epsilon(1e-13));
  CHECK(charge_density(t)[0] == doctest::Approx(-8.36361923679058).epsilon(1e-13));

  FVState anti;
  anti.grid = g;
  anti.phi.assign(16, Complex{});
  anti.chi.assign(16, Complex{0.1, 0.2});
  anti.potential.assign(16, 0.0);
  for (double r : charge_density(anti)) CHECK(r < 0.0);
  CHECK(total_charge(anti) == doctest::Approx(-0.05 * 16 * 0.5));
}

TEST_CASE("current density of plane waves and real fields") {
  const Grid1D g = periodic_grid(256, 0.05);
  // p = 0.75 is not commensurate; use the nearest grid mode and its symbol.
  const int mode = 2;
  const double k = wavenumber(g, mode);
  const double eh = std::sqrt(1.0 + k * k);
  const FVState fv = fv_split(plane_wave(g, mode, eh));
  const std::vector<double> j = current_density(fv);
  const std::vector<double> je = current_density_expanded(fv);
  for (std::size_t i = 0; i < g.n; ++i) {
    REQUIRE(j[i] == doctest::Approx(k).epsilon(1e-6));
    REQUIRE(je[i] == doctest::Approx(j[i]).epsilon(1e-12));
  }

  FVState real = fv;
  for (std::size_t i = 0; i < g.n; ++i) {
    const double x = g.x(i);
    real.phi[i] = Complex{std::exp(-x * x), 0.0};
    real.chi[i] = Complex{0.3 * std::exp(-x * x), 0.0};
  }
  for (double v : current_density(real)) CHECK(v == 0.0);
}

TEST_CASE("face currents close the semi-discrete continuity equation exactly") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (StencilOrder order : {StencilOrder::Second, StencilOrder::Fourth}) {
    FVState fv;
    fv.grid = periodic_grid(64, 0.2);
    for (std::size_t i = 0; i < 64; ++i) {
      fv.phi.emplace_back(u(gen), u(gen));
      fv.chi.emplace_back(u(gen), u(gen));
      fv.potential.push_back(i < 32 ? 0.0 : 3.0);
    }
    const FVDerivative d = fv_rhs(fv, order);
    const std::vector<double> face = face_current(fv, order);
    for (std::size_t k = 0; k < 64; ++k) {
      const double rho_dot =
          2.0 * (std::conj(fv.phi[k]) * d.phi_dot[k]).real() - 2.0 * (std::conj(fv.chi[k]) * d.chi_dot[k]).real();
      const double div = (face[k] - face[(k + 63) % 64]) / fv.grid.dx;
      REQUIRE(std::abs(rho_dot + div) < 1e-12);
    }
  }
}

TEST_CASE("content classification") {
  FVState fv;
  fv.grid = periodic_grid(10, 1.0);
  fv.phi.assign(10, Complex{1.0, 0.0});
  fv.chi.assign(10, Complex{});
  fv.potential.assign(10, 0.0);
  ContentSummary c = content_classify(fv);
  CHECK(c.dominant == Content::Particle);
  CHECK(c.particle_fraction() == 1.0);
  CHECK(c.antiparticle_fraction() == 0.0);

  for (std::size_t i = 5; i < 10; ++i) {
    fv.phi[i] = 0.1;
    fv.chi[i] = 1.0;
  }
  c = content_classify(fv, 0.0);
  CHECK(c.dominant == Content::Antiparticle);
  CHECK(c.first_index == 5);
  CHECK(c.particle_dominant.size() == 5);
}

TEST_CASE("PT transform is an involution and needs a symmetric grid") {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  FVState fv;
  fv.grid = periodic_grid(33, 0.1);
  fv.t = 0.7;
  for (std::size_t i = 0; i < 33; ++i) {
    fv.phi.emplace_back(u(gen), u(gen));
    fv.chi.emplace_back(u(gen), u(gen));
    fv.potential.push_back(u(gen));
  }
  const FVState once = pt_transform(fv);
  CHECK(once.t == -0.7);
  CHECK(once.phi[0] == fv.chi[32]);
  CHECK(once.potential[0] == -fv.potential[32]);
  const FVState twice = pt_transform(once);
  CHECK(twice.phi == fv.phi);
  CHECK(twice.chi == fv.chi);
  CHECK(twice.potential == fv.potential);

  // d/dt of the transformed state equals the transformed -d/dt (t -> -t).
  const FVDerivative d = fv_rhs(fv);
  const FVDerivative dt = fv_rhs(once);
  for (std::size_t i = 0; i < 33; ++i) {
    REQUIRE(std::abs(dt.phi_dot[i] + d.chi_dot[32 - i]) < 1e-12);
    REQUIRE(std::abs(dt.chi_dot[i] + d.phi_dot[32 - i]) < 1e-12);
  }

  FVState skewed = fv;
  skewed.grid.x_min += 0.05;
  CHECK_THROWS_AS(pt_transform(skewed), DomainError);
}

TEST_CASE("state validation rejects mismatched sizes") {
  FVState fv;
  fv.grid = periodic_grid(16, 0.5);
  fv.phi.assign(16, Complex{});
  fv.chi.assign(15, Complex{});
  fv.potential.assign(16, 0.0);
  CHECK_THROWS_AS(fv.validate(), ConfigError);
  fv.chi.assign(16, Complex{});
  fv.mass = 0.0;
  CHECK_THROWS_AS(fv.validate(), ConfigError);
}
