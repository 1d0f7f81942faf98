#pragma once

// Two-component (phi, chi) form of the 1D Klein-Gordon equation,
//
//   i dphi/dt = (V + m) phi - (1/2m) d2(phi + chi)
//   i dchi/dt = (V - m) chi + (1/2m) d2(phi + chi)
//
// with psi = phi + chi and conserved charge density rho = |phi|^2 - |chi|^2.
// Fields live on a uniform grid; spatial derivatives use central finite
// differences of second or fourth order.

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "kgstep/core_model.hpp"

namespace kgstep {

enum class Boundary { Periodic, Absorbing };
enum class StencilOrder { Second = 2, Fourth = 4 };

/// Uniform grid x_k = x_min + k dx. With Boundary::Absorbing the outer
/// absorbing_points at each end damp both components at a rate rising
/// quadratically to absorbing_strength; fields vanish beyond the ends.
struct Grid1D {
  double x_min = 0.0;
  double dx = 1.0;
  std::size_t n = 8;
  Boundary boundary = Boundary::Periodic;
  std::size_t absorbing_points = 0;
  double absorbing_strength = 0.0;

  static constexpr std::size_t kMinPoints = 8;
  static constexpr std::size_t kMinAbsorbingPoints = 16;

  /// Grid with spacing dx covering [x_lo, x_hi].
  static Grid1D spanning(double x_lo, double x_hi, double dx, Boundary boundary = Boundary::Periodic);

  double x(std::size_t k) const { return x_min + static_cast<double>(k) * dx; }
  double x_max() const { return x(n - 1); }
  /// Mirror-symmetric about x = 0 (x_k = -x_{n-1-k}).
  bool symmetric() const;
  bool in_absorbing_layer(std::size_t k) const;
  std::vector<double> damping_profile() const;
  std::vector<double> coordinates() const;
  void validate() const;
};

std::vector<double> sample_potential(const Grid1D& grid, const StepPotential& potential);

struct FVState {
  Grid1D grid;
  double mass = 1.0;
  std::vector<Complex> phi;
  std::vector<Complex> chi;
  std::vector<double> potential;
  double t = 0.0;

  void validate() const;
};

struct KGState {
  Grid1D grid;
  double mass = 1.0;
  std::vector<Complex> psi;
  std::vector<Complex> psi_dot;
  std::vector<double> potential;
  double t = 0.0;

  void validate() const;
};

// Stencils -------------------------------------------------------------------

void apply_laplacian(std::span<const Complex> f, const Grid1D& grid, StencilOrder order,
                     std::span<Complex> out);
void apply_first_derivative(std::span<const Complex> f, const Grid1D& grid, StencilOrder order,
                            std::span<Complex> out);
void apply_first_derivative(std::span<const double> f, const Grid1D& grid, StencilOrder order,
                            std::span<double> out);

/// lambda_h(k) >= 0 with -L e^{ikx} = lambda_h(k) e^{ikx} for the discrete Laplacian L.
double laplacian_symbol(double k, double dx, StencilOrder order);
double max_laplacian_symbol(double dx, StencilOrder order);

/// Right-hand side of the coupled system with preallocated scratch; used by
/// the integrators and by fv_rhs().
class FVOperator {
 public:
  FVOperator(const Grid1D& grid, double mass, std::vector<double> potential, StencilOrder order);

  void apply(std::span<const Complex> phi, std::span<const Complex> chi,
             std::span<Complex> phi_dot, std::span<Complex> chi_dot);

  const Grid1D& grid() const { return grid_; }
  double mass() const { return mass_; }
  StencilOrder order() const { return order_; }
  const std::vector<double>& potential() const { return potential_; }
  /// Absorbing-layer damping rates; empty when the grid has no layer.
  const std::vector<double>& damping() const { return damping_; }

 private:
  Grid1D grid_;
  double mass_;
  std::vector<double> potential_;
  std::vector<double> damping_;
  StencilOrder order_;
};

// Operations ------------------------------------------------------------------

FVState fv_split(const KGState& kg);
KGState fv_reconstruct(const FVState& fv);

struct FVDerivative {
  std::vector<Complex> phi_dot;
  std::vector<Complex> chi_dot;
};

FVDerivative fv_rhs(const FVState& fv, StencilOrder order = StencilOrder::Fourth);

std::vector<double> charge_density(const FVState& fv);
/// Q = sum_k rho_k dx.
double total_charge(const FVState& fv);
/// rho from psi and psi_dot: (i/2m)(psi* psi_dot - psi psi_dot*) - (V/m)|psi|^2.
std::vector<double> charge_density(const KGState& kg);

/// Nodal current (1/m) Im(psi* D psi), D the first-derivative stencil.
std::vector<double> current_density(const FVState& fv, StencilOrder order = StencilOrder::Fourth);
/// The same current assembled from the four phi/chi cross terms.
std::vector<double> current_density_expanded(const FVState& fv,
                                             StencilOrder order = StencilOrder::Fourth);
/// Face currents j_{k+1/2} paired with the Laplacian stencil: the semi-discrete
/// system satisfies d(rho_k)/dt = -(j_{k+1/2} - j_{k-1/2}) / dx - 2 gamma_k rho_k
/// exactly. Entry k holds the face between points k and k+1.
std::vector<double> face_current(const FVState& fv, StencilOrder order = StencilOrder::Fourth);

enum class Content { Particle, Antiparticle, Balanced };

struct ContentSummary {
  double particle_weight = 0.0;      // integral of |phi|^2
  double antiparticle_weight = 0.0;  // integral of |chi|^2
  std::vector<bool> particle_dominant;  // |phi_k| > |chi_k| per point in range
  std::size_t first_index = 0;
  Content dominant = Content::Balanced;

  double particle_fraction() const;
  double antiparticle_fraction() const;
};

ContentSummary content_classify(const FVState& fv,
                                double x_lo = -std::numeric_limits<double>::infinity(),
                                double x_hi = std::numeric_limits<double>::infinity());

/// phi~(x, t) = chi(-x, -t), chi~(x, t) = phi(-x, -t), V~(x) = -V(-x).
FVState pt_transform(const FVState& fv);

}  // namespace kgstep
