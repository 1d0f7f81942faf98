#pragma once

// Fused pointwise evaluation of the (phi, chi) right-hand side. The sink
// receives (k, dphi_k, dchi_k) in increasing k and may write to buffers other
// than the inputs.

#include <cstddef>
#include <span>

#include "kgstep/feshbach_villars.hpp"

namespace kgstep::detail {

struct FVKernel {
  const Grid1D& grid;
  double mass;
  std::span<const double> potential;
  std::span<const double> damping;  // empty when undamped
  StencilOrder order;

  template <class Sink>
  void run(std::span<const Complex> phi, std::span<const Complex> chi, Sink&& sink) const {
    const std::size_t n = grid.n;
    const double inv_dx2 = 1.0 / (grid.dx * grid.dx);
    double c0, c1, c2;
    if (order == StencilOrder::Fourth) {
      c0 = -30.0 / 12.0 * inv_dx2;
      c1 = 16.0 / 12.0 * inv_dx2;
      c2 = -1.0 / 12.0 * inv_dx2;
    } else {
      c0 = -2.0 * inv_dx2;
      c1 = inv_dx2;
      c2 = 0.0;
    }
    const double m = mass;
    const double kinetic = 0.5 / m;
    const bool periodic = grid.boundary == Boundary::Periodic;
    const bool damped = !damping.empty();

    auto psi_at = [&](std::ptrdiff_t i) -> Complex {
      const auto sn = static_cast<std::ptrdiff_t>(n);
      if (i < 0 || i >= sn) {
        if (!periodic) return Complex{};
        i = (i % sn + sn) % sn;
      }
      const auto u = static_cast<std::size_t>(i);
      return phi[u] + chi[u];
    };
    auto emit = [&](std::size_t k, double lap_re, double lap_im) {
      const double v = potential[k];
      const double pr = phi[k].real(), pi = phi[k].imag();
      const double cr = chi[k].real(), ci = chi[k].imag();
      // -i * (a + ib) = b - ia
      const double hp_re = (v + m) * pr - kinetic * lap_re;
      const double hp_im = (v + m) * pi - kinetic * lap_im;
      const double hc_re = (v - m) * cr + kinetic * lap_re;
      const double hc_im = (v - m) * ci + kinetic * lap_im;
      double dp_re = hp_im, dp_im = -hp_re, dc_re = hc_im, dc_im = -hc_re;
      if (damped) {
        const double g = damping[k];
        dp_re -= g * pr;
        dp_im -= g * pi;
        dc_re -= g * cr;
        dc_im -= g * ci;
      }
      sink(k, Complex{dp_re, dp_im}, Complex{dc_re, dc_im});
    };
    auto edge = [&](std::size_t k) {
      const auto i = static_cast<std::ptrdiff_t>(k);
      const Complex lap = c0 * psi_at(i) + c1 * (psi_at(i + 1) + psi_at(i - 1)) +
                          c2 * (psi_at(i + 2) + psi_at(i - 2));
      emit(k, lap.real(), lap.imag());
    };

    const auto* p = reinterpret_cast<const double*>(phi.data());
    const auto* c = reinterpret_cast<const double*>(chi.data());
    for (std::size_t k = 0; k < 2 && k < n; ++k) edge(k);
    for (std::size_t k = 2; k + 2 < n; ++k) {
      const std::size_t r = 2 * k;
      const double s0r = p[r] + c[r], s0i = p[r + 1] + c[r + 1];
      const double s1r = p[r + 2] + c[r + 2] + p[r - 2] + c[r - 2];
      const double s1i = p[r + 3] + c[r + 3] + p[r - 1] + c[r - 1];
      const double s2r = p[r + 4] + c[r + 4] + p[r - 4] + c[r - 4];
      const double s2i = p[r + 5] + c[r + 5] + p[r - 3] + c[r - 3];
      emit(k, c0 * s0r + c1 * s1r + c2 * s2r, c0 * s0i + c1 * s1i + c2 * s2i);
    }
    for (std::size_t k = (n >= 4 ? n - 2 : 2); k < n; ++k) edge(k);
  }
};

}  // namespace kgstep::detail
