#include "kgstep/verification.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <thread>

#include "json.hpp"
#include "kgstep/analytic_scattering.hpp"
#include "kgstep/errors.hpp"
#include "kgstep/feshbach_villars.hpp"
#include "kgstep/wavepacket_sim.hpp"

namespace kgstep {

std::string_view to_string(Injection injection) {
  switch (injection) {
    case Injection::None: return "none";
    case Injection::FlipBranch: return "flip-branch";
    case Injection::UnstableDt: return "unstable-dt";
  }
  return "?";
}

Injection parse_injection(std::string_view text) {
  for (Injection i : {Injection::None, Injection::FlipBranch, Injection::UnstableDt}) {
    if (to_string(i) == text) return i;
  }
  throw ConfigError("unknown injection '" + std::string(text) +
                    "' (expected none, flip-branch or unstable-dt)");
}

bool VerifyReport::all_passed() const {
  return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed; });
}

std::vector<std::string> VerifyReport::failed() const {
  std::vector<std::string> out;
  for (const CheckResult& r : results) {
    if (!r.passed) out.push_back(r.name);
  }
  return out;
}

namespace {

std::string printf_string(const char* format, ...) {
  va_list args;
  va_start(args, format);
  va_list copy;
  va_copy(copy, args);
  const int size = std::vsnprintf(nullptr, 0, format, copy);
  va_end(copy);
  std::string out(static_cast<std::size_t>(std::max(size, 0)), '\0');
  std::vsnprintf(out.data(), out.size() + 1, format, args);
  va_end(args);
  return out;
}

double ulp(double x) {
  x = std::abs(x);
  return std::nextafter(x, std::numeric_limits<double>::infinity()) - x;
}

// FNV-1a, so per-check streams do not depend on the standard library's hash.
std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : gen_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  /// E in (1, 10] (units of m).
  double energy() { return 10.0 - 9.0 * uniform(0.0, 1.0); }
  /// V0 in [0, 20].
  double step() { return 20.0 * uniform(0.0, 1.0); }

 private:
  std::mt19937_64 gen_;
};

struct Outcome {
  bool passed = false;
  std::string detail;
};

double l2_distance(std::span<const Complex> a, std::span<const Complex> b, double dx) {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) sum += std::norm(a[k] - b[k]);
  return std::sqrt(sum * dx);
}

double fv_distance(const FVState& a, const FVState& b) {
  const double phi = l2_distance(a.phi, b.phi, a.grid.dx);
  const double chi = l2_distance(a.chi, b.chi, a.grid.dx);
  return std::hypot(phi, chi);
}

double max_charge_drift(std::span<const ObservableRecord> records) {
  const double q0 = records.front().q_total;
  double worst = 0.0;
  for (const ObservableRecord& r : records) worst = std::max(worst, std::abs(r.q_total - q0) / std::abs(q0));
  return worst;
}

double elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Scenarios --------------------------------------------------------------------

enum class Packet { Free, Evanescent, Klein };
constexpr std::array<Packet, 3> kPackets{Packet::Free, Packet::Evanescent, Packet::Klein};
constexpr double kPacketEnergy = 1.25;

double packet_step(Packet p) {
  switch (p) {
    case Packet::Free: return 0.0;
    case Packet::Evanescent: return 2.0;
    case Packet::Klein: return 3.0;
  }
  return 0.0;
}

const char* packet_name(Packet p) {
  switch (p) {
    case Packet::Free: return "free";
    case Packet::Evanescent: return "evanescent";
    case Packet::Klein: return "klein";
  }
  return "?";
}

struct OracleComparison {
  double difference = 0.0;  // |psi_FV(dt) - psi_KG(dt/2)|
  double fv_error = 0.0;    // Richardson estimate for the FV run
  double kg_error = 0.0;    // Richardson estimate for the KG run at dt/2

  double ratio() const { return difference / (fv_error + kg_error); }
  bool passed() const { return difference <= 10.0 * (fv_error + kg_error); }
};

/// RK4 at dt and 2 dt, leapfrog at dt and dt / 2, all to the same t_end.
OracleComparison compare_with_oracle(const FVState& initial, const SimConfig& sim,
                                     const FVState& fv_fine) {
  SimConfig coarse = sim;
  coarse.dt = 2.0 * sim.dt;
  coarse.enforce_stability = false;
  coarse.record_every = coarse.steps();
  const FVState fv_coarse = evolve(initial, coarse).final_state;

  const KGState kg_initial = fv_reconstruct(initial);
  SimConfig half = sim;
  half.dt = 0.5 * sim.dt;
  const KGState kg_full = evolve_kg(kg_initial, sim);
  const KGState kg_half = evolve_kg(kg_initial, half);

  const std::vector<Complex> psi_fine = fv_reconstruct(fv_fine).psi;
  const std::vector<Complex> psi_coarse = fv_reconstruct(fv_coarse).psi;
  const double dx = sim.grid.dx;

  OracleComparison c;
  c.difference = l2_distance(psi_fine, kg_half.psi, dx);
  // RK4: e(2dt) - e(dt) = 15 e(dt). Leapfrog: e(dt) - e(dt/2) = 3 e(dt/2).
  c.fv_error = l2_distance(psi_fine, psi_coarse, dx) / 15.0;
  c.kg_error = l2_distance(kg_full.psi, kg_half.psi, dx) / 3.0;
  return c;
}

/// Free packet used by the continuity-convergence criterion.
struct ConvergenceCase {
  FVState initial;
  SimConfig sim;
};

ConvergenceCase convergence_case(double dx) {
  ConvergenceCase c;
  Grid1D& g = c.sim.grid;
  g.x_min = -100.0;
  g.dx = dx;
  g.n = static_cast<std::size_t>(std::lround(200.0 / dx));
  g.boundary = Boundary::Periodic;
  c.sim.dt = 0.4 * dx * dx;
  c.sim.t_end = 10.0;
  c.sim.order = StencilOrder::Fourth;
  c.sim.x_step = 1e3;
  c.sim.record_every = c.sim.steps();
  const WavePacketSpec packet{0.0, 10.0, 1.0, Complex{1.0, 0.0}};
  c.initial = init_gaussian_packet(packet, discrete_dispersion(1.0, dx, c.sim.order), g, 1.0,
                                   StepPotential{0.0, 0.0, c.sim.x_step});
  return c;
}

class Context {
 public:
  explicit Context(const VerifyOptions& options) : options_(options) {}

  Sampler sampler(std::string_view salt) const { return Sampler(options_.seed ^ fnv1a(salt)); }
  BranchRule branch() const {
    return options_.injection == Injection::FlipBranch ? BranchRule::Flipped : BranchRule::Physical;
  }

  /// Applies the unstable-dt mutation to a packet setup.
  void prepare(ScatteringSetup& setup) const {
    if (options_.injection != Injection::UnstableDt) return;
    SimConfig& sim = setup.sim;
    sim.dt = 2.0 * stability_bound(sim.grid, setup.mass, std::abs(setup.step.height), sim.order, sim.integrator);
    sim.enforce_stability = false;
  }

  const ScatteringRun& packet(Packet p) {
    Slot<ScatteringRun>& slot = packets_[static_cast<std::size_t>(p)];
    std::call_once(slot.once, [&] {
      try {
        ScatteringSetup setup = default_setup(1.0, kPacketEnergy, packet_step(p));
        prepare(setup);
        slot.value = run_scattering(setup);
      } catch (...) {
        slot.error = std::current_exception();
      }
    });
    if (slot.error) std::rethrow_exception(slot.error);
    return *slot.value;
  }

  const OracleComparison& oracle(Packet p) {
    Slot<OracleComparison>& slot = oracles_[static_cast<std::size_t>(p)];
    std::call_once(slot.once, [&] {
      try {
        const ScatteringRun& run = packet(p);
        slot.value = compare_with_oracle(run.initial_state, run.setup.sim, run.final_state);
      } catch (...) {
        slot.error = std::current_exception();
      }
    });
    if (slot.error) std::rethrow_exception(slot.error);
    return *slot.value;
  }

 private:
  template <class T>
  struct Slot {
    std::once_flag once;
    std::optional<T> value;
    std::exception_ptr error;
  };

  const VerifyOptions& options_;
  std::array<Slot<ScatteringRun>, 3> packets_;
  std::array<Slot<OracleComparison>, 3> oracles_;
};

// Module invariants: kinematics -------------------------------------------------------

Outcome check_mass_shell(Context& ctx) {
  Sampler s = ctx.sampler("mass_shell");
  std::size_t bad = 0;
  double worst = 0.0;
  const std::size_t n = 20000;
  for (std::size_t i = 0; i < n; ++i) {
    const double m = s.uniform(0.1, 10.0);
    const double e = m * s.energy();
    const double p = momentum_from_energy(e, m);
    const double err = std::abs(p * p + m * m - e * e) / ulp(e * e);
    worst = std::max(worst, err);
    if (err > 4.0) ++bad;
  }
  return {bad == 0, printf_string("%zu samples, worst |p^2+m^2-E^2| = %.2f ulp(E^2) (limit 4)", n, worst)};
}

Outcome check_regime_sign(Context& ctx) {
  Sampler s = ctx.sampler("regime_sign");
  std::size_t bad = 0, thresholds = 0;
  const std::size_t n = 20000;
  auto consistent = [](double e, double v) {
    const Regime r = classify_regime(e, v, 1.0);
    const double q = transmitted_momentum_squared(e, v, 1.0);
    if (is_threshold(r)) return q == 0.0;
    if (r == Regime::Evanescent) return q < 0.0;
    return q > 0.0;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const double e = s.energy();
    if (!consistent(e, s.step())) ++bad;
    for (Regime t : {Regime::ThresholdLower, Regime::ThresholdUpper}) {
      const double v = threshold_step_height(e, 1.0, t);
      const bool exact = e - v == (t == Regime::ThresholdLower ? 1.0 : -1.0);
      if (!consistent(e, v) || (exact && classify_regime(e, v, 1.0) != t)) ++bad;
      if (exact) ++thresholds;
    }
  }
  return {bad == 0, printf_string("%zu random + %zu exact threshold points, %zu inconsistent", n, thresholds, bad)};
}

Outcome check_klein_group_velocity(Context& ctx) {
  Sampler s = ctx.sampler("klein_group_velocity");
  std::size_t count = 0, bad = 0;
  while (count < 20000) {
    const double e = s.energy(), v = s.step();
    if (classify_regime(e, v, 1.0) != Regime::Klein) continue;
    ++count;
    if (!(group_velocity(select_pprime_branch(e, v, 1.0, ctx.branch()), e, v, 1.0) > 0.0)) ++bad;
  }
  return {bad == 0, printf_string("%zu Klein points, %zu with non-positive group velocity", count, bad)};
}

// Module invariants: plane-wave scattering --------------------------------------------

template <class F>
void for_each_sweep_point(Context& ctx, std::string_view salt, std::size_t n, F&& f) {
  Sampler s = ctx.sampler(salt);
  for (std::size_t i = 0; i < n; ++i) {
    const double e = s.energy();
    f(solve_step(ParticleParams::from_energy(e, 1.0), s.step(), ctx.branch()));
  }
}

Outcome check_matching(Context& ctx) {
  std::size_t n = 20000, bad = 0;
  double worst = 0.0;
  for_each_sweep_point(ctx, "matching", n, [&](const ScatteringSolution& sol) {
    const Complex lhs = 1.0 + sol.b_over_a;
    const double scale = std::max({1.0, std::abs(sol.b_over_a), std::abs(sol.bprime_over_a)});
    const double err = std::abs(lhs - sol.bprime_over_a) / ulp(scale);
    worst = std::max(worst, err);
    if (err > 4.0) ++bad;
  });
  return {bad == 0, printf_string("%zu points, worst |1 + b/a - b'/a| = %.2f ulp (limit 4)", n, worst)};
}

Outcome check_regime_reflectivity(Context& ctx) {
  std::size_t n = 20000, bad = 0;
  auto ok = [](const ScatteringSolution& sol) {
    const double r = sol.reflectivity;
    switch (sol.regime) {
      case Regime::Ordinary: return r < 1.0;
      case Regime::Klein: return r > 1.0;
      default: return std::abs(r - 1.0) <= 1e-12;
    }
  };
  for_each_sweep_point(ctx, "regime_reflectivity", n, [&](const ScatteringSolution& sol) {
    if (!ok(sol)) ++bad;
  });
  Sampler s = ctx.sampler("regime_reflectivity_thresholds");
  for (std::size_t i = 0; i < 1000; ++i) {
    const double e = s.energy();
    for (Regime t : {Regime::ThresholdLower, Regime::ThresholdUpper}) {
      const ScatteringSolution sol =
          solve_step(ParticleParams::from_energy(e, 1.0), threshold_step_height(e, 1.0, t), ctx.branch());
      if (!ok(sol)) ++bad;
    }
  }
  return {bad == 0, printf_string("%zu sweep points + 2000 thresholds, %zu violate R<1/R=1/R>1 by regime", n, bad)};
}

struct BalanceStats {
  std::size_t count = 0, over = 0;
  double worst = 0.0, worst_e = 0.0, worst_v = 0.0, worst_r = 0.0, worst_relative = 0.0;

  void add(const ScatteringSolution& sol) {
    const WaveCurrents w = wave_currents(sol);
    const double res = std::abs(w.j_i + w.j_r - w.j_t);
    const double scale = std::max({std::abs(w.j_i), std::abs(w.j_r), std::abs(w.j_t)});
    ++count;
    if (!(res <= 1e-12)) ++over;
    worst_relative = std::max(worst_relative, res / scale);
    if (res > worst) {
      worst = res;
      worst_e = sol.params.energy;
      worst_v = sol.step_height;
      worst_r = sol.reflectivity;
    }
  }
  std::string describe() const {
    return printf_string(
        "%zu/%zu within 1e-12; worst %.3g at E=%.6g V0=%.6g (R=%.4g); max relative residual %.2g", count - over,
        count, worst, worst_e, worst_v, worst_r, worst_relative);
  }
};

Outcome check_current_balance(Context& ctx) {
  BalanceStats stats;
  for_each_sweep_point(ctx, "current_balance", 20000, [&](const ScatteringSolution& sol) { stats.add(sol); });
  return {stats.over == 0, stats.describe()};
}

Outcome check_klein_sign_coherence(Context& ctx) {
  std::size_t klein = 0, bad = 0;
  for_each_sweep_point(ctx, "sign_coherence", 20000, [&](const ScatteringSolution& sol) {
    if (sol.regime != Regime::Klein) return;
    ++klein;
    const WaveCurrents w = wave_currents(sol);
    const double vg = group_velocity(sol.p_prime, sol.params.energy, sol.step_height, 1.0);
    if (!(w.rho_t < 0.0 && w.j_t < 0.0 && vg > 0.0)) ++bad;
  });
  return {bad == 0, printf_string("%zu Klein points, %zu without rho_t<0, j_t<0, v_g>0", klein, bad)};
}

Outcome check_charge_transport(Context& ctx) {
  std::size_t count = 0, bad = 0;
  double worst = 0.0;
  for_each_sweep_point(ctx, "charge_transport", 20000, [&](const ScatteringSolution& sol) {
    if (!is_oscillatory(sol.regime) || is_threshold(sol.regime)) return;
    ++count;
    const WaveCurrents w = wave_currents(sol);
    const double vg = group_velocity(sol.p_prime, sol.params.energy, sol.step_height, 1.0);
    const double err = std::abs(w.rho_t * vg - w.j_t) / ulp(w.j_t);
    worst = std::max(worst, err);
    if (err > 4.0) ++bad;
  });
  return {bad == 0, printf_string("%zu oscillatory points, worst |rho_t v_g - j_t| = %.2f ulp (limit 4)", count, worst)};
}

// Module invariants: two-component form --------------------------------------------

KGState random_kg_state(Sampler& s, std::size_t n) {
  KGState kg;
  kg.grid = Grid1D{-0.5 * static_cast<double>(n - 1) * 0.1, 0.1, n, Boundary::Periodic, 0, 0.0};
  kg.mass = s.uniform(0.5, 2.0);
  for (std::size_t k = 0; k < n; ++k) {
    kg.psi.emplace_back(s.uniform(-1, 1), s.uniform(-1, 1));
    kg.psi_dot.emplace_back(s.uniform(-3, 3), s.uniform(-3, 3));
    kg.potential.push_back(s.uniform(-5, 5));
  }
  return kg;
}

// Errors are counted in units of eps times the largest magnitude entering
// each formula: the split and reconstruction add (V/m) psi and psi_dot / m
// terms, and the psi-form charge cancels |psi||psi_dot|/m against V|psi|^2/m.
constexpr double kEps = std::numeric_limits<double>::epsilon();

Outcome check_split_roundtrip(Context& ctx) {
  Sampler s = ctx.sampler("split_roundtrip");
  double worst = 0.0;
  std::size_t points = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const KGState kg = random_kg_state(s, 257);
    const KGState back = fv_reconstruct(fv_split(kg));
    for (std::size_t k = 0; k < kg.grid.n; ++k, ++points) {
      const double v = std::abs(kg.potential[k]);
      const double scale_psi = (1.0 + v / kg.mass) * std::abs(kg.psi[k]) + std::abs(kg.psi_dot[k]) / kg.mass;
      const double scale_dot = kg.mass * scale_psi + v * std::abs(kg.psi[k]);
      worst = std::max(worst, std::abs(back.psi[k] - kg.psi[k]) / (kEps * scale_psi));
      worst = std::max(worst, std::abs(back.psi_dot[k] - kg.psi_dot[k]) / (kEps * scale_dot));
    }
  }
  return {worst <= 4.0, printf_string("%zu points, worst round-trip error %.2f eps (limit 4)", points, worst)};
}

Outcome check_charge_forms(Context& ctx) {
  Sampler s = ctx.sampler("charge_forms");
  double worst = 0.0;
  std::size_t points = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const KGState kg0 = random_kg_state(s, 257);
    const FVState fv = fv_split(kg0);
    const KGState kg = fv_reconstruct(fv);
    const std::vector<double> a = charge_density(fv);
    const std::vector<double> b = charge_density(kg);
    for (std::size_t k = 0; k < a.size(); ++k, ++points) {
      const double psi = std::abs(kg.psi[k]);
      const double scale = std::norm(fv.phi[k]) + std::norm(fv.chi[k]) +
                           psi * (std::abs(kg.psi_dot[k]) + std::abs(kg.potential[k]) * psi) / kg.mass;
      worst = std::max(worst, std::abs(a[k] - b[k]) / (kEps * scale));
    }
  }
  return {worst <= 4.0, printf_string("%zu points, worst |rho_FV - rho_psi| = %.2f eps (limit 4)", points, worst)};
}

// Module invariants: simulation -------------------------------------------------------

ScatteringSetup small_klein_setup(const Context& ctx) {
  SetupRecipe recipe;
  recipe.energy = kPacketEnergy;
  recipe.step_height = 3.0;
  recipe.sigma_x = 10.0;
  recipe.dx = 0.1;
  ScatteringSetup setup = make_setup(recipe);
  ctx.prepare(setup);
  return setup;
}

Outcome check_determinism(Context& ctx) {
  const ScatteringSetup setup = small_klein_setup(ctx);
  const ScatteringRun a = run_scattering(setup);
  const ScatteringRun b = run_scattering(setup);
  bool same = a.records.size() == b.records.size();
  for (std::size_t i = 0; same && i < a.records.size(); ++i) {
    same = std::memcmp(&a.records[i], &b.records[i], sizeof(ObservableRecord)) == 0;
  }
  return {same, printf_string("two runs of %zu records (n=%zu): %s", a.records.size(), setup.sim.grid.n,
                              same ? "bitwise identical" : "differ")};
}

Outcome check_instability_detection(Context&) {
  SetupRecipe recipe;
  recipe.step_height = 3.0;
  recipe.sigma_x = 10.0;
  recipe.dx = 0.1;
  ScatteringSetup setup = make_setup(recipe);
  SimConfig& sim = setup.sim;
  const double bound = stability_bound(sim.grid, 1.0, 3.0, sim.order, sim.integrator);
  sim.dt = 2.0 * bound;

  bool rejected = false;
  try {
    sim.validate(1.0, 3.0);
  } catch (const ConfigError&) {
    rejected = true;
  }
  sim.enforce_stability = false;
  std::string caught;
  try {
    run_scattering(setup);
  } catch (const InstabilityError& e) {
    caught = e.what();
  }
  const bool ok = rejected && !caught.empty();
  return {ok, printf_string("dt = 2 x bound (%.4g): guard %s, evolution %s", bound,
                            rejected ? "rejects it" : "ACCEPTS it",
                            caught.empty() ? "did NOT abort" : "aborted with InstabilityError")};
}

Outcome check_regime_reproduction(Context& ctx) {
  // p0 sigma >= 40 at E = 2.5 m needs sigma >= 17.46 / m.
  struct Case {
    const char* name;
    double v0;
  };
  const std::array<Case, 3> cases{{{"ordinary", 0.5}, {"evanescent", 2.5}, {"klein", 6.0}}};
  std::string detail;
  bool all = true;
  for (const Case& c : cases) {
    SetupRecipe recipe;
    recipe.energy = 2.5;
    recipe.step_height = c.v0;
    recipe.sigma_x = 17.5;
    ScatteringSetup setup = make_setup(recipe);
    ctx.prepare(setup);
    const ScatteringRun run = run_scattering(setup);
    const double r = run.measurement.reflectivity;
    bool ok = false;
    if (c.v0 == 0.5) ok = r < 1.0;
    if (c.v0 == 2.5) ok = std::abs(r - 1.0) <= 5e-3;
    if (c.v0 == 6.0) ok = r > 1.0;
    all = all && ok;
    detail += printf_string("%s%s R=%.6g (analytic %.6g)", detail.empty() ? "" : "; ", c.name, r,
                            solve_step(ParticleParams::from_energy(2.5, 1.0), c.v0, ctx.branch()).reflectivity);
  }
  return {all, "p0*sigma=40.1: " + detail};
}

Outcome check_measurement_examples(Context& ctx) {
  const ScatteringRun& free = ctx.packet(Packet::Free);
  const ScatteringRun& evanescent = ctx.packet(Packet::Evanescent);
  const double r_free = free.measurement.reflectivity;
  const double r_evan = evanescent.measurement.reflectivity;
  const double leak = std::abs(evanescent.records.back().q_right) / evanescent.measurement.q_incident;
  const bool ok = r_free <= 1e-6 && std::abs(r_evan - 1.0) <= 5e-3 && leak <= 1e-4;
  return {ok, printf_string("V0=0: R=%.3g (limit 1e-6); V0=2: R=%.6f (1 +- 0.5%%), |Q_right|/Q_in=%.2g (limit 1e-4)",
                            r_free, r_evan, leak)};
}

// Acceptance criteria -------------------------------------------------------------------

Outcome acceptance_evanescent(Context& ctx) {
  Sampler s = ctx.sampler("acceptance.1");
  const auto start = std::chrono::steady_clock::now();
  std::size_t count = 0, bad = 0;
  double worst = 0.0;
  while (count < 200) {
    const double e = s.energy();
    const double v = s.uniform(e - 1.0, e + 1.0);
    if (classify_regime(e, v, 1.0) != Regime::Evanescent) continue;
    ++count;
    const double dev = std::abs(solve_step(ParticleParams::from_energy(e, 1.0), v, ctx.branch()).reflectivity - 1.0);
    worst = std::max(worst, dev);
    if (dev > 1e-12) ++bad;
  }
  const double secs = elapsed(start);
  return {bad == 0 && secs < 1.0,
          printf_string("200 evanescent points, max |R-1| = %.3g (limit 1e-12), %zu over; %.3f s (limit 1 s)", worst,
                        bad, secs)};
}

Outcome acceptance_klein(Context& ctx) {
  Sampler s = ctx.sampler("acceptance.2");
  const auto start = std::chrono::steady_clock::now();
  std::size_t count = 0, not_above = 0;
  BalanceStats stats;
  while (count < 200) {
    const double e = s.energy(), v = s.step();
    if (classify_regime(e, v, 1.0) != Regime::Klein) continue;
    ++count;
    const ScatteringSolution sol = solve_step(ParticleParams::from_energy(e, 1.0), v, ctx.branch());
    if (!(sol.reflectivity > 1.0)) ++not_above;
    stats.add(sol);
  }
  const double secs = elapsed(start);
  return {not_above == 0 && stats.over == 0 && secs < 1.0,
          printf_string("200 Klein points, R>1 for %zu; current balance %s; %.3f s (limit 1 s)", count - not_above,
                        stats.describe().c_str(), secs)};
}

Outcome acceptance_worked_example(Context& ctx) {
  const auto start = std::chrono::steady_clock::now();
  const ScatteringSolution sol = solve_step(ParticleParams::from_energy(1.25, 1.0), 3.0, ctx.branch());
  const WaveCurrents w = wave_currents(sol);
  // Independent oracle values (direct arithmetic, 18 digits).
  const double p_prime = -1.43614066163450716;  // -sqrt(2.0625)
  const double r = 10.1514923157207751;
  const double e_c = 1.75;
  auto rel = [](double got, double want) { return std::abs(got / want - 1.0); };
  const double dp = rel(sol.p_prime, p_prime);
  const double dr = rel(sol.reflectivity, r);
  double de = std::numeric_limits<double>::infinity();
  if (sol.regime == Regime::Klein) de = rel(antiparticle_relabel(sol).energy, e_c);
  const double secs = elapsed(start);
  const bool ok = dp <= 1e-10 && dr <= 1e-10 && de <= 1e-10 && w.rho_t < 0.0 && secs < 0.1;
  return {ok, printf_string("p'=%.15g (rel %.1e), R=%.15g (rel %.1e), rho_t=%.6g, E_c=%.15g (rel %.1e); %.4f s", sol.p_prime,
                            dp, sol.reflectivity, dr, w.rho_t, e_c * (1.0 + de), de, secs)};
}

Outcome acceptance_packet_klein(Context& ctx) {
  const ScatteringRun& run = ctx.packet(Packet::Klein);
  const double analytic = solve_step(ParticleParams::from_energy(kPacketEnergy, 1.0), 3.0, ctx.branch()).reflectivity;
  const double r = run.measurement.reflectivity;
  const double rel = std::abs(r / analytic - 1.0);
  const double q_right = run.records.back().q_right;

  const double v_in = run.setup.packet.p0 / run.setup.energy;
  const double t_hit = (run.setup.step.x_step - run.setup.packet.x0) / v_in;
  const double t_after = t_hit + 3.0 * run.setup.packet.sigma_x / v_in;
  std::size_t checked = 0;
  bool increasing = true;
  double previous = -std::numeric_limits<double>::infinity();
  for (const ObservableRecord& rec : run.records) {
    if (rec.t < t_after) continue;
    if (!(rec.centroid_right > previous)) increasing = false;
    previous = rec.centroid_right;
    ++checked;
  }
  const ContentSummary content = content_classify(run.final_state, run.setup.step.x_step);
  const bool anti = content.dominant == Content::Antiparticle;
  const bool ok = rel <= 0.02 && q_right < 0.0 && increasing && checked >= 3 && anti && run.seconds <= 300.0;
  return {ok, printf_string("R=%.6g vs analytic %.6g (rel %.2e, limit 2e-2); Q_right(t_end)=%.4g; centroid %s over %zu "
                            "records from t=%.1f; x>0 content %s (chi fraction %.3f); %.1f s (limit 300 s)",
                            r, analytic, rel, q_right, increasing ? "strictly increasing" : "NOT increasing",
                            checked, t_after, anti ? "antiparticle-dominant" : "NOT antiparticle-dominant",
                            content.antiparticle_fraction(), run.seconds)};
}

Outcome acceptance_conservation(Context& ctx) {
  bool ok = true;
  std::string detail;
  for (Packet p : kPackets) {
    const ScatteringRun& run = ctx.packet(p);
    const double drift = max_charge_drift(run.records);
    ok = ok && drift <= 1e-6;
    detail += printf_string("%s%s %.2e", detail.empty() ? "" : ", ", packet_name(p), drift);
  }
  return {ok, "max |Q(t)-Q(0)|/|Q(0)| on periodic grids: " + detail + " (limit 1e-6)"};
}

Outcome acceptance_continuity(Context&) {
  const auto start = std::chrono::steady_clock::now();
  // Finer levels sit on the round-off floor of the dt ~ dx^2 path (noise
  // accumulated over t / dt steps at frequency ~1/dx), not on truncation.
  const std::array<double, 4> levels{0.4, 0.2, 0.1, 0.05};
  std::array<double, 4> residual{};
  for (std::size_t i = 0; i < levels.size(); ++i) {
    ConvergenceCase c = convergence_case(levels[i]);
    RK4Stepper stepper(c.initial, c.sim.order);
    FVState state = c.initial;
    const std::size_t steps = c.sim.steps();
    for (std::size_t s = 0; s + 1 < steps; ++s) stepper.step(state, c.sim.dt);
    const std::vector<double> before = charge_density(state);
    stepper.step(state, c.sim.dt);
    const FVState centre = state;
    stepper.step(state, c.sim.dt);
    residual[i] = continuity_residual(before, centre, charge_density(state), c.sim.dt, c.sim.order);
  }
  // Least-squares slope of log residual against log dx.
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    mx += std::log(levels[i]);
    my += std::log(residual[i]);
  }
  mx /= 4.0;
  my /= 4.0;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    sxy += (std::log(levels[i]) - mx) * (std::log(residual[i]) - my);
    sxx += (std::log(levels[i]) - mx) * (std::log(levels[i]) - mx);
  }
  const double slope = sxy / sxx;
  const double secs = elapsed(start);
  const bool ok = std::abs(slope - 4.0) <= 0.5 && secs <= 600.0;
  return {ok, printf_string("residuals %.3g, %.3g, %.3g, %.3g at dx=0.4..0.05; order %.3f (want 4 +- 0.5); %.1f s",
                            residual[0], residual[1], residual[2], residual[3], slope, secs)};
}

Outcome acceptance_oracle(Context& ctx) {
  bool ok = true;
  std::string detail;
  auto add = [&](const char* name, const OracleComparison& c) {
    ok = ok && c.passed();
    detail += printf_string("%s%s %.3g/(%.2g+%.2g)=%.2f", detail.empty() ? "" : "; ", name, c.difference, c.fv_error,
                            c.kg_error, c.ratio());
  };
  for (Packet p : kPackets) add(packet_name(p), ctx.oracle(p));
  ConvergenceCase c = convergence_case(0.2);
  const FVState fine = evolve(c.initial, c.sim).final_state;
  add("continuity packet", compare_with_oracle(c.initial, c.sim, fine));
  return {ok, "|psi_FV - psi_KG| / (err_FV + err_KG) per scenario (limit 10): " + detail};
}

Outcome acceptance_pt_symmetry(Context&) {
  const auto start = std::chrono::steady_clock::now();
  Grid1D grid;
  grid.n = 1601;
  grid.dx = 0.1;
  grid.x_min = -0.5 * static_cast<double>(grid.n - 1) * grid.dx;
  grid.boundary = Boundary::Periodic;
  const StepPotential step{3.0, 0.0, 0.0};
  const WavePacketSpec packet{-40.0, 6.0, 0.75, Complex{1.0, 0.0}};
  FVState state =
      init_gaussian_packet(packet, discrete_dispersion(1.0, grid.dx, StencilOrder::Fourth), grid, 1.0, step);
  const double dt = 0.04;
  RK4Stepper stepper(state, StencilOrder::Fourth);
  for (int s = 0; s < 2000; ++s) stepper.step(state, dt);  // t = 80: mid-interaction

  const FVState next = rk4_step(state, dt);
  const FVState back = rk4_step(pt_transform(next), dt);
  const double defect = fv_distance(back, pt_transform(state));
  const FVState halves = rk4_step(rk4_step(state, 0.5 * dt), 0.5 * dt);
  const double truncation = fv_distance(next, halves) * 16.0 / 15.0;
  const double secs = elapsed(start);
  const bool ok = defect <= 10.0 * truncation && secs < 60.0;
  return {ok, printf_string("one-step defect %.3g vs truncation %.3g (ratio %.3f, limit 10); %.2f s", defect,
                            truncation, defect / truncation, secs)};
}

struct CheckDef {
  std::string_view name;
  std::string_view title;
  Outcome (*run)(Context&);
};

const std::vector<CheckDef>& registry() {
  static const std::vector<CheckDef> checks = {
      {"core.mass_shell", "p^2 + m^2 = E^2 to 4 ulps", check_mass_shell},
      {"core.regime_sign", "regime tags agree with the sign of p'^2", check_regime_sign},
      {"core.klein_group_velocity", "Klein branch has positive group velocity", check_klein_group_velocity},
      {"analytic.matching", "1 + b/a = b'/a to 4 ulps", check_matching},
      {"analytic.regime_reflectivity", "R<1 / R=1 / R>1 by regime", check_regime_reflectivity},
      {"analytic.current_balance", "|j_i + j_r - j_t| <= 1e-12 over the sweep", check_current_balance},
      {"analytic.klein_sign_coherence", "Klein: rho_t < 0, j_t < 0, v_g > 0", check_klein_sign_coherence},
      {"analytic.charge_transport", "rho_t v_g = j_t to 4 ulps", check_charge_transport},
      {"fv.split_roundtrip", "split/reconstruct round trip to 4 ulps", check_split_roundtrip},
      {"fv.charge_forms", "two-component and psi-form charge agree", check_charge_forms},
      {"sim.determinism", "identical config gives identical records", check_determinism},
      {"sim.instability_detection", "dt beyond the bound is rejected and aborts", check_instability_detection},
      {"sim.regime_reproduction", "packet R by regime at p0*sigma >= 40", check_regime_reproduction},
      {"sim.measurement_examples", "free R ~ 0, evanescent R = 1, no leak", check_measurement_examples},
      {"acceptance.1", "evanescent reflectivity R = 1", acceptance_evanescent},
      {"acceptance.2", "Klein reflectivity R > 1 and current balance", acceptance_klein},
      {"acceptance.3", "worked Klein scenario E=1.25, V0=3", acceptance_worked_example},
      {"acceptance.4", "packet-level Klein paradox", acceptance_packet_klein},
      {"acceptance.5", "charge conservation on periodic grids", acceptance_conservation},
      {"acceptance.6", "continuity residual converges at order 4", acceptance_continuity},
      {"acceptance.7", "FV and second-order KG evolutions agree", acceptance_oracle},
      {"acceptance.8", "PT symmetry one-step defect", acceptance_pt_symmetry},
  };
  return checks;
}

bool selected(std::string_view name, const std::vector<std::string>& filters) {
  if (filters.empty()) return true;
  return std::any_of(filters.begin(), filters.end(), [&](const std::string& f) { return name.starts_with(f); });
}

}  // namespace

std::vector<CheckInfo> list_checks() {
  std::vector<CheckInfo> out;
  for (const CheckDef& c : registry()) out.push_back({c.name, c.title});
  return out;
}

VerifyReport run_verification(const VerifyOptions& options,
                              const std::function<void(const CheckResult&)>& on_result) {
  for (const std::string& f : options.checks) {
    const bool any = std::any_of(registry().begin(), registry().end(),
                                 [&](const CheckDef& c) { return c.name.starts_with(f); });
    if (!any) throw ConfigError("verify: no check matches '" + f + "'");
  }
  std::vector<const CheckDef*> plan;
  for (const CheckDef& c : registry()) {
    if (selected(c.name, options.checks)) plan.push_back(&c);
  }

  Context ctx(options);
  VerifyReport report;
  report.seed = options.seed;
  report.injection = options.injection;
  report.results.resize(plan.size());
  std::vector<bool> done(plan.size(), false);
  std::size_t next_to_emit = 0;
  std::mutex mutex;

  auto execute = [&](std::size_t i) {
    CheckResult result;
    result.name = std::string(plan[i]->name);
    result.title = std::string(plan[i]->title);
    const auto start = std::chrono::steady_clock::now();
    try {
      Outcome o = plan[i]->run(ctx);
      result.passed = o.passed;
      result.detail = std::move(o.detail);
    } catch (const InstabilityError& e) {
      result.detail = std::string("instability abort: ") + e.what();
    } catch (const std::exception& e) {
      result.detail = std::string("error: ") + e.what();
    }
    result.seconds = elapsed(start);
    std::lock_guard lock(mutex);
    report.results[i] = std::move(result);
    done[i] = true;
    while (next_to_emit < plan.size() && done[next_to_emit]) {
      if (on_result) on_result(report.results[next_to_emit]);
      ++next_to_emit;
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(options.jobs, 1, std::max<std::size_t>(plan.size(), 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < plan.size(); ++i) execute(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < plan.size(); i = next++) execute(i);
      });
    }
  }
  return report;
}

std::string format_result_line(const CheckResult& r) {
  return printf_string("%s  %-30s %-48s (%.2f s)  %s", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.title.c_str(),
                       r.seconds, r.detail.c_str());
}

void write_summary_json(std::ostream& out, const VerifyReport& report) {
  nlohmann::ordered_json j;
  j["seed"] = report.seed;
  j["injection"] = std::string(to_string(report.injection));
  j["passed"] = report.all_passed();
  j["failed"] = report.failed();
  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  for (const CheckResult& r : report.results) {
    checks.push_back({{"name", r.name}, {"title", r.title}, {"passed", r.passed}, {"seconds", r.seconds},
                      {"detail", r.detail}});
  }
  j["checks"] = std::move(checks);
  out << j.dump(2) << '\n';
}

}  // namespace kgstep
