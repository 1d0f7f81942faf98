#pragma once

// Command-line plumbing: scenario files, analytic rows, parameter sweeps and
// scenario-driven simulations.
//
// Scenario files are flat `key = value` text. '#' starts a comment. Physical
// values carry a units-of-m suffix: energies and momenta end in `m`, lengths
// and times in `/m`; counts and labels carry none. Internally everything is
// scaled to m = 1, and `mass` only records the physical size of that unit.

#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgstep/analytic_scattering.hpp"
#include "kgstep/errors.hpp"
#include "kgstep/wavepacket_sim.hpp"

namespace kgstep {

struct Scenario {
  std::string name;
  /// Physical size of the mass unit, reported only.
  double mass_scale = 1.0;
  std::string mass_unit = "m";
  /// In units of m.
  double energy = std::numeric_limits<double>::quiet_NaN();
  double step_height = std::numeric_limits<double>::quiet_NaN();

  // Geometry and packet (units of 1/m).
  double step_position = 0.0;
  double step_smoothing = 0.0;
  std::optional<double> packet_center, packet_width;

  // Grid and time stepping overrides; unset means the make_setup() value.
  std::optional<double> grid_dx, grid_x_min, grid_x_max;
  std::optional<Boundary> grid_boundary;
  std::optional<std::size_t> grid_absorbing_points;
  std::optional<double> grid_absorbing_strength;
  StencilOrder stencil = StencilOrder::Fourth;
  std::optional<double> sim_dt, sim_t_end, sim_measurement_time, sim_cfl_guard, sim_probe_offset;
  std::optional<std::size_t> sim_record_every, sim_snapshot_every;

  // Outputs; empty means not written unless a CLI flag supplies one.
  std::string output_observables;
  std::string output_snapshots;
  std::string output_analytic;

  /// Checks that E and V0 are present and E > m.
  void validate_analytic() const;
  /// validate_analytic() plus everything a simulation needs.
  void validate_simulation() const;
};

/// Keys accepted in scenario files, in documentation order.
std::span<const std::string_view> scenario_keys();

/// Parses scenario text; `source` names the input in error messages.
/// Throws ConfigError naming the line on unknown keys, missing or wrong unit
/// suffixes, duplicates and malformed values.
Scenario parse_scenario(std::string_view text, std::string_view source = "<scenario>");
Scenario load_scenario(const std::filesystem::path& path);

/// Applies one `key=value` assignment (same syntax as a scenario line).
void apply_assignment(Scenario& scenario, std::string_view assignment,
                      std::string_view source = "--set");

/// Simulation setup with scenario overrides applied on top of make_setup().
ScatteringSetup to_setup(const Scenario& scenario);

// Analytic rows ----------------------------------------------------------------

enum class SampleKind { Grid, Endpoint, ThresholdLower, ThresholdUpper, Single };
std::string_view to_string(SampleKind kind);

struct AnalyticRow {
  std::size_t index = 0;
  SampleKind kind = SampleKind::Single;
  ScatteringSolution solution;
  WaveCurrents currents;
  double balance_residual = 0.0;
  std::optional<AntiparticleView> antiparticle;
};

AnalyticRow analytic_row(double energy, double step_height, std::size_t index = 0,
                         SampleKind kind = SampleKind::Single,
                         BranchRule rule = BranchRule::Physical);

std::span<const std::string_view> analytic_columns();
void write_analytic(std::ostream& out, std::span<const AnalyticRow> rows);

// Sweeps -------------------------------------------------------------------------

enum class SweepAxis { StepHeight, Energy };

struct SweepSpec {
  SweepAxis axis = SweepAxis::StepHeight;
  double lo = 0.0;
  double hi = 1.0;
  std::size_t steps = 2;
  /// Value of the parameter that is not swept (units of m).
  double fixed = 0.0;

  void validate() const;
};

struct SweepSample {
  double value;
  SampleKind kind;
};

/// steps evenly spaced values over [lo, hi] plus every in-range threshold
/// (V0 = E -/+ m, or E = V0 +/- m), sorted ascending without duplicates.
/// Thresholds are placed so that E - V0 = +/-m holds exactly.
std::vector<SweepSample> sweep_samples(const SweepSpec& spec);

/// Evaluates every sample on up to `jobs` threads; rows come back in sample
/// order. A failing sample throws SweepError carrying its index.
std::vector<AnalyticRow> run_sweep(const SweepSpec& spec, std::size_t jobs = 1);

class SweepError : public ConfigError {
 public:
  SweepError(std::size_t index, const std::string& what);
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

}  // namespace kgstep
