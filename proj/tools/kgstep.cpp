// kgstep: analytic step scattering, parameter sweeps, packet simulations and
// the verification suite for the 1D Klein-Gordon equation.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kgstep/cli_sweep.hpp"
#include "kgstep/csv.hpp"
#include "kgstep/errors.hpp"
#include "kgstep/verification.hpp"

namespace {

using namespace kgstep;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitVerification = 4;

// Relative agreement between simulated and plane-wave R reported by simulate.
constexpr double kAgreementTolerance = 0.02;

struct Common {
  std::string scenario_path;
  std::vector<std::string> assignments;
  std::string out;
};

Scenario load(const Common& c, bool required) {
  Scenario s;
  if (!c.scenario_path.empty()) {
    s = load_scenario(c.scenario_path);
  } else if (required) {
    throw ConfigError("--scenario FILE is required");
  }
  for (const std::string& a : c.assignments) apply_assignment(s, a);
  return s;
}

/// Output stream for --out (or a scenario default); stdout when both are empty.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw ConfigError("cannot open output file " + path);
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }
  bool to_stdout() const { return !file_; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

int cmd_analytic(const Common& c) {
  Scenario s = load(c, false);
  s.validate_analytic();
  const AnalyticRow row = analytic_row(s.energy, s.step_height);
  Output out(c.out.empty() ? s.output_analytic : c.out);
  write_analytic(out.stream(), std::span<const AnalyticRow>(&row, 1));
  return kExitOk;
}

std::pair<double, double> parse_range(const std::string& text) {
  const auto colon = text.find(':', 1);
  if (colon == std::string::npos) throw ConfigError("--range expects LO:HI, got '" + text + "'");
  try {
    std::size_t used_lo = 0, used_hi = 0;
    const double lo = std::stod(text.substr(0, colon), &used_lo);
    const double hi = std::stod(text.substr(colon + 1), &used_hi);
    if (used_lo != colon || used_hi != text.size() - colon - 1) throw std::invalid_argument("trailing text");
    return {lo, hi};
  } catch (const std::logic_error&) {
    throw ConfigError("--range expects numeric LO:HI, got '" + text + "'");
  }
}

int cmd_sweep(const Common& c, const std::string& axis, const std::string& range, std::size_t steps,
              std::size_t jobs) {
  const Scenario s = load(c, false);
  SweepSpec spec;
  if (axis == "V0") {
    spec.axis = SweepAxis::StepHeight;
    if (std::isnan(s.energy)) throw ConfigError("sweep over V0 needs a fixed energy (scenario key 'energy')");
    spec.fixed = s.energy;
  } else if (axis == "E") {
    spec.axis = SweepAxis::Energy;
    if (std::isnan(s.step_height)) {
      throw ConfigError("sweep over E needs a fixed step height (scenario key 'step_height')");
    }
    spec.fixed = s.step_height;
  } else {
    throw ConfigError("--axis must be V0 or E, got '" + axis + "'");
  }
  std::tie(spec.lo, spec.hi) = parse_range(range);
  spec.steps = steps;
  const std::vector<AnalyticRow> rows = run_sweep(spec, jobs);
  Output out(c.out.empty() ? s.output_analytic : c.out);
  write_analytic(out.stream(), rows);
  return kExitOk;
}

int cmd_simulate(const Common& c, const std::string& snapshots_flag) {
  const Scenario s = load(c, true);
  const ScatteringSetup setup = to_setup(s);
  const std::string observables = c.out.empty() ? s.output_observables : c.out;
  const std::string snapshots = snapshots_flag.empty() ? s.output_snapshots : snapshots_flag;

  ScatteringSetup run_setup = setup;
  std::optional<SnapshotDirectory> snapshot_dir;
  SnapshotSink sink;
  if (!snapshots.empty()) {
    if (run_setup.sim.snapshot_every == 0) run_setup.sim.snapshot_every = run_setup.sim.record_every;
    snapshot_dir.emplace(snapshots, run_setup.sim.order);
    sink = [&](const FVState& state, std::size_t index) { (*snapshot_dir)(state, index); };
  }
  Output obs(observables);  // opened before the run so a bad path fails fast

  const SimConfig& sim = run_setup.sim;
  std::ostream& log = obs.to_stdout() ? std::cerr : std::cout;
  log << "scenario " << (s.name.empty() ? "<unnamed>" : s.name) << ": E=" << format_number(setup.energy)
      << " m, V0=" << format_number(setup.step.height) << " m, regime "
      << to_string(classify_regime(setup.energy, setup.step.height, 1.0)) << " (mass unit "
      << format_number(s.mass_scale) << " " << s.mass_unit << ")\n"
      << "grid: n=" << sim.grid.n << " dx=" << format_number(sim.grid.dx) << "/m x=["
      << format_number(sim.grid.x_min) << ", " << format_number(sim.grid.x_max()) << "]/m, dt="
      << format_number(sim.dt) << "/m, steps=" << sim.steps() << ", packet sigma="
      << format_number(setup.packet.sigma_x) << "/m p0=" << format_number(setup.packet.p0) << " m\n";

  const ScatteringRun run = run_scattering(run_setup, sink);
  if (snapshot_dir) snapshot_dir->finish();
  write_observables(obs.stream(), run.records);

  const PacketMeasurement& m = run.measurement;
  const double r_analytic = run.analytic.reflectivity;
  const double diff = std::abs(m.reflectivity - r_analytic);
  const bool agree = diff <= kAgreementTolerance * r_analytic + 1e-6;
  double drift = 0.0;
  for (const ObservableRecord& r : run.records) {
    drift = std::max(drift, std::abs(r.q_total - run.records.front().q_total) / std::abs(run.records.front().q_total));
  }
  log << "R_measured=" << format_number(m.reflectivity) << " R_analytic=" << format_number(r_analytic)
      << " |diff|=" << format_number(diff) << " -> "
      << (agree ? "agrees" : "DISAGREES") << " (tolerance 2% of R_analytic + 1e-6)\n"
      << "T=|Q_right|/Q_incident=" << format_number(m.transmission) << " Q_right="
      << format_number(m.q_right) << " sign=" << (m.q_right < 0.0 ? "negative (antiparticle-dominant)" : "non-negative")
      << " R+Q_right/Q_incident-1=" << format_number(m.balance_defect) << '\n'
      << "charge drift=" << format_number(drift) << " runtime=" << format_number(run.seconds) << " s";
  if (snapshot_dir) log << " snapshots=" << snapshot_dir->count();
  log << '\n';
  return kExitOk;
}

int cmd_verify(const VerifyOptions& options, const std::string& summary_path, bool list) {
  if (list) {
    for (const CheckInfo& c : list_checks()) std::cout << c.name << "  " << c.title << '\n';
    return kExitOk;
  }
  std::cout << "seed=" << options.seed << " injection=" << to_string(options.injection)
            << " jobs=" << options.jobs << '\n';
  const VerifyReport report = run_verification(options, [](const CheckResult& r) {
    std::cout << format_result_line(r) << std::endl;
  });
  const std::vector<std::string> failed = report.failed();
  std::cout << "summary: " << report.results.size() - failed.size() << "/" << report.results.size() << " passed";
  if (!failed.empty()) {
    std::cout << "; failed:";
    for (const std::string& f : failed) std::cout << ' ' << f;
  }
  std::cout << '\n';
  if (!summary_path.empty()) {
    Output out(summary_path);
    write_summary_json(out.stream(), report);
  }
  return failed.empty() ? kExitOk : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Klein-Gordon potential-step scattering: analytic solutions, sweeps, packet simulations"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub, bool with_out) {
    sub->add_option("--scenario", common.scenario_path, "Scenario file (key = value, units of m)");
    sub->add_option("--set", common.assignments, "Override a scenario key: --set energy=1.25m")
        ->allow_extra_args(false);
    if (with_out) sub->add_option("--out", common.out, "Output file (default: stdout)");
  };

  CLI::App* analytic = app.add_subcommand("analytic", "Plane-wave solution for one (E, V0) as a CSV row");
  add_common(analytic, true);

  CLI::App* sweep = app.add_subcommand("sweep", "Analytic rows across a range of V0 or E");
  add_common(sweep, true);
  std::string axis = "V0", range;
  std::size_t steps = 101, jobs = 1;
  sweep->add_option("--axis", axis, "Swept parameter: V0 or E")->capture_default_str();
  sweep->add_option("--range", range, "LO:HI in units of m")->required();
  sweep->add_option("--steps", steps, "Evenly spaced samples (>= 2); thresholds are added")->capture_default_str();
  sweep->add_option("--jobs", jobs, "Worker threads")->capture_default_str();

  CLI::App* simulate = app.add_subcommand("simulate", "Packet simulation; observables CSV and optional snapshots");
  add_common(simulate, true);
  std::string snapshots;
  simulate->add_option("--snapshots", snapshots, "Directory for field snapshots");

  CLI::App* verify = app.add_subcommand("verify", "Run module invariants and acceptance criteria");
  VerifyOptions vopt;
  std::string inject = "none", summary;
  bool list = false;
  verify->add_option("--seed", vopt.seed, "Seed for randomized checks")->capture_default_str();
  verify->add_option("--jobs", vopt.jobs, "Checks run concurrently")->capture_default_str();
  verify->add_option("--checks", vopt.checks, "Run only checks whose name starts with one of these")
      ->delimiter(',');
  verify->add_option("--inject", inject, "Test hook: none, flip-branch, unstable-dt")->capture_default_str();
  verify->add_option("--out", summary, "Write a JSON summary here");
  verify->add_flag("--list", list, "List checks and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*analytic) return cmd_analytic(common);
    if (*sweep) return cmd_sweep(common, axis, range, steps, jobs);
    if (*simulate) return cmd_simulate(common, snapshots);
    vopt.injection = parse_injection(inject);
    return cmd_verify(vopt, summary, list);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InstabilityError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const MeasurementError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}
