#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <unordered_set>

#include "kgstep/cli_sweep.hpp"
#include "kgstep/errors.hpp"

namespace kgstep {

namespace {

enum class Unit { Energy, Length, Count, Ratio, Label, Scale };

std::string_view suffix_of(Unit unit) {
  switch (unit) {
    case Unit::Energy: return "m";
    case Unit::Length: return "/m";
    default: return "";
  }
}

struct Value {
  double number = 0.0;
  std::size_t count = 0;
  std::string text;
};

struct KeySpec {
  std::string_view key;
  Unit unit;
  std::function<void(Scenario&, const Value&)> set;
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

Boundary parse_boundary(const std::string& text) {
  if (text == "periodic") return Boundary::Periodic;
  if (text == "absorbing") return Boundary::Absorbing;
  throw ConfigError("expected 'periodic' or 'absorbing', got '" + text + "'");
}

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = {
      {"name", Unit::Label, [](Scenario& s, const Value& v) { s.name = v.text; }},
      {"mass", Unit::Scale,
       [](Scenario& s, const Value& v) {
         s.mass_scale = v.number;
         s.mass_unit = v.text.empty() ? "m" : v.text;
       }},
      {"energy", Unit::Energy, [](Scenario& s, const Value& v) { s.energy = v.number; }},
      {"step_height", Unit::Energy, [](Scenario& s, const Value& v) { s.step_height = v.number; }},
      {"step_position", Unit::Length, [](Scenario& s, const Value& v) { s.step_position = v.number; }},
      {"step_smoothing", Unit::Length, [](Scenario& s, const Value& v) { s.step_smoothing = v.number; }},
      {"packet.center", Unit::Length, [](Scenario& s, const Value& v) { s.packet_center = v.number; }},
      {"packet.width", Unit::Length, [](Scenario& s, const Value& v) { s.packet_width = v.number; }},
      {"grid.dx", Unit::Length, [](Scenario& s, const Value& v) { s.grid_dx = v.number; }},
      {"grid.x_min", Unit::Length, [](Scenario& s, const Value& v) { s.grid_x_min = v.number; }},
      {"grid.x_max", Unit::Length, [](Scenario& s, const Value& v) { s.grid_x_max = v.number; }},
      {"grid.boundary", Unit::Label,
       [](Scenario& s, const Value& v) { s.grid_boundary = parse_boundary(v.text); }},
      {"grid.absorbing_points", Unit::Count,
       [](Scenario& s, const Value& v) { s.grid_absorbing_points = v.count; }},
      {"grid.absorbing_strength", Unit::Energy,
       [](Scenario& s, const Value& v) { s.grid_absorbing_strength = v.number; }},
      {"grid.stencil", Unit::Count,
       [](Scenario& s, const Value& v) {
         if (v.count != 2 && v.count != 4) throw ConfigError("stencil order must be 2 or 4");
         s.stencil = v.count == 2 ? StencilOrder::Second : StencilOrder::Fourth;
       }},
      {"sim.dt", Unit::Length, [](Scenario& s, const Value& v) { s.sim_dt = v.number; }},
      {"sim.t_end", Unit::Length, [](Scenario& s, const Value& v) { s.sim_t_end = v.number; }},
      {"sim.measurement_time", Unit::Length,
       [](Scenario& s, const Value& v) { s.sim_measurement_time = v.number; }},
      {"sim.cfl_guard", Unit::Ratio, [](Scenario& s, const Value& v) { s.sim_cfl_guard = v.number; }},
      {"sim.probe_offset", Unit::Length, [](Scenario& s, const Value& v) { s.sim_probe_offset = v.number; }},
      {"sim.record_every", Unit::Count, [](Scenario& s, const Value& v) { s.sim_record_every = v.count; }},
      {"sim.snapshot_every", Unit::Count,
       [](Scenario& s, const Value& v) { s.sim_snapshot_every = v.count; }},
      {"output.observables", Unit::Label, [](Scenario& s, const Value& v) { s.output_observables = v.text; }},
      {"output.snapshots", Unit::Label, [](Scenario& s, const Value& v) { s.output_snapshots = v.text; }},
      {"output.analytic", Unit::Label, [](Scenario& s, const Value& v) { s.output_analytic = v.text; }},
  };
  return table;
}

const KeySpec* find_key(std::string_view key) {
  for (const KeySpec& spec : key_table()) {
    if (spec.key == key) return &spec;
  }
  return nullptr;
}

Value parse_value(const KeySpec& spec, std::string_view raw) {
  Value v;
  if (spec.unit == Unit::Label) {
    if (raw.empty()) throw ConfigError("empty value");
    v.text = std::string(raw);
    return v;
  }
  if (spec.unit == Unit::Count) {
    const auto res = std::from_chars(raw.data(), raw.data() + raw.size(), v.count);
    if (res.ec != std::errc{} || res.ptr != raw.data() + raw.size()) {
      throw ConfigError("expected a non-negative integer, got '" + std::string(raw) + "'");
    }
    return v;
  }
  const auto res = std::from_chars(raw.data(), raw.data() + raw.size(), v.number);
  if (res.ec != std::errc{}) throw ConfigError("expected a number, got '" + std::string(raw) + "'");
  if (!std::isfinite(v.number)) throw ConfigError("value must be finite");
  const std::string_view rest = trim(raw.substr(static_cast<std::size_t>(res.ptr - raw.data())));
  if (spec.unit == Unit::Scale) {
    v.text = std::string(rest);
    if (!(v.number > 0.0)) throw ConfigError("mass must be positive");
    return v;
  }
  const std::string_view want = suffix_of(spec.unit);
  if (rest != want) {
    if (want.empty()) throw ConfigError("dimensionless value takes no unit suffix, got '" + std::string(rest) + "'");
    throw ConfigError("missing or wrong unit suffix: expected '" + std::string(want) + "' (units of " +
                      (want == "m" ? std::string("m") : std::string("1/m")) + "), got '" +
                      std::string(rest) + "'");
  }
  return v;
}

void assign(Scenario& scenario, std::string_view line, std::string_view where,
            std::unordered_set<std::string>* seen) {
  const auto eq = line.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError(std::string(where) + ": expected 'key = value', got '" + std::string(line) + "'");
  }
  const std::string key(trim(line.substr(0, eq)));
  const std::string_view raw = trim(line.substr(eq + 1));
  const KeySpec* spec = find_key(key);
  if (spec == nullptr) throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
  if (seen != nullptr && !seen->insert(key).second) {
    throw ConfigError(std::string(where) + ": duplicate key '" + key + "'");
  }
  try {
    spec->set(scenario, parse_value(*spec, raw));
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(where) + ": " + key + ": " + e.what());
  }
}

}  // namespace

std::span<const std::string_view> scenario_keys() {
  static const std::vector<std::string_view> keys = [] {
    std::vector<std::string_view> out;
    for (const KeySpec& spec : key_table()) out.push_back(spec.key);
    return out;
  }();
  return keys;
}

Scenario parse_scenario(std::string_view text, std::string_view source) {
  Scenario scenario;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    assign(scenario, line, std::string(source) + ":" + std::to_string(line_no), &seen);
  }
  return scenario;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  Scenario s = parse_scenario(buf.str(), path.string());
  if (s.name.empty()) s.name = path.stem().string();
  return s;
}

void apply_assignment(Scenario& scenario, std::string_view assignment, std::string_view source) {
  assign(scenario, trim(assignment), source, nullptr);
}

void Scenario::validate_analytic() const {
  if (std::isnan(energy)) throw ConfigError("scenario: missing key 'energy'");
  if (std::isnan(step_height)) throw ConfigError("scenario: missing key 'step_height'");
  if (!(energy > 1.0)) {
    throw ConfigError("scenario: energy must exceed the rest mass (energy > 1 m) for a propagating incident wave");
  }
}

void Scenario::validate_simulation() const {
  validate_analytic();
  if (step_smoothing < 0.0) throw ConfigError("scenario: step_smoothing must be >= 0");
  if (packet_width && !(*packet_width > 0.0)) throw ConfigError("scenario: packet.width must be positive");
  if (grid_dx && !(*grid_dx > 0.0)) throw ConfigError("scenario: grid.dx must be positive");
  if (grid_x_min && grid_x_max && !(*grid_x_min < *grid_x_max)) {
    throw ConfigError("scenario: grid.x_min must be below grid.x_max");
  }
  if (sim_dt && !(*sim_dt > 0.0)) throw ConfigError("scenario: sim.dt must be positive");
  if (sim_t_end && !(*sim_t_end > 0.0)) throw ConfigError("scenario: sim.t_end must be positive");
  if (sim_record_every && *sim_record_every == 0) throw ConfigError("scenario: sim.record_every must be >= 1");
}

ScatteringSetup to_setup(const Scenario& s) {
  s.validate_simulation();
  SetupRecipe recipe;
  recipe.energy = s.energy;
  recipe.step_height = s.step_height;
  recipe.x_step = s.step_position;
  recipe.smoothing_width = s.step_smoothing;
  if (s.packet_width) recipe.sigma_x = *s.packet_width;
  if (s.grid_dx) recipe.dx = *s.grid_dx;
  recipe.order = s.stencil;
  ScatteringSetup setup = make_setup(recipe);

  if (s.packet_center) setup.packet.x0 = *s.packet_center;
  SimConfig& sim = setup.sim;
  if (s.grid_x_min || s.grid_x_max) {
    const double lo = s.grid_x_min.value_or(sim.grid.x_min);
    const double hi = s.grid_x_max.value_or(sim.grid.x_max());
    if (!(lo < hi)) throw ConfigError("scenario: grid.x_min must be below grid.x_max");
    sim.grid = Grid1D::spanning(lo, hi, sim.grid.dx);
  }
  if (s.grid_boundary) sim.grid.boundary = *s.grid_boundary;
  if (s.grid_absorbing_points) sim.grid.absorbing_points = *s.grid_absorbing_points;
  if (s.grid_absorbing_strength) sim.grid.absorbing_strength = *s.grid_absorbing_strength;
  if (sim.grid.boundary == Boundary::Absorbing) {
    if (!s.grid_absorbing_points) sim.grid.absorbing_points = 400;
    if (!s.grid_absorbing_strength) sim.grid.absorbing_strength = 0.5;
  }
  if (s.sim_dt) sim.dt = *s.sim_dt;
  if (s.sim_t_end) sim.t_end = *s.sim_t_end;
  if (s.sim_measurement_time) sim.measurement_time = *s.sim_measurement_time;
  if (s.sim_cfl_guard) sim.cfl_guard = *s.sim_cfl_guard;
  if (s.sim_probe_offset) sim.probe_offset = *s.sim_probe_offset;
  if (s.sim_record_every) sim.record_every = *s.sim_record_every;
  if (s.sim_snapshot_every) sim.snapshot_every = *s.sim_snapshot_every;

  setup.validate();
  sim.grid.validate();
  sim.validate(setup.mass, std::abs(setup.step.height));
  return setup;
}

}  // namespace kgstep
