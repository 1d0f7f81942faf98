#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "kgstep/cli_sweep.hpp"
#include "kgstep/csv.hpp"
#include "kgstep/errors.hpp"

namespace kgstep {

std::string_view to_string(SampleKind kind) {
  switch (kind) {
    case SampleKind::Grid: return "grid";
    case SampleKind::Endpoint: return "endpoint";
    case SampleKind::ThresholdLower: return "threshold_lower";
    case SampleKind::ThresholdUpper: return "threshold_upper";
    case SampleKind::Single: return "single";
  }
  return "?";
}

AnalyticRow analytic_row(double energy, double step_height, std::size_t index, SampleKind kind,
                         BranchRule rule) {
  AnalyticRow row;
  row.index = index;
  row.kind = kind;
  row.solution = solve_step(ParticleParams::from_energy(energy, 1.0), step_height, rule);
  row.currents = wave_currents(row.solution);
  row.balance_residual = check_current_balance(row.solution);
  if (row.solution.regime == Regime::Klein) row.antiparticle = antiparticle_relabel(row.solution);
  return row;
}

namespace {

constexpr std::array<std::string_view, 25> kAnalyticColumns{
    "index",      "sample_kind", "E",          "V0",          "regime",
    "attractive_step", "p",      "p_prime",    "q",           "v_group",
    "b_over_a_re", "b_over_a_im", "bprime_over_a_re", "bprime_over_a_im", "R",
    "rho_i",      "rho_r",       "rho_t",      "j_i",         "j_r",
    "j_t",        "balance_residual", "E_c",   "p_c",         "antiparticle_direction"};

}  // namespace

std::span<const std::string_view> analytic_columns() { return kAnalyticColumns; }

void write_analytic(std::ostream& out, std::span<const AnalyticRow> rows) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  CsvWriter csv(out, analytic_columns());
  for (const AnalyticRow& r : rows) {
    const ScatteringSolution& s = r.solution;
    const WaveCurrents& w = r.currents;
    const double vg = std::isnan(s.p_prime) || is_threshold(s.regime)
                          ? nan
                          : group_velocity(s.p_prime, s.params.energy, s.step_height, s.params.mass);
    csv.row() << r.index << to_string(r.kind) << s.params.energy << s.step_height << to_string(s.regime)
              << std::string_view(s.attractive() ? "true" : "false") << s.params.momentum
              << s.p_prime << s.decay_rate << vg << s.b_over_a.real() << s.b_over_a.imag()
              << s.bprime_over_a.real() << s.bprime_over_a.imag() << s.reflectivity << w.rho_i << w.rho_r
              << w.rho_t << w.j_i << w.j_r << w.j_t << r.balance_residual
              << (r.antiparticle ? r.antiparticle->energy : nan)
              << (r.antiparticle ? r.antiparticle->momentum : nan)
              << (r.antiparticle ? static_cast<double>(r.antiparticle->direction) : nan);
  }
}

void SweepSpec::validate() const {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
    throw ConfigError("sweep: range needs LO < HI, got " + std::to_string(lo) + ":" + std::to_string(hi));
  }
  if (steps < 2) throw ConfigError("sweep: steps must be >= 2");
  if (!std::isfinite(fixed)) throw ConfigError("sweep: the fixed parameter must be finite");
}

std::vector<SweepSample> sweep_samples(const SweepSpec& spec) {
  spec.validate();
  std::vector<SweepSample> samples;
  samples.reserve(spec.steps + 2);
  const double span = spec.hi - spec.lo;
  for (std::size_t i = 0; i < spec.steps; ++i) {
    const bool end = i == 0 || i + 1 == spec.steps;
    const double v = i + 1 == spec.steps
                         ? spec.hi
                         : spec.lo + span * static_cast<double>(i) / static_cast<double>(spec.steps - 1);
    samples.push_back({v, end ? SampleKind::Endpoint : SampleKind::Grid});
  }

  std::vector<SweepSample> thresholds;
  if (spec.axis == SweepAxis::StepHeight) {
    thresholds.push_back({threshold_step_height(spec.fixed, 1.0, Regime::ThresholdLower),
                          SampleKind::ThresholdLower});
    thresholds.push_back({threshold_step_height(spec.fixed, 1.0, Regime::ThresholdUpper),
                          SampleKind::ThresholdUpper});
  } else {
    thresholds.push_back({threshold_energy(spec.fixed, 1.0, Regime::ThresholdLower),
                          SampleKind::ThresholdLower});
    thresholds.push_back({threshold_energy(spec.fixed, 1.0, Regime::ThresholdUpper),
                          SampleKind::ThresholdUpper});
  }

  // A grid value within rounding of a threshold is replaced by the exact one.
  const double merge = 1e-12 * std::max({std::abs(spec.lo), std::abs(spec.hi), 1.0});
  for (const SweepSample& t : thresholds) {
    if (t.value < spec.lo - merge || t.value > spec.hi + merge) continue;
    auto near = std::find_if(samples.begin(), samples.end(),
                             [&](const SweepSample& s) { return std::abs(s.value - t.value) <= merge; });
    if (near != samples.end()) {
      *near = t;
    } else {
      samples.push_back(t);
    }
  }
  std::sort(samples.begin(), samples.end(),
            [](const SweepSample& a, const SweepSample& b) { return a.value < b.value; });
  return samples;
}

SweepError::SweepError(std::size_t index, const std::string& what)
    : ConfigError("sweep row " + std::to_string(index) + ": " + what), index_(index) {}

std::vector<AnalyticRow> run_sweep(const SweepSpec& spec, std::size_t jobs) {
  const std::vector<SweepSample> samples = sweep_samples(spec);
  std::vector<AnalyticRow> rows(samples.size());
  std::vector<std::exception_ptr> errors(samples.size());

  auto evaluate = [&](std::size_t i) {
    try {
      const double e = spec.axis == SweepAxis::Energy ? samples[i].value : spec.fixed;
      const double v = spec.axis == SweepAxis::StepHeight ? samples[i].value : spec.fixed;
      rows[i] = analytic_row(e, v, i, samples[i].kind);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(jobs, 1, samples.size());
  if (workers == 1) {
    for (std::size_t i = 0; i < samples.size(); ++i) evaluate(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < samples.size(); i = next++) evaluate(i);
      });
    }
  }

  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      throw SweepError(i, e.what());
    }
  }
  return rows;
}

}  // namespace kgstep
