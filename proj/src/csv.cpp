#include "kgstep/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "kgstep/errors.hpp"

namespace kgstep {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) return "0";  // no "-0"
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                                 std::chars_format::general, kCsvSignificantDigits);
  return std::string(buf.data(), res.ptr);
}

CsvWriter::CsvWriter(std::ostream& out, std::span<const std::string_view> columns)
    : out_(out), columns_(columns.size()) {
  std::vector<std::string> header(columns.begin(), columns.end());
  emit(header);
  rows_ = 0;
}

void CsvWriter::emit(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) {
    throw std::logic_error("CsvWriter: row has " + std::to_string(cells.size()) + " cells, schema has " +
                           std::to_string(columns_));
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
  ++rows_;
}

CsvWriter::Row& CsvWriter::Row::operator<<(double value) {
  cells_.push_back(format_number(value));
  return *this;
}

CsvWriter::Row& CsvWriter::Row::operator<<(std::string_view text) {
  cells_.emplace_back(text);
  return *this;
}

CsvWriter::Row& CsvWriter::Row::operator<<(std::size_t value) {
  cells_.push_back(std::to_string(value));
  return *this;
}

CsvWriter::Row::~Row() noexcept(false) {
  if (std::uncaught_exceptions() == 0) writer_.emit(cells_);
}

namespace {

constexpr std::array<std::string_view, 8> kObservableColumns{
    "t", "Q_total", "Q_left", "Q_right", "J_probe_left", "J_probe_right", "centroid_right",
    "continuity_residual_max"};
constexpr std::array<std::string_view, 7> kSnapshotColumns{"x",      "re_phi", "im_phi", "re_chi",
                                                           "im_chi", "rho",    "j"};
constexpr std::array<std::string_view, 3> kIndexColumns{"step", "t", "file"};

}  // namespace

std::span<const std::string_view> observable_columns() { return kObservableColumns; }
std::span<const std::string_view> snapshot_columns() { return kSnapshotColumns; }
std::span<const std::string_view> snapshot_index_columns() { return kIndexColumns; }

void write_observables(std::ostream& out, std::span<const ObservableRecord> records) {
  CsvWriter csv(out, observable_columns());
  for (const ObservableRecord& r : records) {
    csv.row() << r.t << r.q_total << r.q_left << r.q_right << r.j_probe_left << r.j_probe_right
              << r.centroid_right << r.continuity_residual_max;
  }
}

void write_snapshot(std::ostream& out, const FVState& state, StencilOrder order) {
  const std::vector<double> rho = charge_density(state);
  const std::vector<double> j = current_density(state, order);
  CsvWriter csv(out, snapshot_columns());
  for (std::size_t k = 0; k < state.grid.n; ++k) {
    csv.row() << state.grid.x(k) << state.phi[k].real() << state.phi[k].imag() << state.chi[k].real()
              << state.chi[k].imag() << rho[k] << j[k];
  }
}

SnapshotDirectory::SnapshotDirectory(std::filesystem::path dir, StencilOrder order)
    : dir_(std::move(dir)), order_(order) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw ConfigError("snapshots: cannot create directory " + dir_.string() + ": " + ec.message());
}

void SnapshotDirectory::operator()(const FVState& state, std::size_t index) {
  char name[32];
  std::snprintf(name, sizeof name, "snap_%06zu.csv", index);
  std::ofstream out(dir_ / name);
  if (!out) throw ConfigError("snapshots: cannot write " + (dir_ / name).string());
  write_snapshot(out, state, order_);
  entries_.push_back(Entry{index, state.t, name});
}

void SnapshotDirectory::finish() {
  if (finished_) return;
  finished_ = true;
  std::ofstream out(dir_ / "index.csv");
  if (!out) throw ConfigError("snapshots: cannot write " + (dir_ / "index.csv").string());
  CsvWriter csv(out, snapshot_index_columns());
  for (const Entry& e : entries_) csv.row() << e.step << e.t << e.file;
}

SnapshotDirectory::~SnapshotDirectory() {
  try {
    finish();
  } catch (...) {
  }
}

}  // namespace kgstep
