#pragma once

// Schema-stable CSV output: fixed column order, a header row, one record per
// line, and locale-independent numbers with 15 significant digits.

#include <filesystem>
#include <initializer_list>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgstep/feshbach_villars.hpp"
#include "kgstep/wavepacket_sim.hpp"

namespace kgstep {

inline constexpr int kCsvSignificantDigits = 15;

/// Shortest general form with 15 significant digits; "nan", "inf", "-inf" for
/// non-finite values. Independent of the global locale.
std::string format_number(double value);

/// Writes the header on construction and checks every row against it.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::span<const std::string_view> columns);

  class Row {
   public:
    Row& operator<<(double value);
    Row& operator<<(std::string_view text);
    Row& operator<<(std::size_t value);
    ~Row() noexcept(false);

   private:
    friend class CsvWriter;
    explicit Row(CsvWriter& writer) : writer_(writer) {}
    CsvWriter& writer_;
    std::vector<std::string> cells_;
  };

  Row row() { return Row(*this); }
  std::size_t rows_written() const { return rows_; }

 private:
  void emit(const std::vector<std::string>& cells);
  std::ostream& out_;
  std::size_t columns_;
  std::size_t rows_ = 0;
};

std::span<const std::string_view> observable_columns();
std::span<const std::string_view> snapshot_columns();
std::span<const std::string_view> snapshot_index_columns();

void write_observables(std::ostream& out, std::span<const ObservableRecord> records);

/// Columns x, Re phi, Im phi, Re chi, Im chi, rho, j (nodal current).
void write_snapshot(std::ostream& out, const FVState& state, StencilOrder order);

/// Streams snapshots as snap_NNNNNN.csv into a directory and keeps an
/// index.csv of (step, t, file).
class SnapshotDirectory {
 public:
  SnapshotDirectory(std::filesystem::path dir, StencilOrder order);
  void operator()(const FVState& state, std::size_t index);
  /// Flushes index.csv; also called by the destructor.
  void finish();
  ~SnapshotDirectory();
  std::size_t count() const { return entries_.size(); }

 private:
  struct Entry {
    std::size_t step;
    double t;
    std::string file;
  };
  std::filesystem::path dir_;
  StencilOrder order_;
  std::vector<Entry> entries_;
  bool finished_ = false;
};

}  // namespace kgstep
