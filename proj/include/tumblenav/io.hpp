#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tumblenav/simulation.hpp"

namespace tumblenav {

/// Malformed CSV input. line() is the 1-based file line (the header is 1).
class LogError : public std::runtime_error {
 public:
  LogError(const std::string& source, int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

/// A double with 17 significant digits, which reads back exactly.
std::string format_double(double v);

std::vector<std::string> truth_columns();
std::vector<std::string> measurement_columns();
/// t, q(4), omega(3), p(3), r_o(3), v_o(3), rho_t(3), eta(4), trace_P, then
/// the 21 marginal standard deviations in error-state order.
std::vector<std::string> estimate_columns();

void write_truth_csv(std::ostream& os, const std::vector<TruthState>& truth);
void write_measurements_csv(std::ostream& os, const std::vector<PoseMeasurement>& log);
void write_estimate_csv(std::ostream& os, const std::vector<FilterRecord>& records);

/// Reads a measurement log. Rejects wrong headers or column counts,
/// non-numeric fields, valid flags other than 0/1, non-unit mu on valid rows
/// and timestamps that do not strictly increase, naming the line.
std::vector<PoseMeasurement> read_measurements_csv(std::istream& is, const std::string& source = "<log>");
std::vector<PoseMeasurement> load_measurements(const std::filesystem::path& path);

std::vector<TruthState> read_truth_csv(std::istream& is, const std::string& source = "<truth>");
std::vector<TruthState> load_truth(const std::filesystem::path& path);

/// Numeric table with a header row, for reading back any of the above.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<int> lines;  // file line of each row
};
CsvTable read_csv_table(std::istream& is, const std::string& source = "<csv>");

/// Summary counts from a filter trace, available without truth.
struct TraceSummary {
  int records = 0;
  int updates = 0;
  int gated = 0;
  int invalid = 0;
  int divergence_warnings = 0;
  bool diverged = false;
  double mean_nis = 0.0;  // over applied updates, NaN when none
};
TraceSummary summarize(const FilterTrace& trace);

/// metrics.json: flat scalars plus arrays. Truth-relative fields are written
/// only when `metrics` is given. NaN is written as null.
std::string metrics_json(const TraceSummary& summary, const RunMetrics* metrics, const Scenario& scenario,
                         const std::vector<double>& sample_times);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace tumblenav
