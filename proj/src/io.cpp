#include "tumblenav/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace tumblenav {

namespace {

constexpr double kUnitNormTolerance = 1e-6;

void write_row(std::ostream& os, const std::vector<double>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) os << (i ? "," : "") << format_double(values[i]);
  os << "\n";
}

void write_header(std::ostream& os, const std::vector<std::string>& cols) {
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << "\n";
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

void append(std::vector<double>& row, const Vec3& v) { row.insert(row.end(), v.data(), v.data() + 3); }
void append(std::vector<double>& row, const Quaternion& q) {
  append(row, q.v);
  row.push_back(q.s);
}

Vec3 vec3_at(const std::vector<double>& r, std::size_t i) { return {r[i], r[i + 1], r[i + 2]}; }
Quaternion quat_at(const std::vector<double>& r, std::size_t i) { return {vec3_at(r, i), r[i + 3]}; }

CsvTable read_table(std::istream& is, const std::string& source, const std::vector<std::string>* expected) {
  CsvTable table;
  std::string line;
  if (!std::getline(is, line)) return table;
  table.header = split_csv(strip_cr(line));
  if (expected && table.header != *expected) throw LogError(source, 1, "unexpected header row");

  int number = 1;
  while (std::getline(is, line)) {
    ++number;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != table.header.size())
      throw LogError(source, number, "expected " + std::to_string(table.header.size()) + " columns, got " +
                                         std::to_string(fields.size()));
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || ec != std::errc() || ptr != f.data() + f.size())
        throw LogError(source, number, "'" + f + "' is not a number");
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
    table.lines.push_back(number);
  }
  return table;
}

template <typename T>
std::vector<T> load(const std::filesystem::path& path, std::vector<T> (*reader)(std::istream&, const std::string&)) {
  std::ifstream in(path);
  if (!in) throw LogError(path.string(), 0, "cannot open file");
  return reader(in, path.string());
}

}  // namespace

LogError::LogError(const std::string& source, int line, const std::string& message)
    : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + message),
      line_(line) {}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> truth_columns() {
  return {"t",       "q_x",     "q_y",     "q_z",   "q_w",   "omega_x", "omega_y", "omega_z",
          "r_o_x",   "r_o_y",   "r_o_z",   "v_o_x", "v_o_y", "v_o_z"};
}

std::vector<std::string> measurement_columns() {
  return {"t", "r_c_x", "r_c_y", "r_c_z", "mu_x", "mu_y", "mu_z", "mu_w", "valid"};
}

std::vector<std::string> estimate_columns() {
  std::vector<std::string> cols = {"t"};
  const auto add3 = [&cols](const std::string& name) {
    for (const char* axis : {"_x", "_y", "_z"}) cols.push_back(name + axis);
  };
  add3("q");
  cols.push_back("q_w");
  add3("omega");
  add3("p");
  add3("r_o");
  add3("v_o");
  add3("rho_t");
  add3("eta");
  cols.push_back("eta_w");
  cols.push_back("trace_P");
  for (const char* block : {"dq", "omega", "p", "r_o", "v_o", "rho_t", "deta"}) add3(std::string("sd_") + block);
  return cols;
}

void write_truth_csv(std::ostream& os, const std::vector<TruthState>& truth) {
  write_header(os, truth_columns());
  for (const TruthState& x : truth) {
    std::vector<double> row = {x.t};
    append(row, x.q);
    append(row, x.omega);
    append(row, x.r_o);
    append(row, x.v_o);
    write_row(os, row);
  }
}

void write_measurements_csv(std::ostream& os, const std::vector<PoseMeasurement>& log) {
  write_header(os, measurement_columns());
  for (const PoseMeasurement& m : log) {
    std::vector<double> row = {m.t};
    append(row, m.r_c);
    append(row, m.mu);
    row.push_back(m.valid ? 1.0 : 0.0);
    write_row(os, row);
  }
}

void write_estimate_csv(std::ostream& os, const std::vector<FilterRecord>& records) {
  write_header(os, estimate_columns());
  for (const FilterRecord& r : records) {
    const FilterState& s = r.state;
    std::vector<double> row = {s.t};
    append(row, s.q_nom);
    append(row, s.omega);
    append(row, s.p);
    append(row, s.r_o);
    append(row, s.v_o);
    append(row, s.rho_t);
    append(row, s.eta_nom);
    row.push_back(s.P.trace());
    for (int i = 0; i < kStateDim; ++i) row.push_back(std::sqrt(std::max(s.P(i, i), 0.0)));
    write_row(os, row);
  }
}

std::vector<PoseMeasurement> read_measurements_csv(std::istream& is, const std::string& source) {
  const std::vector<std::string> cols = measurement_columns();
  const CsvTable table = read_table(is, source, &cols);
  std::vector<PoseMeasurement> out;
  out.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    PoseMeasurement m;
    m.t = r[0];
    m.r_c = vec3_at(r, 1);
    m.mu = quat_at(r, 4);
    if (r[8] != 0.0 && r[8] != 1.0) throw LogError(source, table.lines[i], "valid must be 0 or 1");
    m.valid = r[8] == 1.0;
    if (!std::isfinite(m.t)) throw LogError(source, table.lines[i], "timestamp is not finite");
    if (!out.empty() && !(m.t > out.back().t))
      throw LogError(source, table.lines[i], "timestamp " + format_double(m.t) + " does not increase (previous " +
                                             format_double(out.back().t) + ")");
    if (m.valid) {
      if (!m.r_c.allFinite() || !m.mu.is_finite()) throw LogError(source, table.lines[i], "non-finite pose");
      if (std::abs(m.mu.norm() - 1.0) > kUnitNormTolerance) throw LogError(source, table.lines[i], "mu is not unit norm");
    }
    out.push_back(m);
  }
  return out;
}

std::vector<PoseMeasurement> load_measurements(const std::filesystem::path& path) {
  return load<PoseMeasurement>(path, &read_measurements_csv);
}

std::vector<TruthState> read_truth_csv(std::istream& is, const std::string& source) {
  const std::vector<std::string> cols = truth_columns();
  const CsvTable table = read_table(is, source, &cols);
  std::vector<TruthState> out;
  out.reserve(table.rows.size());
  for (const auto& r : table.rows) {
    TruthState x;
    x.t = r[0];
    x.q = quat_at(r, 1);
    x.omega = vec3_at(r, 5);
    x.r_o = vec3_at(r, 8);
    x.v_o = vec3_at(r, 11);
    out.push_back(x);
  }
  return out;
}

std::vector<TruthState> load_truth(const std::filesystem::path& path) {
  return load<TruthState>(path, &read_truth_csv);
}

CsvTable read_csv_table(std::istream& is, const std::string& source) { return read_table(is, source, nullptr); }

TraceSummary summarize(const FilterTrace& trace) {
  TraceSummary s;
  s.records = static_cast<int>(trace.records.size());
  s.updates = trace.updates;
  s.gated = trace.gated;
  s.invalid = trace.invalid;
  s.divergence_warnings = trace.divergence_warnings;
  s.diverged = trace.diverged;
  double nis = 0.0;
  int n = 0;
  for (const FilterRecord& r : trace.records) {
    if (r.status != UpdateStatus::applied) continue;
    nis += r.nis;
    ++n;
  }
  s.mean_nis = n ? nis / n : std::numeric_limits<double>::quiet_NaN();
  return s;
}

std::string metrics_json(const TraceSummary& summary, const RunMetrics* metrics, const Scenario& scenario,
                         const std::vector<double>& sample_times) {
  nlohmann::ordered_json j;
  j["seed"] = scenario.seed;
  j["duration_s"] = scenario.duration;
  j["filter_start_s"] = scenario.filter_start;
  j["records"] = summary.records;
  j["updates"] = summary.updates;
  j["gated"] = summary.gated;
  j["invalid"] = summary.invalid;
  j["divergence_warnings"] = summary.divergence_warnings;
  j["diverged"] = summary.diverged;
  j["mean_nis"] = summary.mean_nis;

  if (metrics) {
    const RunMetrics& m = *metrics;
    j["convergence_time_s"] = m.convergence_time_s;
    j["rms_attitude_deg"] = m.rms_attitude_deg;
    j["rms_por_attitude_deg"] = m.rms_por_attitude_deg;
    j["rms_por_position_m"] = m.rms_por_position_m;
    j["rms_omega_rad_s"] = m.rms_omega_rad_s;
    j["rms_p_rel"] = m.rms_p_rel;

    const double nan = std::numeric_limits<double>::quiet_NaN();
    const Vec3 nan3 = Vec3::Constant(nan);
    const Vec3 p = m.at_parameter_check ? m.at_parameter_check->p : nan3;
    const Vec3 rho = m.at_parameter_check ? m.at_parameter_check->rho_t : nan3;
    const char* axes[] = {"x", "y", "z"};
    j["parameter_check_s"] = scenario.parameter_check_time;
    for (int i = 0; i < 3; ++i) j[std::string("p_at_check_") + axes[i]] = p[i];
    for (int i = 0; i < 3; ++i) j[std::string("rho_t_at_check_") + axes[i] + "_m"] = rho[i];

    j["occlusion_end_t"] = m.occlusion_end ? m.occlusion_end->t : nan;
    j["occlusion_end_position_error_m"] = m.occlusion_end ? m.occlusion_end->position_error_m : nan;
    j["occlusion_end_attitude_error_deg"] = m.occlusion_end ? m.occlusion_end->attitude_error_deg : nan;

    double nees = 0.0;
    int n = 0;
    for (double v : m.nees) {
      if (!std::isfinite(v)) continue;
      nees += v;
      ++n;
    }
    j["mean_nees"] = n ? nees / n : nan;

    j["nees_t"] = sample_times;
    j["nees"] = m.nees;
    std::vector<double> ot, op, oa;
    for (const OcclusionSample& o : m.occlusion_errors) {
      ot.push_back(o.t);
      op.push_back(o.position_error_m);
      oa.push_back(o.attitude_error_deg);
    }
    j["occlusion_t"] = ot;
    j["occlusion_position_error_m"] = op;
    j["occlusion_attitude_error_deg"] = oa;
  }
  return j.dump(2) + "\n";
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

}  // namespace tumblenav
