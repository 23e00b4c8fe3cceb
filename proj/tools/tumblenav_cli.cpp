#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "tumblenav/batch.hpp"
#include "tumblenav/config.hpp"
#include "tumblenav/io.hpp"
#include "tumblenav/validation.hpp"

namespace fs = std::filesystem;
using namespace tumblenav;

namespace {

enum Exit { kOk = 0, kInputError = 1, kDivergence = 2, kValidationFailure = 3 };

template <typename F>
void write_file(const fs::path& path, F&& writer) {
  std::ostringstream os;
  writer(os);
  write_text_file(path, os.str());
}

std::vector<FilterRecord> estimates(const RunResult& r) {
  std::vector<FilterRecord> out;
  for (const Sample& s : r.samples)
    if (s.estimate) out.push_back(*s.estimate);
  return out;
}

std::vector<double> times(const RunResult& r) {
  std::vector<double> t;
  for (const Sample& s : r.samples) t.push_back(s.t);
  return t;
}

void write_run(const RunResult& r, const fs::path& out) {
  fs::create_directories(out);
  std::vector<TruthState> truth;
  std::vector<PoseMeasurement> log;
  FilterTrace trace;
  for (const Sample& s : r.samples) {
    truth.push_back(s.truth);
    log.push_back(s.measurement);
  }
  trace.records = estimates(r);
  trace.updates = r.metrics.updates;
  trace.gated = r.metrics.gated;
  trace.invalid = r.metrics.invalid;
  trace.divergence_warnings = r.metrics.divergence_warnings;
  trace.diverged = r.metrics.diverged;

  write_file(out / "truth.csv", [&](std::ostream& os) { write_truth_csv(os, truth); });
  write_file(out / "measurements.csv", [&](std::ostream& os) { write_measurements_csv(os, log); });
  write_file(out / "estimate.csv", [&](std::ostream& os) { write_estimate_csv(os, trace.records); });
  write_text_file(out / "metrics.json", metrics_json(summarize(trace), &r.metrics, r.scenario, times(r)));
  write_text_file(out / "scenario.cfg", format_config(r.scenario));
}

void report(const RunResult& r) {
  const RunMetrics& m = r.metrics;
  const std::string convergence =
      std::isfinite(m.convergence_time_s) ? format_double(m.convergence_time_s) + " s" : "not reached";
  std::printf("seed %llu: %d updates, %d gated, %d invalid, convergence %s%s\n",
              static_cast<unsigned long long>(r.scenario.seed), m.updates, m.gated, m.invalid, convergence.c_str(),
              m.diverged ? ", DIVERGED" : "");
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir, std::optional<std::uint64_t> seed,
                 int batch) {
  Scenario scenario = load_config(config_path);
  if (seed) scenario.seed = *seed;

  if (batch <= 1) {
    const RunResult r = run_scenario(scenario);
    write_run(r, out_dir);
    report(r);
    return r.metrics.diverged ? kDivergence : kOk;
  }

  const std::vector<RunResult> runs = run_batch(seed_batch(scenario, batch));
  bool diverged = false;
  for (const RunResult& r : runs) {
    write_run(r, fs::path(out_dir) / ("seed_" + std::to_string(r.scenario.seed)));
    report(r);
    diverged = diverged || r.metrics.diverged;
  }
  return diverged ? kDivergence : kOk;
}

int cmd_replay(const std::string& log_path, const std::string& config_path, const std::string& out_dir,
               const std::string& truth_path, std::optional<std::uint64_t> seed) {
  Scenario scenario = load_config(config_path);
  if (seed) scenario.seed = *seed;
  const std::vector<PoseMeasurement> log = load_measurements(log_path);
  const FilterTrace trace = run_filter(scenario, log);

  std::optional<RunMetrics> metrics;
  std::vector<double> t;
  for (const PoseMeasurement& m : log) t.push_back(m.t);
  if (!truth_path.empty()) {
    const std::vector<TruthState> truth = load_truth(truth_path);
    if (truth.size() != log.size()) throw LogError(truth_path, 0, "row count differs from the measurement log");
    std::vector<Sample> samples(log.size());
    std::size_t r = 0;
    for (std::size_t i = 0; i < log.size(); ++i) {
      if (truth[i].t != log[i].t) throw LogError(truth_path, static_cast<int>(i) + 2, "timestamp differs from the log");
      samples[i].t = log[i].t;
      samples[i].truth = truth[i];
      samples[i].measurement = log[i];
      if (r < trace.records.size() && trace.records[r].state.t == log[i].t) samples[i].estimate = trace.records[r++];
    }
    metrics = compute_metrics(scenario, samples, trace);
  }

  fs::create_directories(out_dir);
  write_file(fs::path(out_dir) / "estimate.csv", [&](std::ostream& os) { write_estimate_csv(os, trace.records); });
  write_text_file(fs::path(out_dir) / "metrics.json",
                  metrics_json(summarize(trace), metrics ? &*metrics : nullptr, scenario, t));
  std::printf("%zu records, %d updates, %d gated, %d invalid%s\n", trace.records.size(), trace.updates, trace.gated,
              trace.invalid, trace.diverged ? ", DIVERGED" : "");
  return trace.diverged ? kDivergence : kOk;
}

int cmd_validate(const std::string& fault) {
  ValidationHooks hooks;
  if (fault == "jacobian") {
    hooks.measurement_jacobian = [](const FilterState& s) {
      Mat6x21 H = measurement_jacobian(s);
      H(0, idx::dq + 1) += 1e-3;
      return H;
    };
  } else if (fault == "drift") {
    hooks.error_model = [](const Vec3& w, const InertiaRatios& r, const OrbitRate& o) {
      ContinuousErrorModel m = continuous_error_model(w, r, o);
      m.A(idx::omega, idx::omega + 1) += 1e-3;
      return m;
    };
  }

  const std::vector<CheckResult> results = run_validation(hooks);
  bool ok = true;
  std::printf("%-28s %-12s %-12s %-9s %s\n", "check", "max_error", "tolerance", "seconds", "result");
  for (const CheckResult& r : results) {
    std::printf("%-28s %-12.3e %-12.3e %-9.3f %s\n", r.name.c_str(), r.max_error, r.tolerance, r.seconds,
                r.passed ? "PASS" : "FAIL");
    ok = ok && r.passed;
  }
  return ok ? kOk : kValidationFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tumbling-target pose and parameter estimation"};
  app.require_subcommand(1);

  std::string config, out, log, truth, fault;
  std::optional<std::uint64_t> seed;
  int batch = 1;

  auto* sim = app.add_subcommand("simulate", "Simulate a scenario and run the filter");
  sim->add_option("--config", config, "Scenario file")->required();
  sim->add_option("--out", out, "Output directory")->required();
  sim->add_option("--seed", seed, "Override the scenario seed");
  sim->add_option("--batch", batch, "Run this many consecutive seeds in parallel")->check(CLI::PositiveNumber);

  auto* rep = app.add_subcommand("replay", "Run the filter over a recorded measurement log");
  rep->add_option("--log", log, "Measurement log (measurements.csv)")->required();
  rep->add_option("--config", config, "Scenario file")->required();
  rep->add_option("--out", out, "Output directory")->required();
  rep->add_option("--truth", truth, "Truth series (truth.csv) for truth-relative metrics");
  rep->add_option("--seed", seed, "Override the scenario seed");

  auto* val = app.add_subcommand("validate", "Run the built-in oracle checks");
  val->add_option("--inject-fault", fault, "Corrupt an assembly routine")
      ->check(CLI::IsMember({"jacobian", "drift"}))
      ->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*sim) return cmd_simulate(config, out, seed, batch);
    if (*rep) return cmd_replay(log, config, out, truth, seed);
    if (*val) return cmd_validate(fault);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}
