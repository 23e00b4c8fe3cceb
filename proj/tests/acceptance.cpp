// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "tumblenav/batch.hpp"
#include "tumblenav/io.hpp"
#include "tumblenav/validation.hpp"

using namespace tumblenav;

namespace {

// Thresholds.
constexpr double kJacobianTol = 1e-6;
constexpr int kJacobianPoints = 100;
constexpr double kJacobianSeconds = 5.0;
constexpr double kDiscretizationTol = 1e-6;
constexpr int kDiscretizationPoints = 20;
constexpr double kDoubleIntegratorTol = 1e-10;
constexpr double kDiscretizationSeconds = 10.0;
constexpr double kConservationTol = 1e-9;
constexpr int kBatchRuns = 25;
constexpr int kRequiredRuns = 24;
constexpr double kConvergenceWithin = 10.0;     // s after filter start
constexpr double kBatchSeconds = 60.0;
constexpr double kParameterRelTol = 0.10;
constexpr double kParameterAbsFloor = 0.05;
constexpr double kRhoTol = 0.01;                // m per axis
constexpr double kCapturePosition = 0.05;       // m
constexpr double kCaptureAttitude = 5.0;        // deg
constexpr double kConsistencyConfidence = 0.95;
constexpr double kReplayTol = 1e-12;
constexpr double kNoiseFreeTol = 1e-6;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("criterion %d %-26s %s  %s\n", id, name.c_str(), pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void jacobian_fidelity() {
  const auto t0 = Clock::now();
  const ValidationHooks hooks;
  const CheckResult h = check_measurement_jacobian(hooks, kJacobianPoints, 1);
  const CheckResult a = check_drift_jacobian(hooks, kJacobianPoints, 1);
  const double t = seconds_since(t0);
  const bool pass = h.max_error < kJacobianTol && a.max_error < kJacobianTol && t < kJacobianSeconds;
  report(1, "jacobian_fidelity", pass,
         fmt("H max err %.2e, A max err %.2e (tol %.0e) at %d states, %.2f s (limit %.0f s)", h.max_error,
             a.max_error, kJacobianTol, kJacobianPoints, t, kJacobianSeconds));
}

void discretization_fidelity() {
  const auto t0 = Clock::now();
  const CheckResult vl = check_van_loan_vs_ode(ValidationHooks{}, kDiscretizationPoints, 1);
  const CheckResult di = check_double_integrator();
  const double t = seconds_since(t0);
  const bool pass = vl.max_error < kDiscretizationTol && di.max_error < kDoubleIntegratorTol && t < kDiscretizationSeconds;
  report(2, "discretization_fidelity", pass,
         fmt("van Loan vs ODE rel err %.2e (tol %.0e) at %d points, double integrator %.2e (tol %.0e), %.2f s "
             "(limit %.0f s)",
             vl.max_error, kDiscretizationTol, kDiscretizationPoints, di.max_error, kDoubleIntegratorTol, t,
             kDiscretizationSeconds));
}

void conservation() {
  const CheckResult c = check_torque_free_conservation();
  report(3, "truth_conservation", c.max_error < kConservationTol,
         fmt("max relative drift of |I w| and energy over 120 s %.2e (tol %.0e)", c.max_error, kConservationTol));
}

void batch_criteria() {
  const auto t0 = Clock::now();
  const Scenario base = default_scenario();
  const std::vector<RunResult> runs = run_batch(seed_batch(base, kBatchRuns));
  const double t = seconds_since(t0);

  const Vec3 p_true = base.ratios().p;
  const Vec3 rho_true = base.geometry.rho_t;
  int converged = 0, adapted = 0, bridged = 0;
  std::string conv_times, misses;
  double worst_pos = 0.0, worst_att = 0.0;
  for (const RunResult& r : runs) {
    const RunMetrics& m = r.metrics;
    const bool c = std::isfinite(m.convergence_time_s) && m.convergence_time_s <= kConvergenceWithin;
    converged += c;
    if (!c) conv_times += fmt(" seed %llu (%s)", static_cast<unsigned long long>(r.scenario.seed),
                              std::isfinite(m.convergence_time_s) ? fmt("%.1f s", m.convergence_time_s).c_str()
                                                                  : "not reached");

    bool ok = m.at_parameter_check.has_value() && !m.diverged;
    if (ok) {
      for (int i = 0; i < 3; ++i) {
        const double tol = std::max(kParameterRelTol * std::abs(p_true[i]), kParameterAbsFloor);
        ok = ok && std::abs(m.at_parameter_check->p[i] - p_true[i]) <= tol;
        ok = ok && std::abs(m.at_parameter_check->rho_t[i] - rho_true[i]) < kRhoTol;
      }
    }
    adapted += ok;
    if (!ok) misses += fmt(" %llu", static_cast<unsigned long long>(r.scenario.seed));

    const bool b = m.occlusion_end && m.occlusion_end->position_error_m < kCapturePosition &&
                   m.occlusion_end->attitude_error_deg < kCaptureAttitude;
    bridged += b;
    if (m.occlusion_end) {
      worst_pos = std::max(worst_pos, m.occlusion_end->position_error_m);
      worst_att = std::max(worst_att, m.occlusion_end->attitude_error_deg);
    }
  }

  report(4, "convergence", converged >= kRequiredRuns && t < kBatchSeconds,
         fmt("%d/%d runs within %.0f s of filter start (need %d), batch %.1f s (limit %.0f s);%s", converged,
             kBatchRuns, kConvergenceWithin, kRequiredRuns, t, kBatchSeconds,
             conv_times.empty() ? " all converged" : (" misses:" + conv_times).c_str()));
  report(5, "parameter_adaptation", adapted >= kRequiredRuns,
         fmt("%d/%d runs with p and rho_t in tolerance at t = %.0f s (need %d)%s", adapted, kBatchRuns,
             base.parameter_check_time, kRequiredRuns, misses.empty() ? "" : ("; misses:" + misses).c_str()));
  report(6, "occlusion_bridging", bridged >= kRequiredRuns,
         fmt("%d/%d runs with POR error at t = 116 s below %.0f cm and %.0f deg (need %d); worst %.2f cm, %.2f deg",
             bridged, kBatchRuns, kCapturePosition * 100, kCaptureAttitude, kRequiredRuns, worst_pos * 100, worst_att));
}

void consistency() {
  const Scenario base = consistency_scenario();
  const std::vector<RunResult> runs = run_batch(seed_batch(base, kBatchRuns));
  const std::size_t n = runs.front().samples.size();
  double sum = 0.0;
  int steps = 0;
  bool defined = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (runs.front().samples[i].t < kConsistencyWindowStart) continue;
    double avg = 0.0;
    for (const RunResult& r : runs) {
      const double v = r.metrics.nees[i];
      defined = defined && std::isfinite(v);
      avg += v;
    }
    sum += avg / kBatchRuns;
    ++steps;
  }
  const double anees = sum / steps;
  const double dof = static_cast<double>(kStateDim) * kBatchRuns;
  const boost::math::chi_squared chi2(dof);
  const double lo = boost::math::quantile(chi2, 0.5 * (1.0 - kConsistencyConfidence)) / kBatchRuns;
  const double hi = boost::math::quantile(chi2, 0.5 * (1.0 + kConsistencyConfidence)) / kBatchRuns;
  report(7, "statistical_consistency", defined && anees >= lo && anees <= hi,
         fmt("%d-run average NEES %.2f over t >= %.0f s, %.0f%% band [%.2f, %.2f] for %d states", kBatchRuns, anees,
             kConsistencyWindowStart, kConsistencyConfidence * 100, lo, hi, kStateDim));
}

std::string csv_of(const RunResult& r) {
  std::vector<TruthState> truth;
  std::vector<PoseMeasurement> log;
  std::vector<FilterRecord> est;
  for (const Sample& s : r.samples) {
    truth.push_back(s.truth);
    log.push_back(s.measurement);
    if (s.estimate) est.push_back(*s.estimate);
  }
  std::ostringstream os;
  write_truth_csv(os, truth);
  write_measurements_csv(os, log);
  write_estimate_csv(os, est);
  return os.str();
}

void determinism_and_replay() {
  const Scenario s = default_scenario();
  const RunResult a = run_scenario(s);
  const RunResult b = run_scenario(s);
  const bool identical = csv_of(a) == csv_of(b);

  std::vector<PoseMeasurement> log;
  std::vector<FilterRecord> est;
  for (const Sample& x : a.samples) {
    log.push_back(x.measurement);
    if (x.estimate) est.push_back(*x.estimate);
  }
  std::stringstream log_csv, est_csv, rep_csv;
  write_measurements_csv(log_csv, log);
  write_estimate_csv(est_csv, est);
  const FilterTrace replay = run_filter(s, read_measurements_csv(log_csv));
  write_estimate_csv(rep_csv, replay.records);
  const CsvTable ta = read_csv_table(est_csv), tb = read_csv_table(rep_csv);
  double worst = ta.rows.size() == tb.rows.size() ? 0.0 : INFINITY;
  for (std::size_t i = 0; i < std::min(ta.rows.size(), tb.rows.size()); ++i)
    for (std::size_t j = 0; j < ta.header.size(); ++j) worst = std::max(worst, std::abs(ta.rows[i][j] - tb.rows[i][j]));

  report(8, "determinism_and_replay", identical && worst <= kReplayTol,
         fmt("same seed bit-identical: %s; replay of %zu records max diff %.2e (tol %.0e)", identical ? "yes" : "no",
             tb.rows.size(), worst, kReplayTol));
}

void noise_free_exactness() {
  Scenario s = default_scenario();
  s.sigma_r = 0.0;
  s.sigma_qo = 0.0;
  s.process = {0.0, 0.0};
  s.truth_disturbances = false;
  s.perturbation.enabled = false;
  const RunResult r = run_scenario(s);
  double worst = 0.0;
  int n = 0;
  for (const Sample& x : r.samples) {
    if (!x.estimate) continue;
    const FilterState& e = x.estimate->state;
    const double dq = 2.0 * error_quat(x.truth.q, e.q_nom).v.norm();
    const double deta = 2.0 * error_quat(s.geometry.eta, e.eta_nom).v.norm();
    worst = std::max({worst, dq, deta, (e.omega - x.truth.omega).cwiseAbs().maxCoeff(),
                      (e.p - s.ratios().p).cwiseAbs().maxCoeff(), (e.r_o - x.truth.r_o).cwiseAbs().maxCoeff(),
                      (e.v_o - x.truth.v_o).cwiseAbs().maxCoeff(), (e.rho_t - s.geometry.rho_t).cwiseAbs().maxCoeff()});
    ++n;
  }
  report(9, "noise_free_exactness", n > 0 && !r.metrics.diverged && worst < kNoiseFreeTol,
         fmt("max state error %.2e over %d estimates to t = %.0f s (tol %.0e)", worst, n, s.duration, kNoiseFreeTol));
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> criteria = {jacobian_fidelity, discretization_fidelity, conservation,
                                                       batch_criteria,    consistency,             determinism_and_replay,
                                                       noise_free_exactness};
  for (const auto& c : criteria) {
    try {
      c();
    } catch (const std::exception& e) {
      std::printf("error: %s\n", e.what());
      ++failures;
    }
  }
  std::printf("%d criterion(s) failed\n", failures);
  return failures;
}
