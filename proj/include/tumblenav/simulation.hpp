#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tumblenav/dynamics.hpp"
#include "tumblenav/ekf.hpp"

namespace tumblenav {

struct OcclusionWindow {
  double start = 0.0;  // s, inclusive
  double end = 0.0;    // s, inclusive

  bool contains(double t) const { return t >= start && t <= end; }
};

/// How the filter's initial estimate departs from the truth at filter start.
struct InitialPerturbation {
  bool enabled = true;
  double attitude_rad = 0.1;
  double rate_rad_s = 0.05;
  double position_m = 0.0;
  double velocity_m_s = 0.0;
  /// Draw the whole 21-dimensional initial error from the prior covariance
  /// instead (used for consistency runs).
  bool sample_prior = false;
};

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Scenario {
  Vec3 inertia{4.0, 8.0, 5.0};  // kg m^2, principal
  TargetGeometry geometry{Vec3(-0.15, 0.0, 0.0), Quaternion::from_axis_angle(Vec3::Ones(), 5.0 * 0.017453292519943295)};
  TruthState initial = default_initial_state();
  double n_z = 1.13e-3;        // rad/s
  double meas_rate_hz = 2.0;
  double sigma_r = 5e-3;       // m
  double sigma_qo = 5e-3;
  NoiseIntensities process{1e-4, 1e-4};
  bool truth_disturbances = true;
  std::vector<OcclusionWindow> occlusions{{96.0, 116.0}};
  double duration = 120.0;     // s
  std::uint64_t seed = 1;
  double filter_start = 5.0;   // s
  double truth_step = 0.01;    // s, disturbance hold interval

  InitialPerturbation perturbation;
  InitialUncertainty prior;
  bool joseph_form = true;
  bool gate_enabled = true;
  ParameterRandomWalk parameter_walk;

  // Metric settings.
  double convergence_attitude_deg = 1.0;
  double convergence_position_m = 0.01;
  double convergence_hold_s = 5.0;
  double parameter_check_time = 90.0;  // s

  static TruthState default_initial_state();

  /// Throws ScenarioError naming the offending field.
  void validate() const;

  InertiaRatios ratios() const { return InertiaRatios::from_inertia(inertia); }
  OrbitRate orbit() const { return {n_z}; }
  /// Filter configuration matched to the scenario. Zero measurement noise is
  /// floored at kMinFilterSigma so that S stays invertible.
  FilterConfig filter_config() const;
  /// Measurement grid t_k = k / meas_rate_hz, k = 0..floor(duration * rate).
  /// Empty when duration is 0.
  std::vector<double> sample_times() const;
  bool occluded(double t) const;
};

inline constexpr double kMinFilterSigma = 1e-6;

/// The default experiment (same as Scenario{}).
Scenario default_scenario();

/// Model-matched variant for consistency checks: no occlusion, filter from
/// t = 0 with the initial error drawn from a tight prior.
Scenario consistency_scenario();

/// Start of the window over which consistency is assessed.
inline constexpr double kConsistencyWindowStart = 35.0;

/// Truth on the measurement grid, with process disturbances drawn from the
/// truth_disturbance stream and held over truth_step.
std::vector<TruthState> simulate_truth(const Scenario& scenario);

/// Measured pose of {C} for a truth state, without noise.
Pose true_pose(const TruthState& truth, const TargetGeometry& geometry);

std::vector<PoseMeasurement> synthesize_measurements(const std::vector<TruthState>& truth,
                                                     const Scenario& scenario);

/// Initial filter state at time t0, a deterministic function of the scenario
/// (noise-free truth propagated to t0, then perturbed from the
/// initial_estimate stream).
FilterState initial_estimate(const Scenario& scenario, double t0);

struct FilterRecord {
  FilterState state;
  UpdateStatus status = UpdateStatus::skipped_invalid;
  double nis = 0.0;
};

struct FilterTrace {
  std::vector<FilterRecord> records;  // one per processed measurement
  int updates = 0;
  int gated = 0;
  int invalid = 0;
  int divergence_warnings = 0;
  bool diverged = false;
};

/// Runs the filter over measurements with t >= filter_start: initialize at
/// the first, then predict to each timestamp and update when valid.
FilterTrace run_filter(const Scenario& scenario, const std::vector<PoseMeasurement>& measurements);

/// NEES of an estimate against truth in the 21 error coordinates. nullopt
/// when P is not positive definite.
std::optional<double> compute_nees(const TruthState& truth, const Scenario& scenario,
                                   const FilterState& estimate);

struct EstimateErrors {
  double attitude_deg = 0.0;      // principal-axes attitude q
  double por_attitude_deg = 0.0;  // measured frame eta (x) q
  double por_position_m = 0.0;
  double omega_rad_s = 0.0;
  double p_rel = 0.0;
  double rho_t_m = 0.0;
};

EstimateErrors estimate_errors(const TruthState& truth, const Scenario& scenario, const FilterState& estimate);

struct OcclusionSample {
  double t = 0.0;
  double position_error_m = 0.0;
  double attitude_error_deg = 0.0;
};

struct RunMetrics {
  double convergence_time_s = std::numeric_limits<double>::quiet_NaN();
  double rms_attitude_deg = std::numeric_limits<double>::quiet_NaN();
  double rms_por_attitude_deg = std::numeric_limits<double>::quiet_NaN();
  double rms_por_position_m = std::numeric_limits<double>::quiet_NaN();
  double rms_omega_rad_s = std::numeric_limits<double>::quiet_NaN();
  double rms_p_rel = std::numeric_limits<double>::quiet_NaN();
  std::optional<FilterState> at_parameter_check;
  std::vector<double> nees;  // per sample, NaN where undefined
  std::vector<OcclusionSample> occlusion_errors;
  std::optional<OcclusionSample> occlusion_end;
  int updates = 0;
  int gated = 0;
  int invalid = 0;
  int divergence_warnings = 0;
  bool diverged = false;
};

struct Sample {
  double t = 0.0;
  TruthState truth;
  PoseMeasurement measurement;
  std::optional<FilterRecord> estimate;
};

struct RunResult {
  Scenario scenario;
  std::vector<Sample> samples;
  RunMetrics metrics;
};

RunMetrics compute_metrics(const Scenario& scenario, const std::vector<Sample>& samples, const FilterTrace& trace);

RunResult run_scenario(const Scenario& scenario);

}  // namespace tumblenav
