#pragma once

#include <optional>

#include "tumblenav/discretize.hpp"
#include "tumblenav/dynamics.hpp"
#include "tumblenav/quaternion.hpp"

namespace tumblenav {

using Vec6d = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat6x21 = Eigen::Matrix<double, 6, kStateDim>;

/// Nominal quaternions plus the additive part of the estimate. The error
/// components dq_v and deta_v are folded into q_nom / eta_nom after each update
/// and are therefore not stored.
struct FilterState {
  Quaternion q_nom;
  Quaternion eta_nom;
  Vec3 omega = Vec3::Zero();
  Vec3 p = Vec3::Zero();
  Vec3 r_o = Vec3::Zero();
  Vec3 v_o = Vec3::Zero();
  Vec3 rho_t = Vec3::Zero();
  Mat21 P = Mat21::Identity();
  double t = 0.0;
  bool fault = false;
};

/// Pose of the POR frame {C} in the camera frame {A}.
struct Pose {
  Vec3 r_c = Vec3::Zero();
  Quaternion mu;
};

struct PoseMeasurement {
  double t = 0.0;
  Vec3 r_c = Vec3::Zero();
  Quaternion mu;
  bool valid = true;
};

struct MeasurementNoise {
  double sigma_r = 5e-3;   // m, per axis
  double sigma_qo = 5e-3;  // quaternion vector part, per axis

  Mat6 covariance() const;
};

/// Prior standard deviations of the 21 error coordinates.
struct InitialUncertainty {
  double dq = 0.05;
  double omega = 0.05;  // rad/s
  double p = 0.5;
  double r_o = 0.5;     // m
  double v_o = 0.05;    // m/s
  double rho_t = 0.2;   // m
  double deta = 0.05;

  Mat21 covariance() const;
};

/// 99.9% quantile of chi-square with 6 degrees of freedom.
double default_gate_threshold();

struct FilterConfig {
  MeasurementNoise noise;
  OrbitRate orbit;
  NoiseIntensities process;
  ParameterRandomWalk parameter_walk;
  bool joseph_form = true;
  bool gate_enabled = true;
  double gate_threshold = default_gate_threshold();
};

/// Time update over T seconds. The mean is integrated with the truth
/// integrator at zero noise and the attitude nominal absorbs the integrated
/// error; P uses the van Loan model linearized at the pre-propagation rate.
/// A non-finite result sets `fault` and returns the input state unchanged.
FilterState predict(const FilterState& s, double T, const FilterConfig& config);

/// Mean-only propagation (no covariance work).
FilterState propagate_mean(const FilterState& s, double T, const OrbitRate& orbit);

/// Pose predicted for the current estimate: r_o + R(q) rho_t and eta (x) q.
Pose predicted_pose(const FilterState& s);

/// 6x21 pose sensitivity at the reset point (dq_v = deta_v = 0).
Mat6x21 measurement_jacobian(const FilterState& s);

struct Innovation {
  Vec6d e = Vec6d::Zero();
  Mat6x21 H = Mat6x21::Zero();
  Mat6 S = Mat6::Zero();
};

/// Innovation e = (r_c - r_c_hat, (eta* (x) mu (x) q*)_v), with H and
/// S = H P H^T + R. Returns nullopt for an invalid (occluded) measurement.
std::optional<Innovation> innovation(const FilterState& s, const PoseMeasurement& m,
                                     const MeasurementNoise& noise);

enum class UpdateStatus { applied, skipped_invalid, gated, fault };

struct UpdateResult {
  FilterState state;
  UpdateStatus status = UpdateStatus::applied;
  double nis = 0.0;
  bool divergence_warning = false;
};

/// Largest allowed norm of a folded-in quaternion vector correction.
inline constexpr double kMaxCorrectionNorm = 0.99;

UpdateResult update(const FilterState& s, const PoseMeasurement& m, const FilterConfig& config);

/// Error-state correction applied to a state: dq_v and deta_v are composed
/// multiplicatively (q = dq (x) q_nom, eta = deta (.) eta_nom), everything
/// else is added. Vector corrections with norm >= 1 are clamped to
/// kMaxCorrectionNorm and reported through `clamped`.
FilterState apply_correction(const FilterState& s, const Vec21& dx, bool* clamped = nullptr);

/// Open-loop prediction of the measured pose dt seconds ahead. Works on a
/// copy, steps of at most kPoseStep.
Pose predict_pose(const FilterState& s, double dt, const FilterConfig& config);

inline constexpr double kPoseStep = 0.1;

}  // namespace tumblenav
