#pragma once

#include <optional>

#include "tumblenav/quaternion.hpp"

namespace tumblenav {

inline constexpr int kStateDim = 21;
inline constexpr int kNoiseDim = 6;

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec21 = Eigen::Matrix<double, kStateDim, 1>;
using Mat21 = Eigen::Matrix<double, kStateDim, kStateDim>;
using Mat21x6 = Eigen::Matrix<double, kStateDim, kNoiseDim>;

// Error-state layout: [dq_v | omega | p | r_o | v_o | rho_t | deta_v].
namespace idx {
inline constexpr int dq = 0;
inline constexpr int omega = 3;
inline constexpr int p = 6;
inline constexpr int r_o = 9;
inline constexpr int v_o = 12;
inline constexpr int rho_t = 15;
inline constexpr int deta = 18;
}  // namespace idx

/// Inertia ratios p and the torque scaling J = diag(1, Ixx/Iyy, Ixx/Izz).
struct InertiaRatios {
  Vec3 p = Vec3::Zero();
  Vec3 j_diag = Vec3::Ones();

  /// Throws std::invalid_argument unless all principal moments are positive.
  static InertiaRatios from_inertia(const Vec3& principal_moments);

  /// Recovers J from p alone through Iyy/Ixx = (1 + px)/(1 - py) and
  /// Izz/Ixx = 1 + py Iyy/Ixx. Falls back to J = I when those ratios are not
  /// positive (p not consistent with a physical body).
  static InertiaRatios from_ratios(const Vec3& p);
};

struct OrbitRate {
  double n_z = 0.0;  // rad/s
};

struct TruthState {
  Quaternion q;                   // {B} relative to {A}
  Vec3 omega = Vec3::Zero();      // rad/s, in {B}
  Vec3 r_o = Vec3::Zero();        // m, in {A}
  Vec3 v_o = Vec3::Zero();        // m/s
  double t = 0.0;                 // s
};

struct TargetGeometry {
  Vec3 rho_t = Vec3::Zero();  // POR offset from the CM, in {B}
  Quaternion eta;             // principal-axes misalignment
};

struct NoiseIntensities {
  double sigma_tau = 0.0;
  double sigma_f = 0.0;
};

/// psi(w) = (px wy wz, py wx wz, pz wx wy)
Vec3 euler_accel(const Vec3& omega, const InertiaRatios& ratios);

struct RotJacobians {
  Mat3 A;  // d psi / d omega
  Mat3 B;  // d psi / d p
};
RotJacobians rot_jacobians(const Vec3& omega, const InertiaRatios& ratios);

/// Clohessy-Wiltshire acceleration -2 n x v + (3 n^2 x, 0, -n^2 z).
Vec3 cw_accel(const Vec3& r_o, const Vec3& v_o, const OrbitRate& orbit);

struct ContinuousErrorModel {
  Mat21 A = Mat21::Zero();
  Mat21x6 B = Mat21x6::Zero();
};

/// Linear error dynamics about (omega_bar, p_bar) for the 21-state layout.
ContinuousErrorModel continuous_error_model(const Vec3& omega_bar, const InertiaRatios& ratios,
                                            const OrbitRate& orbit);

/// diag(sigma_tau^2 I3, sigma_f^2 I3)
Eigen::Matrix<double, 6, 6> noise_covariance(const NoiseIntensities& noise);

inline constexpr double kMaxIntegrationStep = 1e-3;

/// Advances the truth model by dt with fixed-step RK4 on (omega, r_o, v_o)
/// (substep <= kMaxIntegrationStep). The attitude is advanced each substep by
/// the exact constant-rate solution at the substep-mean rate. `disturbance`
/// (eps_tau, eps_f) is held constant over the call.
/// Throws std::invalid_argument for dt <= 0 or a non-finite state.
TruthState propagate_truth(const TruthState& s, const InertiaRatios& ratios, const OrbitRate& orbit,
                           double dt, const std::optional<Vec6>& disturbance = std::nullopt);

}  // namespace tumblenav
