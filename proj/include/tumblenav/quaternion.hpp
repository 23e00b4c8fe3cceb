#pragma once

#include <Eigen/Dense>

namespace tumblenav {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/**
 * Unit quaternion stored vector part first: (v1, v2, v3, s).
 *
 * Products follow the block-matrix convention
 *
 *   [a (x)] = [ -[a_v x] + a_s I3   a_v ]     [a (.)] = [ [a_v x] + a_s I3   a_v ]
 *             [ -a_v^T              a_s ]               [ -a_v^T             a_s ]
 *
 * so that a (x) b = [a (x)] b = b (.) a, and to_rotation(a (x) b) equals
 * to_rotation(a) * to_rotation(b).
 */
struct Quaternion {
  Vec3 v = Vec3::Zero();
  double s = 1.0;

  Quaternion() = default;
  Quaternion(const Vec3& vec, double scalar) : v(vec), s(scalar) {}

  static Quaternion identity() { return {}; }
  static Quaternion from_vector(const Vec4& c) { return {c.head<3>(), c(3)}; }

  /// Rotation by `angle` about `axis` (axis need not be normalized).
  /// frame_rotation() of the result is the active rotation about that axis.
  static Quaternion from_axis_angle(const Vec3& axis, double angle);

  Vec4 as_vector() const {
    Vec4 c;
    c << v, s;
    return c;
  }
  double norm() const { return std::sqrt(v.squaredNorm() + s * s); }
  Quaternion conjugate() const { return {-v, s}; }
  Quaternion normalized() const;
  Quaternion operator-() const { return {-v, -s}; }
  bool is_finite() const { return v.allFinite() && std::isfinite(s); }
};

enum class Product { otimes, odot };

Mat3 cross_matrix(const Vec3& v);

Mat4 otimes_matrix(const Quaternion& a);
Mat4 odot_matrix(const Quaternion& a);

/// a (x) b or a (.) b. The result is renormalized when its norm drifts from 1
/// by more than kRenormalizeTolerance.
Quaternion quat_mul(const Quaternion& a, const Quaternion& b, Product op = Product::otimes);

inline constexpr double kRenormalizeTolerance = 1e-12;

/// Rotation matrix homomorphic to (x): it equals the quaternion sandwich
/// x -> q (x) x (x) q*.
Mat3 to_rotation(const Quaternion& q);

/// Matrix that takes vectors resolved in the rotated (body) frame into the
/// reference frame. This is to_rotation(q)^T and is the R(q) that appears in
/// the pose measurement equations.
Mat3 frame_rotation(const Quaternion& q);

/// Exact solution of dq/dt = 1/2 [w~ (x)] q for constant w over T seconds.
Quaternion propagate_const_rate(const Quaternion& q, const Vec3& omega, double T);

/// dq = q (x) q_nom*, sign chosen so that dq.s >= 0.
Quaternion error_quat(const Quaternion& q, const Quaternion& q_nom);

/// Small rotation known by its vector part. The scalar part is recovered as
/// sqrt(1 - |qv|^2) >= 0.
struct SmallRotation {
  Vec3 qv = Vec3::Zero();

  /// Throws std::domain_error when |qv| > 1.
  double scalar() const;
  Quaternion quaternion() const;
};

/// Rotation angle in [0, pi] of the rotation carried by q.
double rotation_angle(const Quaternion& q);

}  // namespace tumblenav
