#include "tumblenav/quaternion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tumblenav {

Quaternion Quaternion::from_axis_angle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (n == 0.0) return identity();
  return {std::sin(0.5 * angle) * axis / n, std::cos(0.5 * angle)};
}

Quaternion Quaternion::normalized() const {
  const double n = norm();
  return {v / n, s / n};
}

Mat3 cross_matrix(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Mat4 otimes_matrix(const Quaternion& a) {
  Mat4 m;
  m.topLeftCorner<3, 3>() = -cross_matrix(a.v) + a.s * Mat3::Identity();
  m.topRightCorner<3, 1>() = a.v;
  m.bottomLeftCorner<1, 3>() = -a.v.transpose();
  m(3, 3) = a.s;
  return m;
}

Mat4 odot_matrix(const Quaternion& a) {
  Mat4 m;
  m.topLeftCorner<3, 3>() = cross_matrix(a.v) + a.s * Mat3::Identity();
  m.topRightCorner<3, 1>() = a.v;
  m.bottomLeftCorner<1, 3>() = -a.v.transpose();
  m(3, 3) = a.s;
  return m;
}

namespace {

// [a (x)] b written out.
Quaternion otimes_raw(const Quaternion& a, const Quaternion& b) {
  return {a.s * b.v + b.s * a.v - a.v.cross(b.v), a.s * b.s - a.v.dot(b.v)};
}

Quaternion renormalize_if_drifted(const Quaternion& q) {
  const double n = q.norm();
  if (std::abs(n - 1.0) > kRenormalizeTolerance) return {q.v / n, q.s / n};
  return q;
}

}  // namespace

Quaternion quat_mul(const Quaternion& a, const Quaternion& b, Product op) {
  // a (.) b == b (x) a
  const Quaternion r = op == Product::otimes ? otimes_raw(a, b) : otimes_raw(b, a);
  return renormalize_if_drifted(r);
}

Mat3 to_rotation(const Quaternion& q) {
  return (2.0 * q.s * q.s - 1.0) * Mat3::Identity() - 2.0 * q.s * cross_matrix(q.v) +
         2.0 * q.v * q.v.transpose();
}

Mat3 frame_rotation(const Quaternion& q) { return to_rotation(q).transpose(); }

Quaternion propagate_const_rate(const Quaternion& q, const Vec3& omega, double T) {
  const double rate = omega.norm();
  const double angle = rate * T;
  const Quaternion w{omega, 0.0};
  if (angle < 1e-10) {
    const Quaternion dq = otimes_raw(w, q);
    return renormalize_if_drifted({q.v + 0.5 * T * dq.v, q.s + 0.5 * T * dq.s});
  }
  const double c = std::cos(0.5 * angle);
  const double s = std::sin(0.5 * angle) / rate;
  const Quaternion wq = otimes_raw(w, q);
  return renormalize_if_drifted({c * q.v + s * wq.v, c * q.s + s * wq.s});
}

Quaternion error_quat(const Quaternion& q, const Quaternion& q_nom) {
  const Quaternion dq = quat_mul(q, q_nom.conjugate());
  return dq.s < 0.0 ? -dq : dq;
}

double SmallRotation::scalar() const {
  const double n2 = qv.squaredNorm();
  if (n2 > 1.0) throw std::domain_error("small rotation vector part exceeds unit norm");
  return std::sqrt(1.0 - n2);
}

Quaternion SmallRotation::quaternion() const { return {qv, scalar()}; }

double rotation_angle(const Quaternion& q) {
  const Quaternion u = q.normalized();
  return 2.0 * std::atan2(u.v.norm(), std::abs(u.s));
}

}  // namespace tumblenav
