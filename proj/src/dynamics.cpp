#include "tumblenav/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace tumblenav {

InertiaRatios InertiaRatios::from_inertia(const Vec3& I) {
  if (!(I.minCoeff() > 0.0)) throw std::invalid_argument("principal moments of inertia must be positive");
  InertiaRatios r;
  r.p << (I.y() - I.z()) / I.x(), (I.z() - I.x()) / I.y(), (I.x() - I.y()) / I.z();
  r.j_diag << 1.0, I.x() / I.y(), I.x() / I.z();
  return r;
}

InertiaRatios InertiaRatios::from_ratios(const Vec3& p) {
  InertiaRatios r;
  r.p = p;
  if (p.y() >= 1.0) return r;
  const double yy = (1.0 + p.x()) / (1.0 - p.y());
  const double zz = 1.0 + p.y() * yy;
  if (yy > 0.0 && zz > 0.0 && std::isfinite(yy) && std::isfinite(zz)) r.j_diag << 1.0, 1.0 / yy, 1.0 / zz;
  return r;
}

Vec3 euler_accel(const Vec3& w, const InertiaRatios& ratios) {
  const Vec3& p = ratios.p;
  return {p.x() * w.y() * w.z(), p.y() * w.x() * w.z(), p.z() * w.x() * w.y()};
}

RotJacobians rot_jacobians(const Vec3& w, const InertiaRatios& ratios) {
  const Vec3& p = ratios.p;
  RotJacobians j;
  j.A << 0.0, p.x() * w.z(), p.x() * w.y(),
         p.y() * w.z(), 0.0, p.y() * w.x(),
         p.z() * w.y(), p.z() * w.x(), 0.0;
  j.B = Vec3(w.y() * w.z(), w.x() * w.z(), w.x() * w.y()).asDiagonal();
  return j;
}

Vec3 cw_accel(const Vec3& r, const Vec3& v, const OrbitRate& orbit) {
  const double n = orbit.n_z;
  const Vec3 n_vec(0.0, 0.0, n);
  return -2.0 * n_vec.cross(v) + Vec3(3.0 * n * n * r.x(), 0.0, -n * n * r.z());
}

ContinuousErrorModel continuous_error_model(const Vec3& omega_bar, const InertiaRatios& ratios,
                                            const OrbitRate& orbit) {
  ContinuousErrorModel m;
  const RotJacobians jac = rot_jacobians(omega_bar, ratios);
  const double n = orbit.n_z;

  m.A.block<3, 3>(idx::dq, idx::dq) = -cross_matrix(omega_bar);
  m.A.block<3, 3>(idx::dq, idx::omega) = 0.5 * Mat3::Identity();
  m.A.block<3, 3>(idx::omega, idx::omega) = jac.A;
  m.A.block<3, 3>(idx::omega, idx::p) = jac.B;

  m.A.block<3, 3>(idx::r_o, idx::v_o) = Mat3::Identity();
  m.A.block<3, 3>(idx::v_o, idx::r_o) = Vec3(3.0 * n * n, 0.0, -n * n).asDiagonal();
  m.A.block<3, 3>(idx::v_o, idx::v_o) = -2.0 * cross_matrix(Vec3(0.0, 0.0, n));

  m.B.block<3, 3>(idx::omega, 0) = ratios.j_diag.asDiagonal();
  m.B.block<3, 3>(idx::v_o, 3) = Mat3::Identity();
  return m;
}

Eigen::Matrix<double, 6, 6> noise_covariance(const NoiseIntensities& noise) {
  Vec6 d;
  d << Vec3::Constant(noise.sigma_tau * noise.sigma_tau), Vec3::Constant(noise.sigma_f * noise.sigma_f);
  return d.asDiagonal();
}

namespace {

struct Rates {
  Vec3 omega, r_o, v_o;
};

Rates derivative(const Rates& x, const InertiaRatios& ratios, const OrbitRate& orbit, const Vec3& torque,
                 const Vec3& force) {
  return {euler_accel(x.omega, ratios) + torque, x.v_o, cw_accel(x.r_o, x.v_o, orbit) + force};
}

Rates axpy(const Rates& x, double h, const Rates& k) {
  return {x.omega + h * k.omega, x.r_o + h * k.r_o, x.v_o + h * k.v_o};
}

}  // namespace

TruthState propagate_truth(const TruthState& s, const InertiaRatios& ratios, const OrbitRate& orbit,
                           double dt, const std::optional<Vec6>& disturbance) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("propagate_truth: dt must be positive");
  if (!s.q.is_finite() || !s.omega.allFinite() || !s.r_o.allFinite() || !s.v_o.allFinite())
    throw std::invalid_argument("propagate_truth: non-finite state");

  Vec3 torque = Vec3::Zero();
  Vec3 force = Vec3::Zero();
  if (disturbance) {
    torque = ratios.j_diag.cwiseProduct(disturbance->head<3>());
    force = disturbance->tail<3>();
  }

  // Guard against 0.5 / 1e-3 rounding up to 501 substeps.
  const int steps = std::max(1, static_cast<int>(std::ceil(dt / kMaxIntegrationStep - 1e-9)));
  const double h = dt / steps;

  Rates x{s.omega, s.r_o, s.v_o};
  Quaternion q = s.q;
  for (int i = 0; i < steps; ++i) {
    const Rates k1 = derivative(x, ratios, orbit, torque, force);
    const Rates k2 = derivative(axpy(x, 0.5 * h, k1), ratios, orbit, torque, force);
    const Rates k3 = derivative(axpy(x, 0.5 * h, k2), ratios, orbit, torque, force);
    const Rates k4 = derivative(axpy(x, h, k3), ratios, orbit, torque, force);
    Rates next{x.omega + h / 6.0 * (k1.omega + 2.0 * k2.omega + 2.0 * k3.omega + k4.omega),
               x.r_o + h / 6.0 * (k1.r_o + 2.0 * k2.r_o + 2.0 * k3.r_o + k4.r_o),
               x.v_o + h / 6.0 * (k1.v_o + 2.0 * k2.v_o + 2.0 * k3.v_o + k4.v_o)};
    q = propagate_const_rate(q, 0.5 * (x.omega + next.omega), h);
    x = next;
  }

  TruthState out;
  out.q = q;
  out.omega = x.omega;
  out.r_o = x.r_o;
  out.v_o = x.v_o;
  out.t = s.t + dt;
  return out;
}

}  // namespace tumblenav
