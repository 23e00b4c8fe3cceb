#include "tumblenav/ekf.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <stdexcept>

namespace tumblenav {

Mat6 MeasurementNoise::covariance() const {
  Vec6d d;
  d << Vec3::Constant(sigma_r * sigma_r), Vec3::Constant(sigma_qo * sigma_qo);
  return d.asDiagonal();
}

Mat21 InitialUncertainty::covariance() const {
  Vec21 d;
  d << Vec3::Constant(dq * dq), Vec3::Constant(omega * omega), Vec3::Constant(p * p),
      Vec3::Constant(r_o * r_o), Vec3::Constant(v_o * v_o), Vec3::Constant(rho_t * rho_t),
      Vec3::Constant(deta * deta);
  return d.asDiagonal();
}

double default_gate_threshold() {
  static const double threshold = boost::math::quantile(boost::math::chi_squared(6.0), 0.999);
  return threshold;
}

namespace {

bool finite_state(const FilterState& s) {
  return s.q_nom.is_finite() && s.eta_nom.is_finite() && s.omega.allFinite() && s.p.allFinite() &&
         s.r_o.allFinite() && s.v_o.allFinite() && s.rho_t.allFinite() && s.P.allFinite();
}

Mat21 symmetrize(const Mat21& P) { return 0.5 * (P + P.transpose()); }

Vec3 clamp_norm(const Vec3& v, bool& clamped) {
  const double n = v.norm();
  if (n < 1.0) return v;
  clamped = true;
  return v * (kMaxCorrectionNorm / n);
}

}  // namespace

FilterState propagate_mean(const FilterState& s, double T, const OrbitRate& orbit) {
  TruthState x;
  x.q = s.q_nom;
  x.omega = s.omega;
  x.r_o = s.r_o;
  x.v_o = s.v_o;
  x.t = s.t;
  const TruthState next = propagate_truth(x, InertiaRatios::from_ratios(s.p), orbit, T);

  FilterState out = s;
  out.q_nom = next.q;
  out.omega = next.omega;
  out.r_o = next.r_o;
  out.v_o = next.v_o;
  out.t = s.t + T;
  return out;
}

FilterState predict(const FilterState& s, double T, const FilterConfig& config) {
  if (T < 0.0 || !std::isfinite(T)) throw std::invalid_argument("predict: negative or non-finite interval");
  if (T == 0.0 || s.fault) return s;

  FilterState frozen = s;
  if (!finite_state(s)) {
    frozen.fault = true;
    return frozen;
  }

  FilterState out;
  try {
    out = propagate_mean(s, T, config.orbit);
    const ContinuousErrorModel cm =
        continuous_error_model(s.omega, InertiaRatios::from_ratios(s.p), config.orbit);
    DiscreteModel dm = van_loan(cm.A, cm.B, noise_covariance(config.process), T);
    if (config.parameter_walk.any()) add_parameter_noise(dm, config.parameter_walk);
    const Mat21 Phi = dm.Phi;
    const Mat21 Q = dm.Q;
    out.P = symmetrize(Phi * s.P * Phi.transpose() + Q);
  } catch (const std::exception&) {
    frozen.fault = true;
    return frozen;
  }

  if (!finite_state(out)) {
    frozen.fault = true;
    return frozen;
  }
  return out;
}

Pose predicted_pose(const FilterState& s) {
  return {s.r_o + frame_rotation(s.q_nom) * s.rho_t, quat_mul(s.eta_nom, s.q_nom)};
}

Mat6x21 measurement_jacobian(const FilterState& s) {
  const Mat3 R = frame_rotation(s.q_nom);
  Mat6x21 H = Mat6x21::Zero();
  H.block<3, 3>(0, idx::dq) = -2.0 * R * cross_matrix(s.rho_t);
  H.block<3, 3>(0, idx::r_o) = Mat3::Identity();
  H.block<3, 3>(0, idx::rho_t) = R;
  H.block<3, 3>(3, idx::dq) = Mat3::Identity();
  H.block<3, 3>(3, idx::deta) = Mat3::Identity();
  return H;
}

std::optional<Innovation> innovation(const FilterState& s, const PoseMeasurement& m,
                                     const MeasurementNoise& noise) {
  if (!m.valid) return std::nullopt;
  Innovation inn;
  const Pose pred = predicted_pose(s);
  inn.e.head<3>() = m.r_c - pred.r_c;
  Quaternion d = quat_mul(quat_mul(s.eta_nom.conjugate(), m.mu), s.q_nom.conjugate());
  if (d.s < 0.0) d = -d;
  inn.e.tail<3>() = d.v;
  inn.H = measurement_jacobian(s);
  inn.S = inn.H * s.P * inn.H.transpose() + noise.covariance();
  inn.S = (0.5 * (inn.S + inn.S.transpose())).eval();
  return inn;
}

FilterState apply_correction(const FilterState& s, const Vec21& dx, bool* clamped) {
  bool was_clamped = false;
  const Vec3 dq_v = clamp_norm(dx.segment<3>(idx::dq), was_clamped);
  const Vec3 deta_v = clamp_norm(dx.segment<3>(idx::deta), was_clamped);
  if (clamped) *clamped = was_clamped;

  FilterState out = s;
  out.q_nom = quat_mul(SmallRotation{dq_v}.quaternion(), s.q_nom, Product::otimes);
  out.eta_nom = quat_mul(SmallRotation{deta_v}.quaternion(), s.eta_nom, Product::odot);
  out.omega += dx.segment<3>(idx::omega);
  out.p += dx.segment<3>(idx::p);
  out.r_o += dx.segment<3>(idx::r_o);
  out.v_o += dx.segment<3>(idx::v_o);
  out.rho_t += dx.segment<3>(idx::rho_t);
  return out;
}

UpdateResult update(const FilterState& s, const PoseMeasurement& m, const FilterConfig& config) {
  UpdateResult result;
  result.state = s;
  if (s.fault) {
    result.status = UpdateStatus::fault;
    return result;
  }
  const std::optional<Innovation> inn = innovation(s, m, config.noise);
  if (!inn) {
    result.status = UpdateStatus::skipped_invalid;
    return result;
  }

  const Eigen::LDLT<Mat6> ldlt(inn->S);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || !inn->e.allFinite() ||
      ldlt.vectorD().minCoeff() <= 0.0) {
    result.status = UpdateStatus::fault;
    result.state.fault = true;
    return result;
  }
  result.nis = inn->e.dot(ldlt.solve(inn->e));
  if (config.gate_enabled && result.nis > config.gate_threshold) {
    result.status = UpdateStatus::gated;
    return result;
  }

  // K = P H^T S^-1
  const Eigen::Matrix<double, kStateDim, 6> K = ldlt.solve(inn->H * s.P).transpose();
  const Vec21 dx = K * inn->e;

  result.state = apply_correction(s, dx, &result.divergence_warning);
  const Mat21 IKH = Mat21::Identity() - K * inn->H;
  Mat21 P;
  if (config.joseph_form)
    P = IKH * s.P * IKH.transpose() + K * config.noise.covariance() * K.transpose();
  else
    P = IKH * s.P;
  result.state.P = symmetrize(P);

  if (!finite_state(result.state)) {
    result.state = s;
    result.state.fault = true;
    result.status = UpdateStatus::fault;
  }
  return result;
}

Pose predict_pose(const FilterState& s, double dt, const FilterConfig& config) {
  if (dt < 0.0 || !std::isfinite(dt)) throw std::invalid_argument("predict_pose: negative horizon");
  FilterState x = s;
  double remaining = dt;
  while (remaining > 0.0) {
    const double step = std::min(kPoseStep, remaining);
    x = propagate_mean(x, step, config.orbit);
    remaining -= step;
    if (remaining < 1e-12) break;
  }
  return predicted_pose(x);
}

}  // namespace tumblenav
