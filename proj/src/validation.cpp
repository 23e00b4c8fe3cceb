#include "tumblenav/validation.hpp"

#include <chrono>
#include <cmath>

#include "tumblenav/random.hpp"

namespace tumblenav {

namespace oracle {

Vec21 error_drift(const Vec3& omega_bar, const Vec3& p_bar, const OrbitRate& orbit, const Vec21& dx) {
  const Quaternion dq = SmallRotation{dx.segment<3>(idx::dq)}.quaternion();
  const Vec3 omega = omega_bar + dx.segment<3>(idx::omega);
  const Vec3 p = p_bar + dx.segment<3>(idx::p);

  // d/dt (q (x) q_bar*) with dq/dt = 1/2 w (x) q and dq_bar/dt = 1/2 w_bar (x) q_bar.
  const Quaternion w{omega, 0.0};
  const Quaternion w_bar{omega_bar, 0.0};
  const Vec4 a = otimes_matrix(w) * dq.as_vector();
  const Vec4 b = odot_matrix(w_bar) * dq.as_vector();  // dq (x) w_bar

  InertiaRatios nominal;
  nominal.p = p_bar;
  InertiaRatios actual;
  actual.p = p;

  // The translational error is linear, so any nominal works.
  const Vec3 r_bar(1.0, -2.0, 0.5);
  const Vec3 v_bar(0.01, 0.02, -0.03);

  Vec21 out = Vec21::Zero();
  out.segment<3>(idx::dq) = 0.5 * (a - b).head<3>();
  out.segment<3>(idx::omega) = euler_accel(omega, actual) - euler_accel(omega_bar, nominal);
  out.segment<3>(idx::r_o) = dx.segment<3>(idx::v_o);
  out.segment<3>(idx::v_o) = cw_accel(r_bar + dx.segment<3>(idx::r_o), v_bar + dx.segment<3>(idx::v_o), orbit) -
                             cw_accel(r_bar, v_bar, orbit);
  return out;
}

Vec6d measurement_map(const FilterState& s, const Vec21& dx) {
  const Quaternion dq = SmallRotation{dx.segment<3>(idx::dq)}.quaternion();
  const Quaternion deta = SmallRotation{dx.segment<3>(idx::deta)}.quaternion();
  const Quaternion q = quat_mul(dq, s.q_nom);
  const Quaternion eta = quat_mul(s.eta_nom, deta);
  const Vec3 r_o = s.r_o + dx.segment<3>(idx::r_o);
  const Vec3 rho = s.rho_t + dx.segment<3>(idx::rho_t);

  // Rotate the POR offset with the quaternion sandwich q* (x) rho (x) q.
  // rho is not unit, so the products are formed with the raw operator matrices.
  auto sandwich = [](const Quaternion& a, const Vec3& x) -> Vec3 {
    const Vec4 ax = otimes_matrix(a.conjugate()) * Quaternion{x, 0.0}.as_vector();
    return (odot_matrix(a) * ax).head<3>();
  };
  const Vec3 r_c = r_o + sandwich(q, rho);
  const Vec3 r_c_nom = s.r_o + sandwich(s.q_nom, s.rho_t);

  const Quaternion mu = quat_mul(eta, q);
  const Quaternion h2 = quat_mul(quat_mul(s.eta_nom.conjugate(), mu), s.q_nom.conjugate());

  Vec6d h;
  h << r_c - r_c_nom, h2.v;
  return h;
}

Eigen::MatrixXd central_difference(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x0, double h) {
  const Eigen::VectorXd f0 = f(x0);
  Eigen::MatrixXd J(f0.size(), x0.size());
  for (Eigen::Index j = 0; j < x0.size(); ++j) {
    Eigen::VectorXd xp = x0, xm = x0;
    xp(j) += h;
    xm(j) -= h;
    J.col(j) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return J;
}

DiscreteModel matrix_ode(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Sigma,
                         double T, int steps) {
  const Eigen::Index n = A.rows();
  const Eigen::MatrixXd W = B * Sigma * B.transpose();
  const double h = T / steps;
  Eigen::MatrixXd X = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  auto fx = [&](const Eigen::MatrixXd& x) -> Eigen::MatrixXd { return A * x; };
  auto fp = [&](const Eigen::MatrixXd& p) -> Eigen::MatrixXd { return A * p + p * A.transpose() + W; };
  for (int i = 0; i < steps; ++i) {
    const Eigen::MatrixXd kx1 = fx(X), kx2 = fx(X + 0.5 * h * kx1), kx3 = fx(X + 0.5 * h * kx2),
                          kx4 = fx(X + h * kx3);
    X += h / 6.0 * (kx1 + 2.0 * kx2 + 2.0 * kx3 + kx4);
    const Eigen::MatrixXd kp1 = fp(P), kp2 = fp(P + 0.5 * h * kp1), kp3 = fp(P + 0.5 * h * kp2),
                          kp4 = fp(P + h * kp3);
    P += h / 6.0 * (kp1 + 2.0 * kp2 + 2.0 * kp3 + kp4);
  }
  return {X, 0.5 * (P + P.transpose()), T};
}

std::pair<Vec3, Vec3> cw_closed_form(const Vec3& r0, const Vec3& v0, double n, double t) {
  if (n < 1e-12) return {r0 + v0 * t, v0};
  const double c = std::cos(n * t);
  const double s = std::sin(n * t);
  Vec3 r, v;
  r.x() = (4.0 - 3.0 * c) * r0.x() + s / n * v0.x() + 2.0 / n * (1.0 - c) * v0.y();
  r.y() = 6.0 * (s - n * t) * r0.x() + r0.y() - 2.0 / n * (1.0 - c) * v0.x() + (4.0 * s - 3.0 * n * t) / n * v0.y();
  r.z() = c * r0.z() + s / n * v0.z();
  v.x() = 3.0 * n * s * r0.x() + c * v0.x() + 2.0 * s * v0.y();
  v.y() = -6.0 * n * (1.0 - c) * r0.x() - 2.0 * s * v0.x() + (4.0 * c - 3.0) * v0.y();
  v.z() = -n * s * r0.z() + c * v0.z();
  return {r, v};
}

}  // namespace oracle

namespace {

using Clock = std::chrono::steady_clock;

double uniform(CounterRng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

Vec3 uniform3(CounterRng& rng, double lo, double hi) {
  const double x = uniform(rng, lo, hi);
  const double y = uniform(rng, lo, hi);
  const double z = uniform(rng, lo, hi);
  return {x, y, z};
}

Quaternion random_quaternion(CounterRng& rng) {
  Vec4 c;
  for (int i = 0; i < 4; ++i) c(i) = rng.gaussian();
  return Quaternion::from_vector(c.normalized());
}

CheckResult finish(std::string name, double max_error, double tolerance, Clock::time_point start) {
  CheckResult r;
  r.name = std::move(name);
  r.max_error = max_error;
  r.tolerance = tolerance;
  r.passed = std::isfinite(max_error) && max_error < tolerance;
  r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return r;
}

}  // namespace

CheckResult check_measurement_jacobian(const ValidationHooks& hooks, int points, std::uint64_t seed) {
  const auto start = Clock::now();
  CounterRng rng(seed, 11);
  double worst = 0.0;
  for (int i = 0; i < points; ++i) {
    FilterState s;
    s.q_nom = random_quaternion(rng);
    s.eta_nom = random_quaternion(rng);
    s.omega = uniform3(rng, -0.5, 0.5);
    s.p = uniform3(rng, -0.9, 0.9);
    s.r_o = uniform3(rng, -3.0, 3.0);
    s.v_o = uniform3(rng, -0.05, 0.05);
    s.rho_t = uniform3(rng, -0.5, 0.5);
    const Eigen::MatrixXd fd = oracle::central_difference(
        [&](const Eigen::VectorXd& dx) -> Eigen::VectorXd { return oracle::measurement_map(s, dx); },
        Eigen::VectorXd::Zero(kStateDim));
    worst = std::max(worst, (fd - hooks.measurement_jacobian(s)).cwiseAbs().maxCoeff());
  }
  return finish("measurement_jacobian_fd", worst, 1e-6, start);
}

CheckResult check_drift_jacobian(const ValidationHooks& hooks, int points, std::uint64_t seed) {
  const auto start = Clock::now();
  CounterRng rng(seed, 12);
  double worst = 0.0;
  for (int i = 0; i < points; ++i) {
    const Vec3 omega = uniform3(rng, -0.5, 0.5);
    const Vec3 p = uniform3(rng, -0.9, 0.9);
    const OrbitRate orbit{uniform(rng, 0.0, 2e-3)};
    InertiaRatios ratios = InertiaRatios::from_ratios(p);
    const Eigen::MatrixXd fd = oracle::central_difference(
        [&](const Eigen::VectorXd& dx) -> Eigen::VectorXd { return oracle::error_drift(omega, p, orbit, dx); },
        Eigen::VectorXd::Zero(kStateDim));
    worst = std::max(worst, (fd - hooks.error_model(omega, ratios, orbit).A).cwiseAbs().maxCoeff());
  }
  return finish("drift_jacobian_fd", worst, 1e-6, start);
}

CheckResult check_van_loan_vs_ode(const ValidationHooks& hooks, int points, std::uint64_t seed) {
  const auto start = Clock::now();
  CounterRng rng(seed, 13);
  double worst = 0.0;
  for (int i = 0; i < points; ++i) {
    const Vec3 omega = uniform3(rng, -0.5, 0.5);
    const Vec3 p = uniform3(rng, -0.9, 0.9);
    const OrbitRate orbit{uniform(rng, 0.0, 2e-3)};
    const ContinuousErrorModel cm = hooks.error_model(omega, InertiaRatios::from_ratios(p), orbit);
    const NoiseIntensities noise{uniform(rng, 1e-3, 1.0), uniform(rng, 1e-3, 1.0)};
    const double T = uniform(rng, 0.1, 1.0);
    const Eigen::MatrixXd Sigma = noise_covariance(noise);
    const DiscreteModel vl = van_loan(cm.A, cm.B, Sigma, T);
    const DiscreteModel ode = oracle::matrix_ode(cm.A, cm.B, Sigma, T);
    const double phi_err = (vl.Phi - ode.Phi).norm() / ode.Phi.norm();
    const double q_err = (vl.Q - ode.Q).norm() / ode.Q.norm();
    worst = std::max({worst, phi_err, q_err});
  }
  return finish("van_loan_vs_matrix_ode", worst, 1e-6, start);
}

CheckResult check_double_integrator() {
  const auto start = Clock::now();
  double worst = 0.0;
  for (double T : {0.1, 0.5, 2.0}) {
    const double sigma2 = 0.3;
    Eigen::MatrixXd A(2, 2), B(2, 1), S(1, 1);
    A << 0.0, 1.0, 0.0, 0.0;
    B << 0.0, 1.0;
    S << sigma2;
    const DiscreteModel vl = van_loan(A, B, S, T);
    Eigen::Matrix2d expected;
    expected << T * T * T / 3.0, T * T / 2.0, T * T / 2.0, T;
    expected *= sigma2;
    worst = std::max(worst, (vl.Q - expected).cwiseAbs().maxCoeff() / expected.cwiseAbs().maxCoeff());
  }
  return finish("double_integrator_q", worst, 1e-10, start);
}

CheckResult check_torque_free_conservation() {
  const auto start = Clock::now();
  const Vec3 inertia(4.0, 8.0, 5.0);
  const InertiaRatios ratios = InertiaRatios::from_inertia(inertia);
  TruthState s;
  s.omega = Vec3(0.1, 0.2, 0.15);
  auto momentum = [&](const TruthState& x) { return inertia.cwiseProduct(x.omega).norm(); };
  auto energy = [&](const TruthState& x) { return 0.5 * x.omega.dot(inertia.cwiseProduct(x.omega)); };
  const double h0 = momentum(s);
  const double e0 = energy(s);
  double worst = 0.0;
  for (int k = 0; k < 240; ++k) {
    s = propagate_truth(s, ratios, OrbitRate{}, 0.5);
    worst = std::max({worst, std::abs(momentum(s) - h0) / h0, std::abs(energy(s) - e0) / e0});
  }
  return finish("torque_free_conservation", worst, 1e-9, start);
}

CheckResult check_cw_closed_form() {
  const auto start = Clock::now();
  const double n = 1.13e-3;
  const double period = 2.0 * 3.14159265358979323846 / n;
  TruthState s;
  s.r_o = Vec3(100.0, -50.0, 20.0);
  s.v_o = Vec3::Zero();
  const Vec3 r0 = s.r_o;
  double worst = 0.0;
  const int chunks = 100;
  for (int k = 1; k <= chunks; ++k) {
    s = propagate_truth(s, InertiaRatios{}, OrbitRate{n}, period / chunks);
    const auto [r, v] = oracle::cw_closed_form(r0, Vec3::Zero(), n, period * k / chunks);
    worst = std::max(worst, (s.r_o - r).cwiseAbs().maxCoeff());
  }
  return finish("cw_closed_form", worst, 1e-6, start);
}

std::vector<CheckResult> run_validation(const ValidationHooks& hooks, const ValidationOptions& options) {
  return {check_measurement_jacobian(hooks, options.jacobian_points, options.seed),
          check_drift_jacobian(hooks, options.jacobian_points, options.seed),
          check_van_loan_vs_ode(hooks, options.discretization_points, options.seed),
          check_double_integrator(),
          check_torque_free_conservation(),
          check_cw_closed_form()};
}

}  // namespace tumblenav
