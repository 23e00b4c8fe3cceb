#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tumblenav/discretize.hpp"
#include "tumblenav/dynamics.hpp"
#include "tumblenav/ekf.hpp"

namespace tumblenav {

// Independent reference computations. None of these go through the assembled
// matrices they are used to check.
namespace oracle {

/// Nonlinear error dynamics d(dx)/dt about a nominal trajectory rotating at
/// omega_bar with ratios p_bar (nominal attitude rate held constant).
Vec21 error_drift(const Vec3& omega_bar, const Vec3& p_bar, const OrbitRate& orbit, const Vec21& dx);

/// Innovation-space measurement map h(dx): the pose of the state obtained by
/// composing dx onto `s`, expressed as (r_c - r_c_hat, (eta* (x) mu (x) q*)_v).
Vec6d measurement_map(const FilterState& s, const Vec21& dx);

/// Central-difference Jacobian with step h.
Eigen::MatrixXd central_difference(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x0, double h = 1e-6);

/// Phi and Q by RK4 integration of dX/dt = A X and
/// dP/dt = A P + P A^T + B S B^T with `steps` steps over T.
DiscreteModel matrix_ode(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Sigma,
                         double T, int steps = 2000);

/// Closed-form Clohessy-Wiltshire position and velocity after t seconds.
std::pair<Vec3, Vec3> cw_closed_form(const Vec3& r0, const Vec3& v0, double n, double t);

}  // namespace oracle

struct CheckResult {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  double seconds = 0.0;
};

/// Assembly routines under test. The defaults are the library's; tests swap
/// in faulty versions to confirm that the checks catch them.
struct ValidationHooks {
  std::function<Mat6x21(const FilterState&)> measurement_jacobian = tumblenav::measurement_jacobian;
  std::function<ContinuousErrorModel(const Vec3&, const InertiaRatios&, const OrbitRate&)> error_model =
      tumblenav::continuous_error_model;
};

struct ValidationOptions {
  int jacobian_points = 100;
  int discretization_points = 20;
  std::uint64_t seed = 2024;
};

std::vector<CheckResult> run_validation(const ValidationHooks& hooks = {}, const ValidationOptions& options = {});

// Individual checks, also used by the acceptance suite.
CheckResult check_measurement_jacobian(const ValidationHooks& hooks, int points, std::uint64_t seed);
CheckResult check_drift_jacobian(const ValidationHooks& hooks, int points, std::uint64_t seed);
CheckResult check_van_loan_vs_ode(const ValidationHooks& hooks, int points, std::uint64_t seed);
CheckResult check_double_integrator();
CheckResult check_torque_free_conservation();
CheckResult check_cw_closed_form();

}  // namespace tumblenav
