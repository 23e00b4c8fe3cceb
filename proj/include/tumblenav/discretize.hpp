#pragma once

#include <Eigen/Dense>

#include "tumblenav/dynamics.hpp"

namespace tumblenav {

/// Matrix exponential by scaling and squaring with the degree-13 diagonal
/// Pade approximant (Higham 2005). Throws std::domain_error on non-finite
/// input and std::invalid_argument for non-square or n > 64 input.
Eigen::MatrixXd expm(const Eigen::MatrixXd& M);

struct DiscreteModel {
  Eigen::MatrixXd Phi;  // state transition over T
  Eigen::MatrixXd Q;    // process-noise covariance, symmetric
  double T = 0.0;
};

/// Van Loan: D = expm([-A, B S B^T; 0, A^T] T), Phi = D22^T, Q = Phi D12.
DiscreteModel van_loan(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Sigma,
                       double T);

/// Artificial random-walk intensities on the parameter states. All zero keeps
/// the parameters constant, which is the default.
struct ParameterRandomWalk {
  double p = 0.0;      // 1/s (per sqrt s of the walk, squared)
  double rho_t = 0.0;  // m^2/s
  double eta = 0.0;    // 1/s

  bool any() const { return p > 0.0 || rho_t > 0.0 || eta > 0.0; }
};

/// Adds intensity * T to the diagonal of the p, rho_t and deta_v blocks of a
/// 21-state Q.
void add_parameter_noise(DiscreteModel& model, const ParameterRandomWalk& walk);

}  // namespace tumblenav
