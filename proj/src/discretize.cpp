#include "tumblenav/discretize.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace tumblenav {

namespace {

// Degree-13 Pade coefficients and the 1-norm bound theta_13 below which no
// scaling is needed for double precision.
constexpr std::array<double, 14> kPade13Raw = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
    129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
    1323241920.0,        40840800.0,          960960.0,           16380.0,
    182.0,               1.0};
constexpr double kTheta13 = 5.371920351148152;

// Scaled so that b0 = 1: rows and columns of M that are zero then give exact
// identity rows in the result.
constexpr std::array<double, 14> normalized_pade() {
  std::array<double, 14> b{};
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = kPade13Raw[i] / kPade13Raw[0];
  return b;
}
constexpr std::array<double, 14> kPade13 = normalized_pade();

}  // namespace

Eigen::MatrixXd expm(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols()) throw std::invalid_argument("expm: matrix must be square");
  if (M.rows() > 64) throw std::invalid_argument("expm: dimension exceeds 64");
  if (!M.allFinite()) throw std::domain_error("expm: non-finite input");

  const Eigen::Index n = M.rows();
  if (n == 0) return M;

  const double norm1 = M.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > kTheta13) squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / kTheta13))));
  const Eigen::MatrixXd A = M / std::ldexp(1.0, squarings);

  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd A2 = A * A;
  const Eigen::MatrixXd A4 = A2 * A2;
  const Eigen::MatrixXd A6 = A4 * A2;
  const auto& b = kPade13;

  Eigen::MatrixXd U_inner = b[13] * A6 + b[11] * A4 + b[9] * A2;
  Eigen::MatrixXd U = A * (A6 * U_inner + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I);
  Eigen::MatrixXd V_inner = b[12] * A6 + b[10] * A4 + b[8] * A2;
  Eigen::MatrixXd V = A6 * V_inner + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;

  Eigen::MatrixXd R = (V - U).partialPivLu().solve(V + U);
  for (int i = 0; i < squarings; ++i) R = R * R;
  if (!R.allFinite()) throw std::domain_error("expm: overflow");
  return R;
}

DiscreteModel van_loan(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Sigma,
                       double T) {
  if (!(T > 0.0)) throw std::invalid_argument("van_loan: sampling time must be positive");
  const Eigen::Index n = A.rows();
  if (A.cols() != n || B.rows() != n || Sigma.rows() != B.cols() || Sigma.cols() != B.cols())
    throw std::invalid_argument("van_loan: inconsistent dimensions");

  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  M.topLeftCorner(n, n) = -A;
  M.topRightCorner(n, n) = B * Sigma * B.transpose();
  M.bottomRightCorner(n, n) = A.transpose();

  const Eigen::MatrixXd D = expm(M * T);

  DiscreteModel out;
  out.T = T;
  out.Phi = D.bottomRightCorner(n, n).transpose();
  const Eigen::MatrixXd Q = out.Phi * D.topRightCorner(n, n);
  out.Q = 0.5 * (Q + Q.transpose());
  return out;
}

void add_parameter_noise(DiscreteModel& model, const ParameterRandomWalk& walk) {
  if (model.Q.rows() != kStateDim) throw std::invalid_argument("add_parameter_noise: expects the 21-state model");
  for (int i = 0; i < 3; ++i) {
    model.Q(idx::p + i, idx::p + i) += walk.p * model.T;
    model.Q(idx::rho_t + i, idx::rho_t + i) += walk.rho_t * model.T;
    model.Q(idx::deta + i, idx::deta + i) += walk.eta * model.T;
  }
}

}  // namespace tumblenav
