#pragma once

#include <Eigen/Dense>

namespace polymkt {

/// Dense matrix exponential by scaling-and-squaring with the diagonal
/// Pade(13,13) approximant, the standard double-precision operating point
/// (theta_13 = 5.37...). Throws std::runtime_error on non-finite input.
Eigen::MatrixXd expm(const Eigen::MatrixXd& A);

}  // namespace polymkt
