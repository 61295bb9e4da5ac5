#pragma once

#include <Eigen/Dense>
#include <vector>

namespace ddfc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Continuous-time plant  x' = A x + B u,  y = C x,  x(0) = x0,
/// with square input/output (m inputs, m outputs).
struct ContinuousLTI {
  MatrixXd A;
  MatrixXd B;
  MatrixXd C;
  VectorXd x0;

  ContinuousLTI() = default;
  /// Throws DimensionMismatch unless A is n x n, B n x m, C m x n, x0 of size n, n, m >= 1.
  ContinuousLTI(MatrixXd a, MatrixXd b, MatrixXd c, VectorXd x_init);

  Eigen::Index states() const { return A.rows(); }
  Eigen::Index channels() const { return B.cols(); }
};

/// Coordinates (y, y', ..., y^(r-1), eta) = U x in which
///   y^(r) = sum_i L_i y^(i) + S eta + Gamma u,   eta' = K eta + P y.
struct ByrnesIsidoriForm {
  int r = 0;
  std::vector<MatrixXd> L;  // r blocks, m x m
  MatrixXd S;               // m x (n - r m)
  MatrixXd K;               // (n - r m) x (n - r m)
  MatrixXd P;               // (n - r m) x m
  MatrixXd Gamma;           // m x m, C A^(r-1) B
  MatrixXd U;               // n x n
  MatrixXd U_inv;
  VectorXd eta0;            // internal part of U x0

  /// System matrix in transformed coordinates assembled from (L_i, S, K, P).
  MatrixXd assembled_A() const;
  MatrixXd assembled_B() const;
  MatrixXd assembled_C() const;
};

/// Bounds on the symmetric part of the high-gain matrix,
/// gamma_min <= eig((Gamma + Gamma^T) / 2) <= gamma_max.
struct HighGainBounds {
  double gamma_min = 0.0;
  double gamma_max = 0.0;
};

/// Exact zero-order-hold surrogate x_{k+1} = Ad x_k + Bd u_k.
struct DiscreteLTI {
  MatrixXd Ad;
  MatrixXd Bd;
  double tau = 0.0;
};

namespace lti_tol {
inline constexpr double kZero = 1e-12;
inline constexpr double kInvertible = 1e-10;
inline constexpr double kHurwitz = 1e-10;
}  // namespace lti_tol

/// Smallest r with C A^k B = 0 for k < r-1 and C A^(r-1) B invertible.
/// Throws NoRelativeDegree when no r <= n qualifies.
int relative_degree(const ContinuousLTI& sys);

/// Throws NotPositiveDefinite if the symmetric part has an eigenvalue <= 0.
HighGainBounds high_gain_bounds(const MatrixXd& gamma);

/// Builds the transformation from C, CA, ..., CA^(r-1) plus an orthonormal
/// completion whose rows annihilate B, AB, ..., A^(r-1)B.
ByrnesIsidoriForm byrnes_isidori(const ContinuousLTI& sys);

/// True iff the internal dynamics matrix K is Hurwitz; false on any failure.
bool minimum_phase(const ContinuousLTI& sys);

/// Exponential of the augmented matrix [[A, B], [0, 0]] * tau.
DiscreteLTI zoh_discretize(const ContinuousLTI& sys, double tau);

VectorXd simulate_step(const DiscreteLTI& disc, const VectorXd& x, const VectorXd& u);

/// (y, y', ..., y^(r-1)) stacked into a vector of size r*m; y^(i) = C A^i x.
VectorXd output_chain(const ContinuousLTI& sys, const VectorXd& x, int r);

}  // namespace ddfc
