#include "ddfc/lti.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <string>

#include "ddfc/errors.hpp"

namespace ddfc {

ContinuousLTI::ContinuousLTI(MatrixXd a, MatrixXd b, MatrixXd c, VectorXd x_init)
    : A(std::move(a)), B(std::move(b)), C(std::move(c)), x0(std::move(x_init)) {
  const auto n = A.rows();
  const auto m = B.cols();
  if (n < 1 || m < 1 || A.cols() != n || B.rows() != n || C.rows() != m || C.cols() != n ||
      x0.size() != n) {
    throw DimensionMismatch("ContinuousLTI: expected A n x n, B n x m, C m x n, x0 n (got A " +
                            std::to_string(A.rows()) + "x" + std::to_string(A.cols()) + ", B " +
                            std::to_string(B.rows()) + "x" + std::to_string(B.cols()) + ", C " +
                            std::to_string(C.rows()) + "x" + std::to_string(C.cols()) + ")");
  }
}

int relative_degree(const ContinuousLTI& sys) {
  const auto n = sys.states();
  MatrixXd CAk = sys.C;
  for (Eigen::Index k = 0; k < n; ++k) {
    const MatrixXd markov = CAk * sys.B;
    if (markov.cwiseAbs().maxCoeff() >= lti_tol::kZero) {
      Eigen::JacobiSVD<MatrixXd> svd(markov);
      if (svd.singularValues().minCoeff() > lti_tol::kInvertible) return static_cast<int>(k + 1);
      throw NoRelativeDegree("first nonzero Markov parameter C A^" + std::to_string(k) +
                             " B is singular");
    }
    CAk = CAk * sys.A;
  }
  throw NoRelativeDegree("C A^k B vanishes for all k < n");
}

HighGainBounds high_gain_bounds(const MatrixXd& gamma) {
  if (gamma.rows() != gamma.cols() || gamma.rows() == 0) {
    throw DimensionMismatch("high_gain_bounds: Gamma must be square");
  }
  const MatrixXd sym = 0.5 * (gamma + gamma.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) {
    throw NotPositiveDefinite("symmetric part of Gamma has eigenvalue " + std::to_string(lo));
  }
  return {lo, hi};
}

ByrnesIsidoriForm byrnes_isidori(const ContinuousLTI& sys) {
  const int r = relative_degree(sys);
  const auto n = sys.states();
  const auto m = sys.channels();
  const auto rm = r * m;
  const auto q = n - rm;

  MatrixXd Cr(rm, n);   // C; CA; ...; CA^(r-1)
  MatrixXd Br(n, rm);   // B, AB, ..., A^(r-1)B
  {
    MatrixXd row = sys.C;
    MatrixXd col = sys.B;
    for (int i = 0; i < r; ++i) {
      Cr.middleRows(i * m, m) = row;
      Br.middleCols(i * m, m) = col;
      row = row * sys.A;
      col = sys.A * col;
    }
  }
  const MatrixXd CAr = Cr.bottomRows(m) * sys.A;  // C A^r

  const MatrixXd gram = Cr * Br;  // block Hankel of Markov parameters
  Eigen::FullPivLU<MatrixXd> gram_lu(gram);
  if (!gram_lu.isInvertible()) throw DegenerateCompletion("C_r B_r is singular");
  const MatrixXd gram_inv = gram_lu.inverse();

  // Orthonormal basis V of ker C_r from a complete orthogonal decomposition of C_r^T.
  MatrixXd V(n, q);
  if (q > 0) {
    Eigen::ColPivHouseholderQR<MatrixXd> qr(Cr.transpose());
    qr.setThreshold(lti_tol::kZero);
    if (qr.rank() != rm) throw DegenerateCompletion("output chain rows are rank deficient");
    const MatrixXd Qfull = qr.householderQ() * MatrixXd::Identity(n, n);
    V = Qfull.rightCols(q);
  }
  const MatrixXd projector = MatrixXd::Identity(n, n) - Br * gram_inv * Cr;
  const MatrixXd N = V.transpose() * projector;  // V^T V = I, N B_r = 0

  ByrnesIsidoriForm bif;
  bif.r = r;
  bif.U.resize(n, n);
  bif.U.topRows(rm) = Cr;
  if (q > 0) bif.U.bottomRows(q) = N;
  bif.U_inv.resize(n, n);
  bif.U_inv.leftCols(rm) = Br * gram_inv;
  if (q > 0) bif.U_inv.rightCols(q) = V;

  const double cond_check = (bif.U * bif.U_inv - MatrixXd::Identity(n, n)).norm();
  if (!(cond_check < 1e-8)) throw DegenerateCompletion("basis completion is not invertible");

  const MatrixXd Lrow = CAr * Br * gram_inv;  // m x rm
  bif.L.reserve(r);
  for (int i = 0; i < r; ++i) bif.L.push_back(Lrow.middleCols(i * m, m));
  bif.S = CAr * V;
  bif.K = N * sys.A * V;
  bif.Gamma = gram.bottomLeftCorner(m, m);
  if (q > 0) {
    bif.P = (N * sys.A * Br * gram_inv).leftCols(m);
    bif.eta0 = N * sys.x0;
  } else {
    bif.P.resize(0, m);
    bif.eta0.resize(0);
  }
  return bif;
}

MatrixXd ByrnesIsidoriForm::assembled_A() const {
  const auto m = Gamma.rows();
  const auto q = K.rows();
  const auto rm = r * m;
  MatrixXd out = MatrixXd::Zero(rm + q, rm + q);
  for (int i = 0; i + 1 < r; ++i) out.block(i * m, (i + 1) * m, m, m).setIdentity();
  for (int i = 0; i < r; ++i) out.block((r - 1) * m, i * m, m, m) = L[i];
  if (q > 0) {
    out.block((r - 1) * m, rm, m, q) = S;
    out.block(rm, 0, q, m) = P;
    out.bottomRightCorner(q, q) = K;
  }
  return out;
}

MatrixXd ByrnesIsidoriForm::assembled_B() const {
  const auto m = Gamma.rows();
  MatrixXd out = MatrixXd::Zero(r * m + K.rows(), m);
  out.block((r - 1) * m, 0, m, m) = Gamma;
  return out;
}

MatrixXd ByrnesIsidoriForm::assembled_C() const {
  const auto m = Gamma.rows();
  MatrixXd out = MatrixXd::Zero(m, r * m + K.rows());
  out.leftCols(m).setIdentity();
  return out;
}

bool minimum_phase(const ContinuousLTI& sys) {
  try {
    const ByrnesIsidoriForm bif = byrnes_isidori(sys);
    if (bif.K.rows() == 0) return true;
    Eigen::EigenSolver<MatrixXd> eig(bif.K, false);
    return eig.eigenvalues().real().maxCoeff() < -lti_tol::kHurwitz;
  } catch (const std::exception&) {
    return false;
  }
}

DiscreteLTI zoh_discretize(const ContinuousLTI& sys, double tau) {
  if (!(tau > 0.0)) throw Error("zoh_discretize: tau must be positive");
  const auto n = sys.states();
  const auto m = sys.channels();
  MatrixXd aug = MatrixXd::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = sys.A * tau;
  aug.topRightCorner(n, m) = sys.B * tau;
  const MatrixXd e = aug.exp();
  return {e.topLeftCorner(n, n), e.topRightCorner(n, m), tau};
}

VectorXd simulate_step(const DiscreteLTI& disc, const VectorXd& x, const VectorXd& u) {
  return disc.Ad * x + disc.Bd * u;
}

VectorXd output_chain(const ContinuousLTI& sys, const VectorXd& x, int r) {
  const auto m = sys.channels();
  VectorXd out(r * m);
  VectorXd Aix = x;
  for (int i = 0; i < r; ++i) {
    out.segment(i * m, m) = sys.C * Aix;
    Aix = sys.A * Aix;
  }
  return out;
}

}  // namespace ddfc
