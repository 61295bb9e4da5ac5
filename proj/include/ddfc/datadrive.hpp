#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "ddfc/lti.hpp"

namespace ddfc {

using RowMajorMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Synchronously recorded input/output samples (u_k, y_k), k = 0..N-1.
class DataLog {
 public:
  explicit DataLog(Eigen::Index channels = 1) : m_(channels) {}

  void append(const VectorXd& u, const VectorXd& y);

  std::size_t size() const { return u_.size(); }
  bool empty() const { return u_.empty(); }
  Eigen::Index channels() const { return m_; }
  const std::vector<VectorXd>& inputs() const { return u_; }
  const std::vector<VectorXd>& outputs() const { return y_; }

 private:
  Eigen::Index m_;
  std::vector<VectorXd> u_;
  std::vector<VectorXd> y_;
};

struct HankelPair {
  MatrixXd Hu;
  MatrixXd Hy;
  Eigen::Index depth = 0;
};

/// Block Hankel matrix with m*depth rows and N-depth+1 columns; block (i,j) = seq[i+j].
/// Throws TooShort if N < depth.
MatrixXd hankel(const std::vector<VectorXd>& seq, Eigen::Index depth);

/// Inverse of hankel(): the sequence read off the first block column and the last block row.
std::vector<VectorXd> dehankel(const MatrixXd& H, Eigen::Index channels);

HankelPair hankel_pair(const DataLog& log, Eigen::Index depth);

/// Singular values of a matrix with more columns than rows, through a QR of its transpose.
VectorXd wide_singular_values(const MatrixXd& M);

/// Numerical rank threshold sigma_max * max(rows, cols) * eps * 1e3.
double rank_threshold(double sigma_max, Eigen::Index rows, Eigen::Index cols);

/// Full row rank of hankel(seq, order); false when the sequence is too short.
bool is_persistently_exciting(const std::vector<VectorXd>& seq, Eigen::Index order);

/// Largest order with is_persistently_exciting; 0 for an empty or all-zero sequence.
Eigen::Index max_pe_order(const std::vector<VectorXd>& seq);

/// Relative least-squares residual of the stacked window [u; y] against the
/// column space of [Hu; Hy].
double lemma_residual(const std::vector<VectorXd>& traj_u, const std::vector<VectorXd>& traj_y,
                      const HankelPair& hankels);

/// Tracks the persistency-of-excitation order of a growing sequence.
/// The order never decreases; each query only tests the next order up.
class PeTracker {
 public:
  /// Raises the order as far as the sequence allows, capped at `cap`.
  Eigen::Index update(const std::vector<VectorXd>& seq, Eigen::Index cap);
  Eigen::Index order() const { return order_; }

 private:
  Eigen::Index order_ = 0;
};

/// Upper-triangular R with R^T R = D D^T for the stacked Hankel D = [Hu; Hy]
/// of a given depth, i.e. D = R^T Q^T for some orthonormal Q. The trajectory
/// basis R^T spans the same column space as D, and D nu = R^T zeta with
/// ||zeta|| = ||nu|| for nu in the row space of D.
///
/// Appending one sample to the log adds one Hankel column, which is folded
/// into R with a sweep of plane rotations.
class TrajectoryFactor {
 public:
  TrajectoryFactor() = default;
  TrajectoryFactor(const DataLog& log, Eigen::Index depth);

  /// Folds in every sample of `log` not seen yet.
  void sync(const DataLog& log);

  Eigen::Index depth() const { return depth_; }
  Eigen::Index channels() const { return m_; }
  std::size_t samples() const { return seen_; }
  std::size_t columns() const { return seen_ >= static_cast<std::size_t>(depth_) ? seen_ - depth_ + 1 : 0; }

  /// R^T, 2 m depth rows; rows ordered [u_0..u_{depth-1}; y_0..y_{depth-1}].
  MatrixXd basis() const { return R_.transpose(); }

 private:
  void fold_column(Eigen::Ref<VectorXd> column);

  Eigen::Index depth_ = 0;
  Eigen::Index m_ = 1;
  std::size_t seen_ = 0;
  RowMajorMatrixXd R_;
};

}  // namespace ddfc
