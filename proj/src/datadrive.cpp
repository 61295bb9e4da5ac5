#include "ddfc/datadrive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>

#include "ddfc/errors.hpp"
#include "ddfc/kernels.hpp"

namespace ddfc {

void DataLog::append(const VectorXd& u, const VectorXd& y) {
  if (u.size() != m_ || y.size() != m_) throw DimensionMismatch("DataLog::append: wrong sample size");
  u_.push_back(u);
  y_.push_back(y);
}

MatrixXd hankel(const std::vector<VectorXd>& seq, Eigen::Index depth) {
  if (depth < 1) throw Error("hankel: depth must be positive");
  const auto N = static_cast<Eigen::Index>(seq.size());
  if (N < depth) {
    throw TooShort("hankel: " + std::to_string(N) + " samples < depth " + std::to_string(depth));
  }
  const Eigen::Index m = seq.front().size();
  const Eigen::Index cols = N - depth + 1;
  MatrixXd H(m * depth, cols);
  for (Eigen::Index i = 0; i < depth; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) H.block(i * m, j, m, 1) = seq[i + j];
  }
  return H;
}

std::vector<VectorXd> dehankel(const MatrixXd& H, Eigen::Index channels) {
  if (channels < 1 || H.rows() % channels != 0) throw DimensionMismatch("dehankel: bad block size");
  const Eigen::Index depth = H.rows() / channels;
  std::vector<VectorXd> seq;
  seq.reserve(depth + H.cols() - 1);
  for (Eigen::Index i = 0; i < depth; ++i) seq.push_back(H.block(i * channels, 0, channels, 1));
  for (Eigen::Index j = 1; j < H.cols(); ++j) {
    seq.push_back(H.block((depth - 1) * channels, j, channels, 1));
  }
  return seq;
}

HankelPair hankel_pair(const DataLog& log, Eigen::Index depth) {
  return {hankel(log.inputs(), depth), hankel(log.outputs(), depth), depth};
}

double rank_threshold(double sigma_max, Eigen::Index rows, Eigen::Index cols) {
  return sigma_max * static_cast<double>(std::max(rows, cols)) *
         std::numeric_limits<double>::epsilon() * 1e3;
}

VectorXd wide_singular_values(const MatrixXd& M) {
  if (M.size() == 0) return VectorXd();
  if (M.cols() <= M.rows()) return Eigen::JacobiSVD<MatrixXd>(M).singularValues();
  Eigen::HouseholderQR<MatrixXd> qr(M.transpose());
  const MatrixXd R = qr.matrixQR().topRows(M.rows()).triangularView<Eigen::Upper>();
  return Eigen::JacobiSVD<MatrixXd>(R).singularValues();
}

bool is_persistently_exciting(const std::vector<VectorXd>& seq, Eigen::Index order) {
  if (order < 1 || static_cast<Eigen::Index>(seq.size()) < order) return false;
  const MatrixXd H = hankel(seq, order);
  if (H.cols() < H.rows()) return false;
  const VectorXd sv = wide_singular_values(H);
  if (sv.size() == 0 || sv(0) == 0.0) return false;
  return sv(sv.size() - 1) > rank_threshold(sv(0), H.rows(), H.cols());
}

Eigen::Index max_pe_order(const std::vector<VectorXd>& seq) {
  Eigen::Index order = 0;
  while (is_persistently_exciting(seq, order + 1)) ++order;
  return order;
}

double lemma_residual(const std::vector<VectorXd>& traj_u, const std::vector<VectorXd>& traj_y,
                      const HankelPair& hankels) {
  const auto L = static_cast<Eigen::Index>(traj_u.size());
  if (L != hankels.depth || static_cast<Eigen::Index>(traj_y.size()) != L) {
    throw DimensionMismatch("lemma_residual: trajectory length must equal the Hankel depth");
  }
  const Eigen::Index m = hankels.Hu.rows() / std::max<Eigen::Index>(1, hankels.depth);
  VectorXd w(2 * m * L);
  for (Eigen::Index k = 0; k < L; ++k) {
    if (traj_u[k].size() != m || traj_y[k].size() != m) {
      throw DimensionMismatch("lemma_residual: sample size differs from the data");
    }
    w.segment(k * m, m) = traj_u[k];
    w.segment(m * L + k * m, m) = traj_y[k];
  }
  MatrixXd D(2 * m * L, hankels.Hu.cols());
  D << hankels.Hu, hankels.Hy;

  Eigen::JacobiSVD<MatrixXd> svd(D, Eigen::ComputeThinU);
  const VectorXd& sv = svd.singularValues();
  const double thr = sv.size() ? rank_threshold(sv(0), D.rows(), D.cols()) : 0.0;
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) > thr) ++rank;
  const MatrixXd Ur = svd.matrixU().leftCols(rank);
  const VectorXd resid = w - Ur * (Ur.transpose() * w);
  const double scale = w.norm();
  return scale > 0.0 ? resid.norm() / scale : 0.0;
}

Eigen::Index PeTracker::update(const std::vector<VectorXd>& seq, Eigen::Index cap) {
  while (order_ < cap && is_persistently_exciting(seq, order_ + 1)) ++order_;
  return order_;
}

TrajectoryFactor::TrajectoryFactor(const DataLog& log, Eigen::Index depth)
    : depth_(depth), m_(log.channels()) {
  if (depth < 1) throw Error("TrajectoryFactor: depth must be positive");
  R_ = RowMajorMatrixXd::Zero(2 * m_ * depth_, 2 * m_ * depth_);
  sync(log);
}

void TrajectoryFactor::sync(const DataLog& log) {
  const std::size_t N = log.size();
  const auto depth = static_cast<std::size_t>(depth_);
  VectorXd column(2 * m_ * depth_);
  for (; seen_ < N; ++seen_) {
    if (seen_ + 1 < depth) continue;
    const std::size_t start = seen_ + 1 - depth;
    for (std::size_t i = 0; i < depth; ++i) {
      column.segment(i * m_, m_) = log.inputs()[start + i];
      column.segment(m_ * depth_ + i * m_, m_) = log.outputs()[start + i];
    }
    fold_column(column);
  }
}

void TrajectoryFactor::fold_column(Eigen::Ref<VectorXd> column) {
  const auto& k = kernels::active();
  const Eigen::Index dim = R_.rows();
  for (Eigen::Index i = 0; i < dim; ++i) {
    const double b = column(i);
    if (b == 0.0) continue;
    const double a = R_(i, i);
    const double h = std::hypot(a, b);
    const double c = a / h;
    const double s = b / h;
    const Eigen::Index len = dim - i;
    k.givens_apply(std::span<double>(R_.row(i).data() + i, len),
                   std::span<double>(column.data() + i, len), c, s);
    column(i) = 0.0;
  }
}

}  // namespace ddfc
