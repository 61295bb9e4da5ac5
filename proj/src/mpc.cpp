#include "ddfc/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "ddfc/errors.hpp"
#include "ddfc/kernels.hpp"

namespace ddfc {

namespace {

bool is_spd(const MatrixXd& M) {
  if (M.rows() != M.cols() || M.rows() == 0) return false;
  if (!M.isApprox(M.transpose(), 1e-12)) return false;
  Eigen::LLT<MatrixXd> llt(M);
  return llt.info() == Eigen::Success;
}

double inf_norm(const VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

VectorXd stack(const std::vector<VectorXd>& seq) {
  if (seq.empty()) return VectorXd();
  const Eigen::Index m = seq.front().size();
  VectorXd out(m * static_cast<Eigen::Index>(seq.size()));
  for (std::size_t i = 0; i < seq.size(); ++i) out.segment(static_cast<Eigen::Index>(i) * m, m) = seq[i];
  return out;
}

std::vector<VectorXd> unstack(const VectorXd& v, Eigen::Index m) {
  std::vector<VectorXd> out;
  for (Eigen::Index i = 0; i + m <= v.size(); i += m) out.push_back(v.segment(i, m));
  return out;
}

// Row blocks of the trajectory basis.
struct Blocks {
  MatrixXd E;   // past inputs then past outputs, 2 m n x k
  MatrixXd Uf;  // future inputs, m L x k
  MatrixXd Yf;  // future outputs, m L x k
};

Blocks split_basis(const OcpProblem& p) {
  const Eigen::Index m = p.m;
  const Eigen::Index mn = m * p.n;
  const Eigen::Index mL = m * p.L;
  const Eigen::Index half = m * p.depth();
  const Eigen::Index k = p.basis.cols();
  Blocks b;
  b.E.resize(2 * mn, k);
  b.E.topRows(mn) = p.basis.middleRows(0, mn);
  b.E.bottomRows(mn) = p.basis.middleRows(half, mn);
  b.Uf = p.basis.middleRows(mn, mL);
  b.Yf = p.basis.middleRows(half + mn, mL);
  return b;
}

// 2 (Yf^T Qbar Yf + Uf^T Rbar Uf + reg I)
MatrixXd reduced_hessian(const Blocks& b, const OcpWeights& w, Eigen::Index m) {
  const Eigen::Index k = b.Uf.cols();
  MatrixXd H = w.nu_reg * MatrixXd::Identity(k, k);
  for (Eigen::Index i = 0; i + m <= b.Uf.rows(); i += m) {
    const auto Ui = b.Uf.middleRows(i, m);
    const auto Yi = b.Yf.middleRows(i, m);
    H.noalias() += Yi.transpose() * w.Q * Yi;
    H.noalias() += Ui.transpose() * w.R * Ui;
  }
  return 2.0 * H;
}

VectorXd reduced_linear(const Blocks& b, const OcpWeights& w, const VectorXd& ref, Eigen::Index m) {
  VectorXd h = VectorXd::Zero(b.Yf.cols());
  for (Eigen::Index i = 0; i + m <= b.Yf.rows(); i += m) {
    h.noalias() -= 2.0 * b.Yf.middleRows(i, m).transpose() * (w.Q * ref.segment(i, m));
  }
  return h;
}

void check_problem(const OcpProblem& p) {
  const Eigen::Index m = p.m;
  if (p.L < 1 || p.n < 0 || m < 1) throw DimensionMismatch("OcpProblem: need L >= 1, n >= 0, m >= 1");
  if (p.basis.rows() != 2 * m * p.depth()) throw DimensionMismatch("OcpProblem: basis row count");
  if (p.u_past.size() != m * p.n || p.y_past.size() != m * p.n) {
    throw DimensionMismatch("OcpProblem: past window must hold n samples");
  }
  if (p.ref.size() != m * p.L) throw DimensionMismatch("OcpProblem: reference window must hold L samples");
  if (p.weights.Q.rows() != m || p.weights.R.rows() != m) throw DimensionMismatch("OcpProblem: weight size");
  if (!(p.u_max >= 0.0)) throw Error("OcpProblem: u_max must be nonnegative");
}

OcpProblem finish_problem(MatrixXd basis, MatrixXd nu_map, const PastWindow& past,
                          const std::vector<VectorXd>& ref_window, const OcpWeights& weights,
                          double u_max, Eigen::Index n, Eigen::Index m) {
  OcpProblem p;
  p.m = m;
  p.n = n;
  p.L = static_cast<Eigen::Index>(ref_window.size());
  p.basis = std::move(basis);
  p.nu_map = std::move(nu_map);
  if (static_cast<Eigen::Index>(past.u.size()) != n || static_cast<Eigen::Index>(past.y.size()) != n) {
    throw DimensionMismatch("assemble_ocp: past window must hold exactly n samples");
  }
  p.u_past = n > 0 ? stack(past.u) : VectorXd();
  p.y_past = n > 0 ? stack(past.y) : VectorXd();
  p.ref = stack(ref_window);
  p.weights = weights;
  p.u_max = u_max;
  check_problem(p);
  return p;
}

}  // namespace

OcpWeights::OcpWeights(MatrixXd q, MatrixXd r, double reg) : Q(std::move(q)), R(std::move(r)), nu_reg(reg) {
  if (!is_spd(Q)) throw NotPositiveDefinite("OcpWeights: Q must be symmetric positive definite");
  if (!is_spd(R)) throw NotPositiveDefinite("OcpWeights: R must be symmetric positive definite");
  if (Q.rows() != R.rows()) throw DimensionMismatch("OcpWeights: Q and R differ in size");
  if (!(reg >= 0.0)) throw Error("OcpWeights: nu_reg must be nonnegative");
}

OcpWeights OcpWeights::scaled_identity(Eigen::Index m, double q, double r, double reg) {
  return OcpWeights(q * MatrixXd::Identity(m, m), r * MatrixXd::Identity(m, m), reg);
}

double KktResiduals::max() const {
  return std::max({stationarity, equality, inequality, complementarity});
}

OcpProblem assemble_ocp(const HankelPair& hankels, const PastWindow& past,
                        const std::vector<VectorXd>& ref_window, const OcpWeights& weights,
                        double u_max, Eigen::Index n) {
  const Eigen::Index depth = hankels.depth;
  const Eigen::Index L = static_cast<Eigen::Index>(ref_window.size());
  if (depth != L + n) throw DimensionMismatch("assemble_ocp: Hankel depth must equal L + n");
  if (hankels.Hu.rows() != hankels.Hy.rows() || hankels.Hu.cols() != hankels.Hy.cols()) {
    throw DimensionMismatch("assemble_ocp: Hu and Hy differ in shape");
  }
  const Eigen::Index m = hankels.Hu.rows() / depth;
  if (!is_persistently_exciting(dehankel(hankels.Hu, m), L + 2 * n)) {
    throw InsufficientPE("assemble_ocp: input data not persistently exciting of order L + 2n = " +
                         std::to_string(L + 2 * n));
  }
  const Eigen::Index cols = hankels.Hu.cols();
  MatrixXd Dt(cols, 2 * m * depth);
  Dt << hankels.Hu.transpose(), hankels.Hy.transpose();
  const Eigen::Index k = std::min(Dt.rows(), Dt.cols());
  Eigen::HouseholderQR<MatrixXd> qr(Dt);
  const MatrixXd R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  MatrixXd nu_map = qr.householderQ() * MatrixXd::Identity(cols, k);
  return finish_problem(R.transpose(), std::move(nu_map), past, ref_window, weights, u_max, n, m);
}

OcpProblem assemble_ocp(const TrajectoryFactor& factor, const PastWindow& past,
                        const std::vector<VectorXd>& ref_window, const OcpWeights& weights,
                        double u_max, Eigen::Index n) {
  const Eigen::Index L = static_cast<Eigen::Index>(ref_window.size());
  if (factor.depth() != L + n) throw DimensionMismatch("assemble_ocp: factor depth must equal L + n");
  return finish_problem(factor.basis(), MatrixXd(), past, ref_window, weights, u_max, n,
                        factor.channels());
}

struct OcpSolver::Cache {
  // key
  MatrixXd basis;
  MatrixXd Q;
  MatrixXd R;
  double nu_reg = -1.0;
  Eigen::Index m = 0, n = 0, L = 0;
  // reduced problem
  Blocks blocks;
  MatrixXd H;
  MatrixXd Y1;  // range part of the equality constraints
  MatrixXd R1;
  Eigen::VectorXi perm;
  Eigen::Index eq_rank = 0;
  MatrixXd Z;   // null space of the equality constraints
  MatrixXd G;   // Z^T H Z
  MatrixXd F;   // Uf Z
  double rho = 1.0;
  Eigen::LLT<MatrixXd> admm_llt;
  Eigen::LLT<MatrixXd> plain_llt;
  // warm start
  VectorXd z;
  VectorXd y;

  bool matches(const OcpProblem& p) const {
    return m == p.m && n == p.n && L == p.L && nu_reg == p.weights.nu_reg &&
           basis.rows() == p.basis.rows() && basis.cols() == p.basis.cols() && basis == p.basis &&
           Q == p.weights.Q && R == p.weights.R;
  }
};

OcpSolver::OcpSolver(AdmmSettings settings) : settings_(settings) {}
OcpSolver::~OcpSolver() = default;
OcpSolver::OcpSolver(OcpSolver&&) noexcept = default;
OcpSolver& OcpSolver::operator=(OcpSolver&&) noexcept = default;

void OcpSolver::reset() { cache_.reset(); }

OcpSolution OcpSolver::solve(const OcpProblem& p) {
  check_problem(p);
  const Eigen::Index m = p.m;
  const Eigen::Index mL = m * p.L;

  if (!cache_ || !cache_->matches(p)) {
    auto fresh = std::make_unique<Cache>();
    Cache& c = *fresh;
    c.basis = p.basis;
    c.Q = p.weights.Q;
    c.R = p.weights.R;
    c.nu_reg = p.weights.nu_reg;
    c.m = m;
    c.n = p.n;
    c.L = p.L;
    c.blocks = split_basis(p);
    c.H = reduced_hessian(c.blocks, p.weights, m);
    const Eigen::Index k = p.basis.cols();

    if (c.blocks.E.rows() > 0) {
      const MatrixXd Et = c.blocks.E.transpose();
      Eigen::ColPivHouseholderQR<MatrixXd> qr(Et);
      qr.setThreshold(static_cast<double>(std::max(Et.rows(), Et.cols())) *
                      std::numeric_limits<double>::epsilon() * 1e3);
      c.eq_rank = qr.rank();
      const MatrixXd Qe = qr.householderQ() * MatrixXd::Identity(k, k);
      c.Y1 = Qe.leftCols(c.eq_rank);
      c.Z = Qe.rightCols(k - c.eq_rank);
      c.R1 = qr.matrixR().topLeftCorner(c.eq_rank, c.eq_rank).triangularView<Eigen::Upper>();
      c.perm = qr.colsPermutation().indices();
    } else {
      c.eq_rank = 0;
      c.Y1.resize(k, 0);
      c.Z = MatrixXd::Identity(k, k);
    }
    c.G = c.Z.transpose() * c.H * c.Z;
    c.F = c.blocks.Uf * c.Z;
    if (c.G.rows() > 0) {
      const MatrixXd FtF = c.F.transpose() * c.F;
      const double tf = FtF.trace();
      c.rho = tf > 0.0 ? std::max(c.G.trace() / tf, 1e-12) : 1.0;
      c.plain_llt.compute(c.G);
      c.admm_llt.compute(c.G + c.rho * FtF);
      if (c.plain_llt.info() != Eigen::Success || c.admm_llt.info() != Eigen::Success) {
        throw SingularKKT("reduced KKT matrix is not positive definite (nu_reg = " +
                          std::to_string(p.weights.nu_reg) + ")");
      }
    }
    // carry the warm start over when only the data changed
    if (cache_ && cache_->z.size() == mL) {
      c.z = cache_->z;
      c.y = cache_->y;
    }
    cache_ = std::move(fresh);
    ++factorizations_;
  }
  Cache& c = *cache_;

  // particular solution of the equality constraints
  const Eigen::Index k = p.basis.cols();
  VectorXd zeta_p = VectorXd::Zero(k);
  if (c.eq_rank > 0) {
    VectorXd b(2 * m * p.n);
    b << p.u_past, p.y_past;
    VectorXd pb(b.size());
    for (Eigen::Index i = 0; i < b.size(); ++i) pb(i) = b(c.perm(i));
    const VectorXd v1 =
        c.R1.transpose().triangularView<Eigen::Lower>().solve(pb.head(c.eq_rank));
    zeta_p = c.Y1 * v1;
  }
  const VectorXd h = reduced_linear(c.blocks, p.weights, p.ref, m);
  const VectorXd g = c.Z.transpose() * (c.H * zeta_p + h);
  const VectorXd f0 = c.blocks.Uf * zeta_p;

  OcpSolution sol;
  VectorXd w = VectorXd::Zero(c.Z.cols());
  VectorXd duals = VectorXd::Zero(mL);
  bool converged = false;
  int iters = 0;

  if (c.G.rows() == 0) {
    converged = true;
  } else if (!std::isfinite(p.u_max)) {
    w = c.plain_llt.solve(-g);
    converged = true;
  } else {
    const auto& kern = kernels::active();
    VectorXd z = VectorXd::Zero(mL);
    VectorXd y = VectorXd::Zero(mL);
    if (settings_.warm_start && c.z.size() == mL) {
      z = c.z;
      y = c.y;
    }
    VectorXd z_prev(mL);
    VectorXd s(mL);
    for (iters = 1; iters <= settings_.max_iter; ++iters) {
      w = c.admm_llt.solve(-g + c.F.transpose() * (c.rho * (z - f0) - y));
      s.noalias() = c.F * w;
      s += f0;
      z_prev = z;
      const double primal = kern.admm_project(std::span<const double>(s.data(), mL),
                                              std::span<double>(z.data(), mL),
                                              std::span<double>(y.data(), mL), c.rho, p.u_max, m);
      const double dual = c.rho * inf_norm(c.F.transpose() * (z - z_prev));
      const double p_scale = std::max({1.0, inf_norm(s), inf_norm(z)});
      const double d_scale =
          std::max({1.0, inf_norm(c.G * w), inf_norm(g), inf_norm(c.F.transpose() * y)});
      if (primal <= settings_.eps * p_scale && dual <= settings_.eps * d_scale) {
        converged = true;
        break;
      }
    }
    iters = std::min(iters, settings_.max_iter);
    duals = y;

    // Active-set polish: fix the saturated inputs at the bound and solve the
    // remaining equality-constrained problem exactly. Box constraints only.
    if (settings_.polish && m == 1) {
      std::vector<Eigen::Index> active;
      for (Eigen::Index i = 0; i < mL; ++i) {
        if (std::abs(z(i)) >= p.u_max * (1.0 - 1e-12)) active.push_back(i);
      }
      const Eigen::Index na = static_cast<Eigen::Index>(active.size());
      const Eigen::Index nw = w.size();
      MatrixXd kkt = MatrixXd::Zero(nw + na, nw + na);
      VectorXd rhs(nw + na);
      kkt.topLeftCorner(nw, nw) = c.G;
      rhs.head(nw) = -g;
      for (Eigen::Index a = 0; a < na; ++a) {
        const Eigen::Index i = active[a];
        kkt.block(nw + a, 0, 1, nw) = c.F.row(i);
        kkt.block(0, nw + a, nw, 1) = c.F.row(i).transpose();
        rhs(nw + a) = std::copysign(p.u_max, z(i)) - f0(i);
      }
      Eigen::PartialPivLU<MatrixXd> lu(kkt);
      const VectorXd sol_kkt = lu.solve(rhs);
      const VectorXd w_pol = sol_kkt.head(nw);
      const VectorXd s_pol = c.F * w_pol + f0;
      bool ok = sol_kkt.allFinite() && (kkt * sol_kkt - rhs).cwiseAbs().maxCoeff() <=
                                           1e-9 * std::max(1.0, inf_norm(rhs));
      const double lam_scale = std::max(1.0, inf_norm(duals));
      for (Eigen::Index i = 0; ok && i < mL; ++i) {
        if (std::abs(s_pol(i)) > p.u_max * (1.0 + 1e-9)) ok = false;
      }
      for (Eigen::Index a = 0; ok && a < na; ++a) {
        // multiplier of u_i = +-u_max must push outward
        if (sol_kkt(nw + a) * std::copysign(1.0, z(active[a])) < -1e-9 * lam_scale) ok = false;
      }
      if (ok) {
        w = w_pol;
        duals.setZero();
        for (Eigen::Index a = 0; a < na; ++a) duals(active[a]) = sol_kkt(nw + a);
        sol.polished = true;
        converged = true;
      }
    }

    if (settings_.warm_start) {
      // shift by one step; the last block is repeated
      c.z.resize(mL);
      c.y.resize(mL);
      c.z.head(mL - m) = z.tail(mL - m);
      c.z.tail(m) = z.tail(m);
      c.y.head(mL - m) = y.tail(mL - m);
      c.y.tail(m) = y.tail(m);
    }
  }

  const VectorXd zeta = zeta_p + c.Z * w;
  const VectorXd u_plan = c.blocks.Uf * zeta;
  const VectorXd y_plan = c.blocks.Yf * zeta;
  if (!zeta.allFinite() || !u_plan.allFinite()) {
    OcpSolution failed;
    failed.u_plan.assign(p.L, VectorXd::Zero(m));
    failed.y_plan.assign(p.L, VectorXd::Zero(m));
    failed.ball_duals = VectorXd::Zero(mL);
    failed.iterations = iters;
    failed.status = OcpStatus::Fallback;
    c.z.resize(0);
    c.y.resize(0);
    return failed;
  }

  sol.coeffs = zeta;
  if (p.nu_map.size() > 0) sol.nu = p.nu_map * zeta;
  sol.u_plan = unstack(u_plan, m);
  sol.y_plan = unstack(y_plan, m);
  sol.ball_duals = duals;
  sol.iterations = iters;
  sol.status = converged ? OcpStatus::Optimal : OcpStatus::MaxIters;
  double obj = p.weights.nu_reg * zeta.squaredNorm();
  for (Eigen::Index i = 0; i < p.L; ++i) {
    const VectorXd ey = y_plan.segment(i * m, m) - p.ref.segment(i * m, m);
    const VectorXd ui = u_plan.segment(i * m, m);
    obj += ey.dot(p.weights.Q * ey) + ui.dot(p.weights.R * ui);
  }
  sol.objective = obj;
  return sol;
}

OcpSolution solve_ocp(const OcpProblem& problem, const AdmmSettings& settings) {
  OcpSolver solver(settings);
  return solver.solve(problem);
}

KktResiduals kkt_residuals(const OcpProblem& p, const OcpSolution& sol) {
  check_problem(p);
  const Eigen::Index m = p.m;
  const Blocks b = split_basis(p);
  const VectorXd& zeta = sol.coeffs;
  const MatrixXd H = reduced_hessian(b, p.weights, m);
  const VectorXd h = reduced_linear(b, p.weights, p.ref, m);
  const VectorXd u = b.Uf * zeta;
  VectorXd y = sol.ball_duals.size() == u.size() ? sol.ball_duals : VectorXd::Zero(u.size());

  const VectorXd Hz = H * zeta;
  const VectorXd Uty = b.Uf.transpose() * y;
  VectorXd grad = Hz + h + Uty;
  if (b.E.rows() > 0) {
    // best equality multipliers for this point
    const VectorXd lambda = b.E.transpose().colPivHouseholderQr().solve(-grad);
    grad += b.E.transpose() * lambda;
  }
  const double scale = std::max({1.0, inf_norm(Hz), inf_norm(h), inf_norm(Uty)});

  KktResiduals out;
  out.stationarity = inf_norm(grad) / scale;
  if (b.E.rows() > 0) {
    VectorXd rhs(b.E.rows());
    rhs << p.u_past, p.y_past;
    out.equality = inf_norm(b.E * zeta - rhs) / std::max(1.0, inf_norm(rhs));
  }
  if (std::isfinite(p.u_max)) {
    const double umax_scale = std::max(1.0, p.u_max);
    for (Eigen::Index i = 0; i + m <= u.size(); i += m) {
      const VectorXd uk = u.segment(i, m);
      const VectorXd yk = y.segment(i, m);
      const double nrm = uk.norm();
      out.inequality = std::max(out.inequality, std::max(0.0, nrm - p.u_max) / umax_scale);
      double misalign = yk.norm();
      double slack_term = 0.0;
      if (nrm > 0.0) {
        const VectorXd dir = uk / nrm;
        const double mu = std::max(0.0, yk.dot(dir));
        misalign = (yk - mu * dir).norm();
        slack_term = mu * std::max(0.0, p.u_max - nrm) / umax_scale;
      }
      out.complementarity = std::max(out.complementarity, (misalign + slack_term) / scale);
    }
  } else {
    out.complementarity = inf_norm(y) / scale;
  }
  return out;
}

Eigen::Index adaptive_horizon(const DataLog& log, Eigen::Index n, Eigen::Index L_cap) {
  Eigen::Index L = 0;
  while (L < L_cap && is_persistently_exciting(log.inputs(), L + 1 + 2 * n)) ++L;
  return L;
}

VectorXd first_action(const OcpSolution& solution) {
  if (solution.status == OcpStatus::Fallback || solution.u_plan.empty()) {
    throw Error("first_action: no valid plan");
  }
  return solution.u_plan.front();
}

}  // namespace ddfc
