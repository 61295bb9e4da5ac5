#pragma once

// Shared helpers and independent oracles for the test suites.

#include <Eigen/Dense>
#include <limits>
#include <random>
#include <vector>

#include "ddfc/datadrive.hpp"
#include "ddfc/lti.hpp"
#include "ddfc/mpc.hpp"

namespace testing {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  MatrixXd M(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) M(i, j) = nd(rng);
  return M;
}

inline VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  return random_matrix(rng, n, 1, scale);
}

/// Continuous A with all eigenvalues having real part <= -margin.
inline MatrixXd random_stable(std::mt19937_64& rng, Eigen::Index n, double margin = 0.1) {
  MatrixXd A = random_matrix(rng, n, n);
  const double shift = Eigen::EigenSolver<MatrixXd>(A, false).eigenvalues().real().maxCoeff();
  return A - (shift + margin) * MatrixXd::Identity(n, n);
}

/// Classic RK4 with the input held constant, `substeps` steps over [0, tau].
inline VectorXd rk4(const MatrixXd& A, const MatrixXd& B, const VectorXd& x0, const VectorXd& u,
                    double tau, int substeps) {
  const double h = tau / substeps;
  VectorXd x = x0;
  const VectorXd Bu = B * u;
  for (int i = 0; i < substeps; ++i) {
    const VectorXd k1 = A * x + Bu;
    const VectorXd k2 = A * (x + 0.5 * h * k1) + Bu;
    const VectorXd k3 = A * (x + 0.5 * h * k2) + Bu;
    const VectorXd k4 = A * (x + h * k3) + Bu;
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

struct DiscreteSystem {
  MatrixXd A, B, C;
};

inline bool full_rank(const MatrixXd& M, double tol = 1e-6) {
  Eigen::JacobiSVD<MatrixXd> svd(M);
  const VectorXd& s = svd.singularValues();
  return s(s.size() - 1) > tol * s(0);
}

/// Random controllable and observable discrete system with spectral radius < 1.
inline DiscreteSystem random_minimal(std::mt19937_64& rng, Eigen::Index n, Eigen::Index m) {
  while (true) {
    DiscreteSystem s{random_matrix(rng, n, n), random_matrix(rng, n, m), random_matrix(rng, m, n)};
    const double rho = Eigen::EigenSolver<MatrixXd>(s.A, false).eigenvalues().cwiseAbs().maxCoeff();
    s.A *= 0.9 / std::max(rho, 1e-3);
    MatrixXd ctrb(n, n * m), obsv(n * m, n);
    MatrixXd Ak = MatrixXd::Identity(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
      ctrb.middleCols(k * m, m) = Ak * s.B;
      obsv.middleRows(k * m, m) = s.C * Ak;
      Ak = Ak * s.A;
    }
    if (full_rank(ctrb) && full_rank(obsv)) return s;
  }
}

inline void simulate(const DiscreteSystem& s, VectorXd x, const std::vector<VectorXd>& u,
                     std::vector<VectorXd>& y) {
  y.clear();
  for (const auto& uk : u) {
    y.push_back(s.C * x);
    x = s.A * x + s.B * uk;
  }
}

/// Dense oracle in the Hankel coefficients nu: minimise the OCP cost subject to
/// the past-window equalities and the active bounds u_i = bound_i (scalar
/// inputs), by a least-squares solve of the KKT system.
struct DenseOracle {
  MatrixXd H;    // Hessian in nu
  VectorXd h;
  MatrixXd E;    // past rows
  VectorXd b;
  MatrixXd Uf;
  MatrixXd Yf;

  DenseOracle(const ddfc::HankelPair& hp, Eigen::Index n, const VectorXd& u_past, const VectorXd& y_past,
              const VectorXd& ref, double q, double r, double reg) {
    const Eigen::Index m = hp.Hu.rows() / hp.depth;
    const Eigen::Index L = hp.depth - n;
    const Eigen::Index cols = hp.Hu.cols();
    E.resize(2 * m * n, cols);
    E << hp.Hu.topRows(m * n), hp.Hy.topRows(m * n);
    b.resize(2 * m * n);
    b << u_past, y_past;
    Uf = hp.Hu.bottomRows(m * L);
    Yf = hp.Hy.bottomRows(m * L);
    H = 2.0 * (q * Yf.transpose() * Yf + r * Uf.transpose() * Uf + reg * MatrixXd::Identity(cols, cols));
    h = -2.0 * q * Yf.transpose() * ref;
  }

  /// nu for the given active set; `ok` false if the KKT system is inconsistent.
  VectorXd solve(const std::vector<Eigen::Index>& active, const std::vector<double>& values,
                 VectorXd* multipliers = nullptr) const {
    const Eigen::Index k = H.rows();
    const Eigen::Index ne = E.rows();
    const auto na = static_cast<Eigen::Index>(active.size());
    MatrixXd K = MatrixXd::Zero(k + ne + na, k + ne + na);
    VectorXd rhs = VectorXd::Zero(k + ne + na);
    K.topLeftCorner(k, k) = H;
    K.block(0, k, k, ne) = E.transpose();
    K.block(k, 0, ne, k) = E;
    rhs.head(k) = -h;
    rhs.segment(k, ne) = b;
    for (Eigen::Index a = 0; a < na; ++a) {
      K.block(0, k + ne + a, k, 1) = Uf.row(active[a]).transpose();
      K.block(k + ne + a, 0, 1, k) = Uf.row(active[a]);
      rhs(k + ne + a) = values[a];
    }
    const VectorXd sol = K.completeOrthogonalDecomposition().solve(rhs);
    if (multipliers) *multipliers = sol.tail(na);
    return sol.head(k);
  }

  double cost(const VectorXd& nu) const { return 0.5 * nu.dot(H * nu) + h.dot(nu); }
};

struct Instance {
  ddfc::HankelPair hp;
  ddfc::PastWindow past;
  std::vector<VectorXd> ref;
  Eigen::Index n = 0;
  Eigen::Index L = 0;
};

// Scalar data from a random minimal system with a random past window.
inline Instance tiny_instance(std::mt19937_64& rng, Eigen::Index n, Eigen::Index L, double ref_scale) {
  const auto sys = random_minimal(rng, n, 1);
  const Eigen::Index depth = L + n;
  const std::size_t N = static_cast<std::size_t>(2 * (depth + n) + depth + 8);
  std::vector<VectorXd> u, y;
  for (std::size_t k = 0; k < N; ++k) u.push_back(random_vector(rng, 1));
  simulate(sys, random_vector(rng, n), u, y);
  ddfc::DataLog log(1);
  for (std::size_t k = 0; k < N; ++k) log.append(u[k], y[k]);
  Instance inst;
  inst.hp = ddfc::hankel_pair(log, depth);
  inst.n = n;
  inst.L = L;
  std::vector<VectorXd> up, yp;
  for (Eigen::Index k = 0; k < n; ++k) up.push_back(random_vector(rng, 1));
  simulate(sys, random_vector(rng, n), up, yp);
  inst.past.u = up;
  inst.past.y = yp;
  for (Eigen::Index k = 0; k < L; ++k) inst.ref.push_back(random_vector(rng, 1, ref_scale));
  return inst;
}

inline VectorXd stack(const std::vector<VectorXd>& v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i](0);
  return out;
}

inline DenseOracle oracle_for(const Instance& inst, const ddfc::OcpWeights& w) {
  return DenseOracle(inst.hp, inst.n, stack(inst.past.u), stack(inst.past.y), stack(inst.ref),
                              w.Q(0, 0), w.R(0, 0), w.nu_reg);
}

// Enumerates active sets of the scalar box constraints; returns the best
// feasible KKT point with correctly signed multipliers.
inline VectorXd constrained_oracle(const DenseOracle& o, double u_max) {
  const auto L = o.Uf.rows();
  double best = std::numeric_limits<double>::infinity();
  VectorXd best_u;
  int combos = 1;
  for (Eigen::Index i = 0; i < L; ++i) combos *= 3;
  for (int code = 0; code < combos; ++code) {
    std::vector<Eigen::Index> act;
    std::vector<double> val;
    int c = code;
    for (Eigen::Index i = 0; i < L; ++i, c /= 3) {
      if (c % 3 == 1) { act.push_back(i); val.push_back(u_max); }
      if (c % 3 == 2) { act.push_back(i); val.push_back(-u_max); }
    }
    VectorXd mult;
    const VectorXd nu = o.solve(act, val, &mult);
    const VectorXd u = o.Uf * nu;
    if ((u.cwiseAbs().array() > u_max * (1 + 1e-9)).any()) continue;
    if ((o.E * nu - o.b).norm() > 1e-8 * std::max(1.0, o.b.norm())) continue;
    bool signs = true;
    for (std::size_t a = 0; a < act.size(); ++a) {
      // stationarity H nu + h + E^T l + Uf_a^T m = 0; a binding bound needs m * val >= 0
      if (mult(static_cast<Eigen::Index>(a)) * val[a] < -1e-9) signs = false;
    }
    if (!signs) continue;
    const double cost = o.cost(nu);
    if (cost < best) {
      best = cost;
      best_u = u;
    }
  }
  return best_u;
}


}  // namespace testing
