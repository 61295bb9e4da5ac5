#pragma once

#include <Eigen/Dense>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "ddfc/datadrive.hpp"

namespace ddfc {

/// Stage weights ||y - y_ref||_Q^2 + ||u||_R^2 and the Tikhonov weight on nu.
struct OcpWeights {
  MatrixXd Q;
  MatrixXd R;
  double nu_reg = 0.0;

  OcpWeights() = default;
  /// Throws NotPositiveDefinite unless Q and R are symmetric positive definite.
  OcpWeights(MatrixXd q, MatrixXd r, double reg);
  static OcpWeights scaled_identity(Eigen::Index m, double q, double r, double reg);
};

/// Last n input/output samples, oldest first.
struct PastWindow {
  std::vector<VectorXd> u;
  std::vector<VectorXd> y;
};

/// Data-driven OCP over a prediction window of L steps after n initial samples.
///
/// The trajectory [u_0..u_{L+n-1}; y_0..y_{L+n-1}] is parametrised as
/// basis * zeta, where basis spans the column space of the stacked Hankel
/// matrices and ||zeta|| equals ||nu|| for the minimum-norm Hankel coefficients.
struct OcpProblem {
  Eigen::Index m = 1;
  Eigen::Index n = 0;
  Eigen::Index L = 0;
  MatrixXd basis;   // 2 m (L + n) x k
  MatrixXd nu_map;  // Hankel columns x k, nu = nu_map * zeta; empty if not available
  VectorXd u_past;  // m n, stacked
  VectorXd y_past;
  VectorXd ref;     // m L, stacked
  OcpWeights weights;
  double u_max = std::numeric_limits<double>::infinity();

  Eigen::Index depth() const { return L + n; }
};

enum class OcpStatus { Optimal, MaxIters, Fallback };

struct OcpSolution {
  std::vector<VectorXd> u_plan;  // L inputs
  std::vector<VectorXd> y_plan;  // L outputs
  VectorXd nu;                   // Hankel coefficients (when the problem carries nu_map)
  VectorXd coeffs;               // zeta
  VectorXd ball_duals;           // multipliers of ||u_k|| <= u_max, stacked m L
  double objective = 0.0;
  int iterations = 0;
  bool polished = false;
  OcpStatus status = OcpStatus::Fallback;
};

struct AdmmSettings {
  double eps = 1e-8;  // scaled primal and dual residual tolerance
  int max_iter = 20000;
  bool polish = true;
  bool warm_start = true;
};

struct KktResiduals {
  double stationarity = 0.0;
  double equality = 0.0;
  double inequality = 0.0;
  double complementarity = 0.0;

  double max() const;
};

/// Checks PE of order L + 2n on the input data recovered from Hu (InsufficientPE).
OcpProblem assemble_ocp(const HankelPair& hankels, const PastWindow& past,
                        const std::vector<VectorXd>& ref_window, const OcpWeights& weights,
                        double u_max, Eigen::Index n);

/// Same problem from an incrementally maintained factor; the caller guarantees PE.
OcpProblem assemble_ocp(const TrajectoryFactor& factor, const PastWindow& past,
                        const std::vector<VectorXd>& ref_window, const OcpWeights& weights,
                        double u_max, Eigen::Index n);

/// ADMM on the reduced problem. The KKT factorisation is cached and reused
/// while the trajectory basis, weights and horizon stay the same; the
/// previous plan warm-starts the next solve, shifted by one step.
class OcpSolver {
 public:
  explicit OcpSolver(AdmmSettings settings = {});
  ~OcpSolver();
  OcpSolver(OcpSolver&&) noexcept;
  OcpSolver& operator=(OcpSolver&&) noexcept;

  /// Throws SingularKKT if the reduced Hessian cannot be factorised.
  OcpSolution solve(const OcpProblem& problem);
  void reset();
  int factorizations() const { return factorizations_; }
  const AdmmSettings& settings() const { return settings_; }

 private:
  struct Cache;
  AdmmSettings settings_;
  std::unique_ptr<Cache> cache_;
  int factorizations_ = 0;
};

OcpSolution solve_ocp(const OcpProblem& problem, const AdmmSettings& settings = {});

/// Scaled residuals of the optimality conditions, computed from the problem
/// data independently of the solver's factorisations.
KktResiduals kkt_residuals(const OcpProblem& problem, const OcpSolution& solution);

/// min{L_cap, largest L >= 1 with PE of order L + 2n}, or 0.
Eigen::Index adaptive_horizon(const DataLog& log, Eigen::Index n, Eigen::Index L_cap);

/// First planned input; throws for a Fallback solution.
VectorXd first_action(const OcpSolution& solution);

}  // namespace ddfc
