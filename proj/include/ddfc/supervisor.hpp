#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "ddfc/datadrive.hpp"
#include "ddfc/funnel.hpp"
#include "ddfc/lti.hpp"
#include "ddfc/mpc.hpp"

namespace ddfc {

enum class Mode { Fixed, Adaptive, ZohOnly };
enum class Branch { Random, Mpc, Zoh };

std::string_view to_string(Mode mode);
std::string_view to_string(Branch branch);

struct ControllerConfig {
  FunnelSpec funnel;
  ReferenceSignal ref;
  Alpha alpha = Alpha::standard();
  ControllerConstants constants;  // beta, lambda, tau, u_max
  Mode mode = Mode::Fixed;
  Eigen::Index L = 20;            // fixed horizon
  Eigen::Index L_cap = 50;        // adaptive upper limit
  OcpWeights weights;
  AdmmSettings admm;
  std::uint64_t seed = 1;
  double T_end = 2.0;
  int verify_points = 100;        // intersample points per interval, 0 disables
  bool check_kkt = false;         // record KKT residuals of every MPC solve
};

struct StepRecord {
  double t = 0.0;
  VectorXd x;
  VectorXd xi;                    // y, y', ..., y^(r-1)
  std::vector<VectorXd> e;        // e_1 .. e_r
  VectorXd y_ref;
  VectorXd u;
  Branch branch = Branch::Random;
  Eigen::Index L_used = 0;
  int iterations = 0;
  double objective = 0.0;
  OcpStatus status = OcpStatus::Optimal;  // meaningful on Mpc steps
  double kkt = 0.0;               // max KKT residual when check_kkt
  double intersample_ratio = 0.0; // max phi ||y - y_ref|| on (t, t + tau)
};

struct TrajectoryLog {
  Mode mode = Mode::Fixed;
  double tau = 0.0;
  std::uint64_t seed = 0;
  std::vector<StepRecord> records;
  double solve_seconds = 0.0;
};

/// Uniform excitation, each component on [-u_max/sqrt(m), u_max/sqrt(m)].
/// Draws 53-bit mantissas from the engine so the sequence is platform independent.
VectorXd excitation(std::mt19937_64& rng, double u_max, Eigen::Index m);

/// Sampled closed loop of the funnel controller with the data-driven branch.
class ClosedLoop {
 public:
  /// Throws InitialConditionViolated when the initial state lies outside the funnel.
  ClosedLoop(const ContinuousLTI& plant, ControllerConfig config);

  /// Decides the input at the current sample, applies it on [t_k, t_k + tau)
  /// and advances the plant. Throws FunnelViolation if the error chain leaves
  /// the admissible set at the sample or in between.
  StepRecord step();

  double time() const { return static_cast<double>(k_) * config_.constants.tau; }
  std::size_t steps() const { return k_; }
  const VectorXd& state() const { return x_; }
  bool pe_reached() const { return pe_reached_; }
  const DataLog& data() const { return data_; }
  const std::vector<Branch>& branches() const { return branches_; }
  int relative_degree() const { return r_; }
  const OcpSolver& solver() const { return solver_; }

 private:
  VectorXd mpc_action(StepRecord& rec);
  double verify_interval(const VectorXd& x, const VectorXd& u, double t0) const;

  ContinuousLTI plant_;
  ControllerConfig config_;
  DiscreteLTI disc_;
  int r_ = 0;
  Eigen::Index n_ = 0;
  Eigen::Index m_ = 0;
  std::vector<MatrixXd> sub_C_;   // C exp(A s_j)
  std::vector<MatrixXd> sub_D_;   // C Bd(s_j)
  std::vector<double> sub_t_;

  std::size_t k_ = 0;
  VectorXd x_;
  std::mt19937_64 rng_;
  DataLog data_;
  std::vector<Branch> branches_;
  bool pe_reached_ = false;
  PeTracker pe_;
  Eigen::Index L_ = 0;
  TrajectoryFactor factor_;
  OcpProblem frozen_;             // fixed mode: assembled once at PE
  OcpSolver solver_;
};

/// Runs t_k = k tau for k = 0 .. floor(T_end / tau). Propagates FunnelViolation.
TrajectoryLog run(const ContinuousLTI& plant, const ControllerConfig& config);

/// Events of ||u|| > u_max: maximal runs of consecutive steps above the bound.
int count_spikes(const TrajectoryLog& log, double u_max);

/// Steps on the Zoh branch with t >= from.
int zoh_activations(const TrajectoryLog& log, double from = 0.0);

/// Time of the first Mpc step, or +inf.
double first_mpc_time(const TrajectoryLog& log);

/// max ||u_k|| over steps with t >= from.
double max_input_norm(const TrajectoryLog& log, double from = 0.0);

}  // namespace ddfc
