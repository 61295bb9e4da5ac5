#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "ddfc/lti.hpp"

namespace ddfc {

/// Bijection alpha: [0,1) -> [1,inf) with its derivative.
struct Alpha {
  std::function<double(double)> value;
  std::function<double(double)> derivative;

  /// alpha(s) = 1 / (1 - s)
  static Alpha standard();
};

/// Funnel radius 1/phi(t); the tracking error must satisfy phi(t) ||e(t)|| < 1.
struct FunnelSpec {
  std::function<double(double)> phi;
  std::function<double(double)> phi_dot;
  double phi_sup = 0.0;    // ||phi||_inf
  double phi_inf = 0.0;    // inf phi
  double ratio_sup = 0.0;  // ||phi_dot / phi||_inf

  /// Constant radius, phi = 1 / radius.
  static FunnelSpec constant(double radius);
  /// Radius (r0 - r_inf) exp(-rate t) + r_inf, shrinking from r0 to r_inf > 0.
  static FunnelSpec exponential(double r0, double r_inf, double rate);

  double radius(double t) const { return 1.0 / phi(t); }
};

/// Reference y_ref with derivatives up to order r.
struct ReferenceSignal {
  int r = 0;
  std::function<VectorXd(double, int)> derivs;  // (t, i) -> y_ref^(i)(t), i = 0..r
  std::vector<double> sup_norms;                // ||y_ref^(i)||_inf, i = 0..r

  /// amplitude * sin(omega t) in every channel.
  static ReferenceSignal sine(double amplitude, double omega, int r, Eigen::Index m = 1);

  Eigen::Index channels() const { return derivs(0.0, 0).size(); }
};

struct ControllerConstants {
  std::vector<double> eps;        // eps_1 .. eps_{r-1}
  std::vector<double> eps_hat;
  std::vector<double> mu;
  std::vector<double> gamma_bar;
  double kappa0 = 0.0;
  double beta = 0.0;
  double beta_min = 0.0;
  double kappa1 = 0.0;
  double lambda = 0.0;
  double tau = 0.0;               // maximal admissible sampling time
  double L_max = 0.0;
  double u_max = 0.0;
  HighGainBounds bounds;

  /// Uniform bound on the applied input, max{beta / lambda, u_max}.
  double input_bound() const;
};

/// Auxiliary errors e_1..e_r for xi = (xi_1, ..., xi_r) in R^{rm}:
///   e_1 = phi (xi_1 - y_ref),  e_{k+1} = phi (xi_{k+1} - y_ref^(k)) + alpha(||e_k||^2) e_k.
/// Throws AlphaDomain when ||e_k|| >= 1 for some k < r.
std::vector<VectorXd> aux_errors(double t, const VectorXd& xi, const FunnelSpec& funnel,
                                 const ReferenceSignal& ref, const Alpha& alpha);

/// ||e_k|| < 1 for k < r and ||e_r|| <= 1.
bool in_safe_set(double t, const VectorXd& xi, const FunnelSpec& funnel,
                 const ReferenceSignal& ref, const Alpha& alpha);

/// Root of alpha(eps^2) eps = rhs on (0, 1) by bisection.
double solve_eps_hat(double rhs, const Alpha& alpha);

/// Constants of the sampled-data feedback. `e0` is the initial error chain.
/// With `beta` unset the minimal admissible gain is used; a smaller explicit
/// gain is rejected. `tau` is the largest admissible sampling time.
ControllerConstants build_constants(const FunnelSpec& funnel, const ReferenceSignal& ref,
                                    const HighGainBounds& bounds, double L_max, double lambda,
                                    double u_max, const std::vector<VectorXd>& e0,
                                    const Alpha& alpha,
                                    std::optional<double> beta = std::nullopt);

/// Explicit upper bound on the plant's drift along funnel trajectories,
/// computed from the system matrices. Test and diagnostics only; the
/// controller takes L_max as a configured estimate.
double l_max_oracle(const ByrnesIsidoriForm& bif, const FunnelSpec& funnel,
                    const ReferenceSignal& ref, const ControllerConstants& constants,
                    const Alpha& alpha);

/// -beta e_r / ||e_r||^2
VectorXd zoh_feedback(const VectorXd& e_r, double beta);

}  // namespace ddfc
