#include "ddfc/scenarios.hpp"

#include <cmath>

#include "ddfc/errors.hpp"

namespace ddfc {

void MassOnCarParams::validate() const {
  if (!(m1 > 0.0 && m2 > 0.0)) throw ConfigError("mass-on-car: masses must be positive");
  if (!(k > 0.0 && d > 0.0)) throw ConfigError("mass-on-car: k and d must be positive");
  if (!(theta > 0.0 && theta < std::numbers::pi / 2.0)) {
    throw ConfigError("mass-on-car: theta must lie in (0, pi/2)");
  }
}

ContinuousLTI mass_on_car(const MassOnCarParams& p) {
  p.validate();
  const double c = std::cos(p.theta);
  Eigen::Matrix2d M;
  M << p.m1 + p.m2, p.m2 * c, p.m2 * c, p.m2;
  const Eigen::Matrix2d Mi = M.inverse();
  MatrixXd A = MatrixXd::Zero(4, 4);
  A(0, 2) = 1.0;
  A(1, 3) = 1.0;
  // M (z'', s'')^T = (u, -k s - d s')^T
  A.block(2, 1, 2, 1) = -p.k * Mi.col(1);
  A.block(2, 3, 2, 1) = -p.d * Mi.col(1);
  MatrixXd B = MatrixXd::Zero(4, 1);
  B.block(2, 0, 2, 1) = Mi.col(0);
  MatrixXd C(1, 4);
  C << 1.0, c, 0.0, 0.0;
  return ContinuousLTI(A, B, C, VectorXd::Zero(4));
}

ExperimentConfig default_benchmark() { return ExperimentConfig{}; }

FunnelSpec make_funnel(const ExperimentConfig& cfg) {
  if (!(cfg.funnel_radius > 0.0)) throw ConfigError("funnel_radius must be positive");
  return FunnelSpec::constant(cfg.funnel_radius);
}

ReferenceSignal make_reference(const ExperimentConfig& cfg, int r) {
  return ReferenceSignal::sine(cfg.ref_amplitude, cfg.ref_omega, r);
}

ContinuousLTI make_plant(const ExperimentConfig& cfg) {
  if (cfg.scenario != "mass-on-car") throw ConfigError("unknown scenario '" + cfg.scenario + "'");
  ContinuousLTI sys = mass_on_car(cfg.plant);
  const ReferenceSignal ref = make_reference(cfg, 2);
  // s = s' = 0, so y = z and y' = z'
  sys.x0(0) = ref.derivs(0.0, 0)(0);
  sys.x0(2) = ref.derivs(0.0, 1)(0);
  return sys;
}

ControllerConstants make_constants(const ExperimentConfig& cfg, const ContinuousLTI& plant) {
  const int r = relative_degree(plant);
  const ByrnesIsidoriForm bif = byrnes_isidori(plant);
  HighGainBounds bounds = high_gain_bounds(bif.Gamma);
  if (cfg.gamma_min) bounds.gamma_min = *cfg.gamma_min;
  if (cfg.gamma_max) bounds.gamma_max = *cfg.gamma_max;
  if (!(bounds.gamma_min > 0.0 && bounds.gamma_min <= bounds.gamma_max)) {
    throw ConfigError("gamma bounds must satisfy 0 < gamma_min <= gamma_max");
  }
  const FunnelSpec funnel = make_funnel(cfg);
  const ReferenceSignal ref = make_reference(cfg, r);
  const Alpha alpha = Alpha::standard();
  const VectorXd xi0 = output_chain(plant, plant.x0, r);
  const std::vector<VectorXd> e0 = aux_errors(0.0, xi0, funnel, ref, alpha);
  const double u_max = cfg.mode == Mode::ZohOnly ? 0.0 : cfg.u_max;
  ControllerConstants c =
      build_constants(funnel, ref, bounds, cfg.L_max, cfg.lambda, u_max, e0, alpha, cfg.beta);
  if (cfg.tau) {
    if (!(*cfg.tau > 0.0)) throw ConfigError("tau must be positive");
    c.tau = *cfg.tau;
  }
  return c;
}

ControllerConfig make_controller(const ExperimentConfig& cfg, const ContinuousLTI& plant) {
  if (!(cfg.T_end > 0.0)) throw ConfigError("T_end must be positive");
  if (cfg.L < 1) throw ConfigError("L must be >= 1");
  if (cfg.L_cap < 1) throw ConfigError("L_cap must be >= 1");
  if (!(cfg.u_max >= 0.0)) throw ConfigError("u_max must be nonnegative");
  const int r = relative_degree(plant);
  ControllerConfig c;
  c.funnel = make_funnel(cfg);
  c.ref = make_reference(cfg, r);
  c.constants = make_constants(cfg, plant);
  c.mode = cfg.mode;
  c.L = cfg.L;
  c.L_cap = cfg.L_cap;
  const Eigen::Index m = plant.channels();
  try {
    c.weights = OcpWeights::scaled_identity(m, cfg.q, cfg.r, cfg.nu_reg);
  } catch (const Error& e) {
    throw ConfigError(std::string("weights: ") + e.what());
  }
  c.admm = cfg.admm;
  c.seed = cfg.seed;
  c.T_end = cfg.T_end;
  c.verify_points = cfg.verify_points;
  return c;
}

}  // namespace ddfc
