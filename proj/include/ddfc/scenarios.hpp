#pragma once

#include <cstdint>
#include <numbers>
#include <optional>
#include <string>

#include "ddfc/funnel.hpp"
#include "ddfc/lti.hpp"
#include "ddfc/mpc.hpp"
#include "ddfc/supervisor.hpp"

namespace ddfc {

/// Two masses on an incline: a car z driven by u, and a mass s moving along
/// the incline on the car, coupled through a spring-damper.
struct MassOnCarParams {
  double m1 = 1.0;
  double m2 = 2.0;
  double k = 1.0;
  double d = 1.0;
  double theta = std::numbers::pi / 4.0;

  /// Throws ConfigError unless the masses, k, d > 0 and theta in (0, pi/2).
  void validate() const;
};

/// State (z, s, z', s'), output y = z + cos(theta) s. x0 = 0.
ContinuousLTI mass_on_car(const MassOnCarParams& p);

struct ExperimentConfig {
  std::string scenario = "mass-on-car";
  MassOnCarParams plant;
  double funnel_radius = 0.15;
  double ref_amplitude = 0.4;
  double ref_omega = std::numbers::pi / 2.0;
  double lambda = 0.75;
  double u_max = 20.0;
  Mode mode = Mode::Fixed;
  Eigen::Index L = 20;
  Eigen::Index L_cap = 50;
  double q = 100.0;
  double r = 1e-4;
  double nu_reg = 1e-6;
  double L_max = 1.4;
  std::optional<double> gamma_min;  // default: computed from the plant
  std::optional<double> gamma_max;
  std::optional<double> beta;       // default: minimal admissible gain
  std::optional<double> tau;        // default: maximal admissible sampling time
  std::uint64_t seed = 1;
  double T_end = 2.0;
  int verify_points = 100;
  AdmmSettings admm;
  std::string output;
};

/// The mass-on-car tracking benchmark: y_ref = 0.4 sin(pi t / 2), funnel
/// radius 0.15, fixed horizon L = 20.
ExperimentConfig default_benchmark();

/// Plant of the named scenario started on the reference:
/// y(0) = y_ref(0), y'(0) = y_ref'(0), with the mass at rest relative to the car.
ContinuousLTI make_plant(const ExperimentConfig& cfg);

FunnelSpec make_funnel(const ExperimentConfig& cfg);
ReferenceSignal make_reference(const ExperimentConfig& cfg, int r);

/// Constants for the configured mode. The zoh-only mode never applies a
/// nonzero input inside the safe region, so its sampling bound uses u_max = 0.
ControllerConstants make_constants(const ExperimentConfig& cfg, const ContinuousLTI& plant);

ControllerConfig make_controller(const ExperimentConfig& cfg, const ContinuousLTI& plant);

}  // namespace ddfc
