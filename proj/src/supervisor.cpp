#include "ddfc/supervisor.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <span>
#include <string>

#include "ddfc/errors.hpp"
#include "ddfc/kernels.hpp"

namespace ddfc {

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::Fixed: return "fixed";
    case Mode::Adaptive: return "adaptive";
    case Mode::ZohOnly: return "zoh-only";
  }
  return "?";
}

std::string_view to_string(Branch branch) {
  switch (branch) {
    case Branch::Random: return "random";
    case Branch::Mpc: return "mpc";
    case Branch::Zoh: return "zoh";
  }
  return "?";
}

VectorXd excitation(std::mt19937_64& rng, double u_max, Eigen::Index m) {
  const double a = u_max / std::sqrt(static_cast<double>(m));
  VectorXd u(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double v = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    u(i) = (2.0 * v - 1.0) * a;
  }
  return u;
}

ClosedLoop::ClosedLoop(const ContinuousLTI& plant, ControllerConfig config)
    : plant_(plant), config_(std::move(config)), rng_(config_.seed), data_(plant.channels()),
      solver_(config_.admm) {
  const auto& c = config_.constants;
  if (!(c.tau > 0.0)) throw Error("ClosedLoop: tau must be positive");
  if (config_.mode == Mode::Fixed && config_.L < 1) throw Error("ClosedLoop: fixed horizon L must be >= 1");
  if (config_.mode == Mode::Adaptive && config_.L_cap < 1) throw Error("ClosedLoop: L_cap must be >= 1");
  r_ = ddfc::relative_degree(plant_);
  if (config_.ref.r < r_) throw DimensionMismatch("ClosedLoop: reference needs r derivatives");
  n_ = plant_.states();
  m_ = plant_.channels();
  disc_ = zoh_discretize(plant_, c.tau);
  x_ = plant_.x0;

  const VectorXd xi0 = output_chain(plant_, x_, r_);
  if (!in_safe_set(0.0, xi0, config_.funnel, config_.ref, config_.alpha)) {
    throw InitialConditionViolated("ClosedLoop: initial output chain outside the funnel");
  }

  if (config_.verify_points > 1) {
    const int P = config_.verify_points;
    for (int j = 1; j < P; ++j) {
      const double s = c.tau * j / P;
      const DiscreteLTI d = zoh_discretize(plant_, s);
      sub_C_.push_back(plant_.C * d.Ad);
      sub_D_.push_back(plant_.C * d.Bd);
      sub_t_.push_back(s);
    }
  }
}

double ClosedLoop::verify_interval(const VectorXd& x, const VectorXd& u, double t0) const {
  if (sub_t_.empty()) return 0.0;
  const std::size_t P = sub_t_.size();
  std::vector<double> diff(P * m_);
  std::vector<double> weight(P);
  for (std::size_t j = 0; j < P; ++j) {
    const double t = t0 + sub_t_[j];
    const VectorXd y = sub_C_[j] * x + sub_D_[j] * u;
    const VectorXd e = y - config_.ref.derivs(t, 0);
    for (Eigen::Index i = 0; i < m_; ++i) diff[j * m_ + i] = e(i);
    weight[j] = config_.funnel.phi(t);
  }
  return kernels::active().max_weighted_block_norm(diff, weight, static_cast<std::size_t>(m_));
}

VectorXd ClosedLoop::mpc_action(StepRecord& rec) {
  const auto& c = config_.constants;
  const Eigen::Index L = L_;
  PastWindow past;
  const auto& us = data_.inputs();
  const auto& ys = data_.outputs();
  for (std::size_t i = us.size() - n_; i < us.size(); ++i) {
    past.u.push_back(us[i]);
    past.y.push_back(ys[i]);
  }
  std::vector<VectorXd> ref_window;
  for (Eigen::Index j = 0; j < L; ++j) {
    ref_window.push_back(config_.ref.derivs(static_cast<double>(k_ + j) * c.tau, 0));
  }

  OcpProblem problem;
  if (config_.mode == Mode::Fixed) {
    problem = frozen_;
    VectorXd up(m_ * n_), yp(m_ * n_), rf(m_ * L);
    for (Eigen::Index i = 0; i < n_; ++i) {
      up.segment(i * m_, m_) = past.u[i];
      yp.segment(i * m_, m_) = past.y[i];
    }
    for (Eigen::Index j = 0; j < L; ++j) rf.segment(j * m_, m_) = ref_window[j];
    problem.u_past = up;
    problem.y_past = yp;
    problem.ref = rf;
  } else {
    problem = assemble_ocp(factor_, past, ref_window, config_.weights, c.u_max, n_);
  }

  rec.status = OcpStatus::Fallback;
  OcpSolution sol;
  try {
    sol = solver_.solve(problem);
  } catch (const SingularKKT&) {
    return VectorXd::Zero(m_);
  }
  rec.iterations = sol.iterations;
  rec.status = sol.status;
  if (sol.status == OcpStatus::Fallback) return VectorXd::Zero(m_);
  rec.objective = sol.objective;
  if (config_.check_kkt) rec.kkt = kkt_residuals(problem, sol).max();
  VectorXd u = first_action(sol);
  const double nrm = u.norm();
  if (nrm > c.u_max) u *= c.u_max / nrm;  // solver slack or an unfinished solve
  return u;
}

StepRecord ClosedLoop::step() {
  const auto& c = config_.constants;
  const double t = time();
  StepRecord rec;
  rec.t = t;
  rec.x = x_;
  rec.xi = output_chain(plant_, x_, r_);
  rec.y_ref = config_.ref.derivs(t, 0);
  try {
    rec.e = aux_errors(t, rec.xi, config_.funnel, config_.ref, config_.alpha);
  } catch (const AlphaDomain& err) {
    throw FunnelViolation(std::string("error chain left the funnel: ") + err.what(), t);
  }
  const double er = rec.e.back().norm();
  if (!(er <= 1.0)) throw FunnelViolation("||e_r|| > 1 at t = " + std::to_string(t), t);

  // horizon and excitation status from the data gathered so far
  if (config_.mode == Mode::Fixed && !pe_reached_) {
    pe_.update(data_.inputs(), config_.L + 2 * n_);
    if (pe_.order() >= config_.L + 2 * n_) {
      L_ = config_.L;
      const HankelPair hp = hankel_pair(data_, L_ + n_);
      PastWindow dummy;
      dummy.u.assign(n_, VectorXd::Zero(m_));
      dummy.y.assign(n_, VectorXd::Zero(m_));
      std::vector<VectorXd> ref_window(L_, VectorXd::Zero(m_));
      frozen_ = assemble_ocp(hp, dummy, ref_window, config_.weights, c.u_max, n_);
      pe_reached_ = true;
    }
  } else if (config_.mode == Mode::Adaptive) {
    pe_.update(data_.inputs(), config_.L_cap + 2 * n_);
    const Eigen::Index L = std::max<Eigen::Index>(0, pe_.order() - 2 * n_);
    if (L >= 1) {
      if (L != L_) {
        factor_ = TrajectoryFactor(data_, L + n_);
        L_ = L;
      } else {
        factor_.sync(data_);
      }
      pe_reached_ = true;
    }
  }

  VectorXd u;
  if (er >= c.lambda) {
    u = zoh_feedback(rec.e.back(), c.beta);
    rec.branch = Branch::Zoh;
  } else if (config_.mode == Mode::ZohOnly) {
    u = VectorXd::Zero(m_);
    rec.branch = Branch::Mpc;
  } else if (!pe_reached_) {
    u = excitation(rng_, c.u_max, m_);
    rec.branch = Branch::Random;
  } else {
    u = mpc_action(rec);
    rec.branch = Branch::Mpc;
  }
  rec.u = u;
  rec.L_used = L_;

  rec.intersample_ratio = verify_interval(x_, u, t);
  if (!(rec.intersample_ratio < 1.0)) {
    throw FunnelViolation("output left the funnel between samples after t = " + std::to_string(t), t);
  }

  data_.append(u, rec.xi.head(m_));
  branches_.push_back(rec.branch);
  x_ = simulate_step(disc_, x_, u);
  ++k_;
  return rec;
}

TrajectoryLog run(const ContinuousLTI& plant, const ControllerConfig& config) {
  TrajectoryLog log;
  log.mode = config.mode;
  log.tau = config.constants.tau;
  log.seed = config.seed;
  ClosedLoop loop(plant, config);
  const auto K = static_cast<std::size_t>(std::floor(config.T_end / config.constants.tau * (1.0 + 1e-12)));
  log.records.reserve(K + 1);
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t k = 0; k <= K; ++k) log.records.push_back(loop.step());
  log.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return log;
}

int count_spikes(const TrajectoryLog& log, double u_max) {
  int events = 0;
  bool above_prev = false;
  for (const auto& r : log.records) {
    const bool above = r.u.norm() > u_max * (1.0 + 1e-9);
    if (above && !above_prev) ++events;
    above_prev = above;
  }
  return events;
}

int zoh_activations(const TrajectoryLog& log, double from) {
  int count = 0;
  for (const auto& r : log.records) {
    if (r.t >= from && r.branch == Branch::Zoh) ++count;
  }
  return count;
}

double first_mpc_time(const TrajectoryLog& log) {
  for (const auto& r : log.records) {
    if (r.branch == Branch::Mpc) return r.t;
  }
  return std::numeric_limits<double>::infinity();
}

double max_input_norm(const TrajectoryLog& log, double from) {
  double best = 0.0;
  for (const auto& r : log.records) {
    if (r.t >= from) best = std::max(best, r.u.norm());
  }
  return best;
}

}  // namespace ddfc
