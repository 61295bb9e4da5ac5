#include "ddfc/funnel.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ddfc/errors.hpp"

namespace ddfc {

Alpha Alpha::standard() {
  return {[](double s) { return 1.0 / (1.0 - s); },
          [](double s) { return 1.0 / ((1.0 - s) * (1.0 - s)); }};
}

FunnelSpec FunnelSpec::constant(double radius) {
  if (!(radius > 0.0)) throw Error("funnel radius must be positive");
  const double phi = 1.0 / radius;
  return {[phi](double) { return phi; }, [](double) { return 0.0; }, phi, phi, 0.0};
}

FunnelSpec FunnelSpec::exponential(double r0, double r_inf, double rate) {
  if (!(r_inf > 0.0) || !(r0 >= r_inf) || !(rate >= 0.0)) {
    throw Error("exponential funnel needs r0 >= r_inf > 0 and rate >= 0");
  }
  const double span = r0 - r_inf;
  auto radius = [=](double t) { return span * std::exp(-rate * t) + r_inf; };
  // phi'/phi = -radius'/radius = rate * span e^{-rate t} / radius, largest at t = 0
  return {[radius](double t) { return 1.0 / radius(t); },
          [=](double t) {
            const double rad = radius(t);
            return rate * span * std::exp(-rate * t) / (rad * rad);
          },
          1.0 / r_inf, 1.0 / r0, rate * span / r0};
}

ReferenceSignal ReferenceSignal::sine(double amplitude, double omega, int r, Eigen::Index m) {
  ReferenceSignal ref;
  ref.r = r;
  ref.derivs = [=](double t, int i) {
    // d^i/dt^i sin(w t) = w^i sin(w t + i pi/2)
    const double v = amplitude * std::pow(omega, i) * std::sin(omega * t + i * M_PI / 2.0);
    return VectorXd::Constant(m, v);
  };
  const double per_channel = std::sqrt(static_cast<double>(m));
  for (int i = 0; i <= r; ++i) {
    ref.sup_norms.push_back(std::abs(amplitude) * std::pow(omega, i) * per_channel);
  }
  return ref;
}

double ControllerConstants::input_bound() const { return std::max(beta / lambda, u_max); }

std::vector<VectorXd> aux_errors(double t, const VectorXd& xi, const FunnelSpec& funnel,
                                 const ReferenceSignal& ref, const Alpha& alpha) {
  const Eigen::Index m = ref.channels();
  if (m == 0 || xi.size() % m != 0) throw DimensionMismatch("aux_errors: xi size not a multiple of m");
  const int r = static_cast<int>(xi.size() / m);
  if (r > ref.r + 1) throw DimensionMismatch("aux_errors: reference has too few derivatives");
  const double phi = funnel.phi(t);

  std::vector<VectorXd> e;
  e.reserve(r);
  e.push_back(phi * (xi.head(m) - ref.derivs(t, 0)));
  for (int k = 1; k < r; ++k) {
    const double sq = e.back().squaredNorm();
    if (!(sq < 1.0)) {
      throw AlphaDomain("||e_" + std::to_string(k) + "|| = " + std::to_string(std::sqrt(sq)) +
                        " >= 1");
    }
    e.push_back(phi * (xi.segment(k * m, m) - ref.derivs(t, k)) + alpha.value(sq) * e.back());
  }
  return e;
}

bool in_safe_set(double t, const VectorXd& xi, const FunnelSpec& funnel,
                 const ReferenceSignal& ref, const Alpha& alpha) {
  std::vector<VectorXd> e;
  try {
    e = aux_errors(t, xi, funnel, ref, alpha);
  } catch (const AlphaDomain&) {
    return false;
  }
  for (std::size_t k = 0; k + 1 < e.size(); ++k) {
    if (!(e[k].norm() < 1.0)) return false;
  }
  return e.back().norm() <= 1.0;
}

double solve_eps_hat(double rhs, const Alpha& alpha) {
  if (!(rhs > 0.0)) throw Error("solve_eps_hat: rhs must be positive");
  auto g = [&](double eps) { return alpha.value(eps * eps) * eps; };
  double lo = 0.0;
  double hi = 1.0 - 1e-12;
  // bisect down to adjacent doubles
  while (true) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (g(mid) < rhs) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::abs(g(lo) - rhs) <= std::abs(g(hi) - rhs) ? lo : hi;
}

ControllerConstants build_constants(const FunnelSpec& funnel, const ReferenceSignal& ref,
                                    const HighGainBounds& bounds, double L_max, double lambda,
                                    double u_max, const std::vector<VectorXd>& e0,
                                    const Alpha& alpha, std::optional<double> beta) {
  const int r = static_cast<int>(e0.size());
  if (r < 1) throw DimensionMismatch("build_constants: empty initial error chain");
  if (ref.r < r) throw DimensionMismatch("build_constants: reference needs r derivatives");
  if (!(lambda > 0.0 && lambda < 1.0)) throw Error("activation threshold must lie in (0,1)");
  if (!(u_max >= 0.0)) throw Error("u_max must be nonnegative");
  if (!(L_max >= 0.0)) throw Error("L_max must be nonnegative");
  for (int k = 0; k + 1 < r; ++k) {
    if (!(e0[k].norm() < 1.0)) {
      throw InitialConditionViolated("||e_" + std::to_string(k + 1) + "(0)|| >= 1");
    }
  }

  ControllerConstants c;
  c.lambda = lambda;
  c.u_max = u_max;
  c.L_max = L_max;
  c.bounds = bounds;

  const double rho = funnel.ratio_sup;
  double eps_prev = 0.0;
  double gbar_prev = 0.0;
  auto lift = [&](double eps) { return alpha.value(eps * eps) * eps; };
  for (int k = 1; k < r; ++k) {
    const double drift = rho * (1.0 + lift(eps_prev)) + 1.0 + gbar_prev;
    const double eps_hat = solve_eps_hat(drift, alpha);
    const double eps = std::max(e0[k - 1].norm(), eps_hat);
    const double mu = drift + lift(eps);
    const double sq = eps * eps;
    const double gbar = 2.0 * alpha.derivative(sq) * sq * mu + alpha.value(sq) * mu;
    c.eps_hat.push_back(eps_hat);
    c.eps.push_back(eps);
    c.mu.push_back(mu);
    c.gamma_bar.push_back(gbar);
    eps_prev = eps;
    gbar_prev = gbar;
  }

  c.kappa0 = rho * (1.0 + lift(eps_prev)) + funnel.phi_sup * (L_max + ref.sup_norms[r]) + gbar_prev;
  c.beta_min = 2.0 * c.kappa0 / (bounds.gamma_min * funnel.phi_inf);
  if (beta && *beta < c.beta_min) {
    throw Error("gain beta = " + std::to_string(*beta) + " below admissible minimum " +
                std::to_string(c.beta_min));
  }
  c.beta = beta.value_or(c.beta_min);
  c.kappa1 = c.kappa0 + funnel.phi_sup * bounds.gamma_max * c.beta;
  c.tau = std::min(c.kappa0 / (c.kappa1 * c.kappa1),
                   (1.0 - lambda) / (c.kappa0 + funnel.phi_sup * bounds.gamma_max * u_max));
  return c;
}

namespace {

double spectral_norm(const MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  return Eigen::JacobiSVD<MatrixXd>(M).singularValues()(0);
}

double exp_norm(const MatrixXd& K, double s) { return spectral_norm((K * s).exp()); }

// Adaptive Simpson with a relative tolerance on every subpanel.
template <class F>
double simpson_panel(const F& f, double a, double b, double fa, double fm, double fb, double whole,
                     double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol * std::abs(left + right)) {
    return left + right + delta / 15.0;
  }
  return simpson_panel(f, a, m, fa, flm, fm, left, tol, depth - 1) +
         simpson_panel(f, m, b, fm, frm, fb, right, tol, depth - 1);
}

template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_panel(f, a, b, fa, fm, fb, whole, tol, 20);
}

struct InternalSups {
  double exp_sup = 0.0;          // sup_s ||e^{Ks}||
  double convolution_sup = 0.0;  // sup_s ||e^{Ks}|| int_0^s ||e^{-K sigma}|| dsigma
};

InternalSups internal_sups_on(const MatrixXd& K, double horizon) {
  constexpr int kPanels = 400;
  const double h = horizon / kPanels;
  auto growth = [&](double s) { return exp_norm(K, -s); };
  InternalSups out;
  out.exp_sup = 1.0;
  double integral = 0.0;
  double best_s = 0.0;
  std::vector<double> cumulative(kPanels + 1, 0.0);
  for (int i = 1; i <= kPanels; ++i) {
    const double a = (i - 1) * h;
    const double b = i * h;
    integral += adaptive_simpson(growth, a, b, 1e-10);
    cumulative[i] = integral;
    const double decay = exp_norm(K, b);
    out.exp_sup = std::max(out.exp_sup, decay);
    const double val = decay * integral;
    if (val > out.convolution_sup) {
      out.convolution_sup = val;
      best_s = b;
    }
  }
  // Golden-section refinement around the best grid point.
  const int idx = static_cast<int>(std::lround(best_s / h));
  if (idx > 0) {
    const double lo0 = (idx - 1) * h;
    const double base = cumulative[idx - 1];
    auto g = [&](double s) { return exp_norm(K, s) * (base + adaptive_simpson(growth, lo0, s, 1e-10)); };
    double lo = lo0;
    double hi = std::min(horizon, (idx + 1) * h);
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 60; ++it) {
      const double x1 = hi - phi * (hi - lo);
      const double x2 = lo + phi * (hi - lo);
      if (g(x1) > g(x2)) {
        hi = x2;
      } else {
        lo = x1;
      }
    }
    out.convolution_sup = std::max(out.convolution_sup, g(0.5 * (lo + hi)));
  }
  return out;
}

}  // namespace

double l_max_oracle(const ByrnesIsidoriForm& bif, const FunnelSpec& funnel,
                    const ReferenceSignal& ref, const ControllerConstants& constants,
                    const Alpha& alpha) {
  const int r = bif.r;
  const double radius_sup = 1.0 / funnel.phi_inf;

  double chain = 0.0;
  for (int i = 0; i < r; ++i) {
    const double eps = i == 0 ? 0.0 : constants.eps.at(i - 1);
    chain += spectral_norm(bif.L[i]) *
             (radius_sup * (1.0 + eps * alpha.value(eps * eps)) + ref.sup_norms.at(i));
  }
  if (bif.K.rows() == 0) return chain;

  Eigen::EigenSolver<MatrixXd> eig(bif.K, false);
  const double slowest = eig.eigenvalues().real().maxCoeff();
  if (!(slowest < -lti_tol::kHurwitz)) throw NotHurwitz("internal dynamics K is not Hurwitz");

  // The sup over s >= 0 is taken on [0, T]; T doubles until the sup settles.
  double horizon = 50.0 / std::abs(slowest);
  InternalSups sups = internal_sups_on(bif.K, horizon);
  bool settled = false;
  for (int doubling = 0; doubling < 4; ++doubling) {
    horizon *= 2.0;
    const InternalSups next = internal_sups_on(bif.K, horizon);
    const bool stable = std::abs(next.convolution_sup - sups.convolution_sup) <=
                            1e-3 * sups.convolution_sup &&
                        std::abs(next.exp_sup - sups.exp_sup) <= 1e-3 * sups.exp_sup;
    sups = next;
    if (stable) {
      settled = true;
      break;
    }
  }
  if (!settled) throw NotHurwitz("internal-dynamics bound does not settle on a finite horizon");

  // The internal state enters y^(r) through S.
  const double coupling = spectral_norm(bif.S);
  const double forcing = spectral_norm(bif.P) * (radius_sup + ref.sup_norms.at(0));
  return chain + coupling * (sups.convolution_sup * forcing + sups.exp_sup * bif.eta0.norm());
}

VectorXd zoh_feedback(const VectorXd& e_r, double beta) {
  const double sq = e_r.squaredNorm();
  if (!(std::sqrt(sq) >= 1e-14)) throw DivisionByZero("zoh_feedback: ||e_r|| below 1e-14");
  return -beta * e_r / sq;
}

}  // namespace ddfc
