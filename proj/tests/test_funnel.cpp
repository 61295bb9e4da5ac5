#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ddfc/errors.hpp"
#include "ddfc/funnel.hpp"
#include "ddfc/lti.hpp"
#include "ddfc/scenarios.hpp"
#include "support.hpp"

using namespace ddfc;

namespace {

ReferenceSignal zero_reference(int r, Eigen::Index m = 1) {
  ReferenceSignal ref;
  ref.r = r;
  ref.derivs = [m](double, int) { return VectorXd::Zero(m); };
  ref.sup_norms.assign(r + 1, 0.0);
  return ref;
}

// Straight transcription of the recursion, no shared code with the library.
std::vector<VectorXd> naive_errors(double phi, const VectorXd& xi, const std::vector<VectorXd>& ref_derivs,
                                   Eigen::Index m) {
  const auto r = xi.size() / m;
  std::vector<VectorXd> e(r);
  for (Eigen::Index k = 0; k < r; ++k) {
    VectorXd d(m);
    for (Eigen::Index i = 0; i < m; ++i) d(i) = phi * (xi(k * m + i) - ref_derivs[k](i));
    if (k > 0) {
      double sq = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) sq += e[k - 1](i) * e[k - 1](i);
      for (Eigen::Index i = 0; i < m; ++i) d(i) += e[k - 1](i) / (1.0 - sq);
    }
    e[k] = d;
  }
  return e;
}

}  // namespace

TEST_CASE("aux errors examples") {
  const Alpha a = Alpha::standard();
  const ReferenceSignal sine = ReferenceSignal::sine(0.4, std::numbers::pi / 2, 2);
  const double t = 0.37;
  VectorXd on_ref(2);
  on_ref << sine.derivs(t, 0)(0), sine.derivs(t, 1)(0);
  for (const auto& e : aux_errors(t, on_ref, FunnelSpec::constant(0.15), sine, a)) CHECK(e.norm() == 0.0);

  const auto e1 = aux_errors(0.0, VectorXd::Ones(1), FunnelSpec::constant(0.5), zero_reference(1), a);
  CHECK(e1[0](0) == doctest::Approx(2.0));

  VectorXd xi(2);
  xi << 0.5, 0.2;
  const auto e2 = aux_errors(0.0, xi, FunnelSpec::constant(1.0), zero_reference(2), a);
  CHECK(e2[0](0) == doctest::Approx(0.5));
  CHECK(e2[1](0) == doctest::Approx(0.2 + 0.5 / 0.75).epsilon(1e-14));

  xi << 1.5, 0.0;
  CHECK_THROWS_AS(aux_errors(0.0, xi, FunnelSpec::constant(1.0), zero_reference(2), a), AlphaDomain);
}

TEST_CASE("aux errors agree with a naive evaluator") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const Alpha a = Alpha::standard();
  int compared = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int r = 1 + static_cast<int>(rng() % 3);
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng() % 2);
    const double radius = 0.5 + U(rng) * 0.4;
    const double phi = 1.0 / radius;
    const ReferenceSignal ref = ReferenceSignal::sine(0.7, 1.3, r, m);
    const double t = 2.0 * (U(rng) + 1.0);
    VectorXd xi(r * m);
    std::vector<VectorXd> rd;
    for (int k = 0; k < r; ++k) {
      rd.push_back(ref.derivs(t, k));
      for (Eigen::Index i = 0; i < m; ++i) xi(k * m + i) = rd[k](i) + 0.3 * radius * U(rng);
    }
    const auto want = naive_errors(phi, xi, rd, m);
    bool in_domain = true;
    for (int k = 0; k + 1 < r; ++k) in_domain = in_domain && want[k].norm() < 1.0;
    if (!in_domain) continue;
    const auto got = aux_errors(t, xi, FunnelSpec::constant(radius), ref, a);
    for (int k = 0; k < r; ++k) CHECK((got[k] - want[k]).cwiseAbs().maxCoeff() < 1e-12);
    ++compared;
  }
  CHECK(compared > 300);
}

TEST_CASE("safe set membership") {
  const Alpha a = Alpha::standard();
  const ReferenceSignal z1 = zero_reference(1);
  CHECK(in_safe_set(0.0, VectorXd::Zero(1), FunnelSpec::constant(1.0), z1, a));
  CHECK(in_safe_set(0.0, VectorXd::Ones(1), FunnelSpec::constant(1.0), z1, a));  // ||e_r|| = 1
  CHECK_FALSE(in_safe_set(0.0, 1.5 * VectorXd::Ones(1), FunnelSpec::constant(1.0), z1, a));
  VectorXd xi(2);
  xi << 1.5, 0.0;
  CHECK_FALSE(in_safe_set(0.0, xi, FunnelSpec::constant(1.0), zero_reference(2), a));
}

TEST_CASE("eps hat root") {
  const Alpha a = Alpha::standard();
  CHECK(solve_eps_hat(1.0, a) == doctest::Approx((std::sqrt(5.0) - 1.0) / 2.0).epsilon(1e-12));
  CHECK(solve_eps_hat(1e-9, a) < 1e-8);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(0.0, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double rhs = U(rng) + 1e-6;
    const double eps = solve_eps_hat(rhs, a);
    CHECK(std::abs(a.value(eps * eps) * eps - rhs) <= 1e-10 * std::max(1.0, rhs));
  }
}

TEST_CASE("reference derivatives match finite differences") {
  const ReferenceSignal ref = ReferenceSignal::sine(0.4, std::numbers::pi / 2, 3);
  const double h = 1e-5;
  for (double t : {0.0, 0.3, 1.1, 1.9}) {
    for (int i = 0; i < 3; ++i) {
      const double fd = (ref.derivs(t + h, i)(0) - ref.derivs(t - h, i)(0)) / (2 * h);
      CHECK(fd == doctest::Approx(ref.derivs(t, i + 1)(0)).epsilon(1e-6));
    }
  }
  CHECK(ref.sup_norms[2] == doctest::Approx(0.4 * std::pow(std::numbers::pi / 2, 2)));
  CHECK(ref.derivs(1.0, 0)(0) == doctest::Approx(0.4));
  CHECK(std::abs(ref.derivs(2.0, 0)(0)) < 1e-15);
}

TEST_CASE("exponential funnel") {
  const FunnelSpec f = FunnelSpec::exponential(1.0, 0.1, 2.0);
  CHECK(f.radius(0.0) == doctest::Approx(1.0));
  CHECK(f.phi_inf == doctest::Approx(1.0));
  CHECK(f.phi_sup == doctest::Approx(10.0));
  double worst = 0.0;
  for (double t = 0.0; t < 10.0; t += 1e-3) {
    worst = std::max(worst, std::abs(f.phi_dot(t) / f.phi(t)));
    const double h = 1e-6;
    CHECK(f.phi_dot(t) == doctest::Approx((f.phi(t + h) - f.phi(t - h)) / (2 * h)).epsilon(1e-5));
  }
  CHECK(worst <= f.ratio_sup * (1 + 1e-12));
}

TEST_CASE("constants chain of the benchmark") {
  const ExperimentConfig cfg = default_benchmark();
  const ContinuousLTI plant = make_plant(cfg);
  const ControllerConstants c = make_constants(cfg, plant);
  REQUIRE(c.eps.size() == 1);
  CHECK(c.eps[0] == doctest::Approx((std::sqrt(5.0) - 1.0) / 2.0));
  CHECK(c.mu[0] == doctest::Approx(2.0));
  CHECK(c.gamma_bar[0] == doctest::Approx(7.236).epsilon(1e-3));
  CHECK(c.kappa0 == doctest::Approx(23.15).epsilon(1e-3));
  CHECK(std::abs(c.beta - 26.98) <= 0.05 * 26.98);
  CHECK(std::abs(c.tau - 4.5e-3) <= 0.10 * 4.5e-3);
  CHECK(c.tau <= 4.5e-3);
  // invariants
  CHECK(c.eps[0] < 1.0);
  CHECK(c.eps[0] >= c.eps_hat[0]);
  CHECK(c.mu[0] > 0.0);
  const FunnelSpec f = make_funnel(cfg);
  CHECK(c.beta >= 2 * c.kappa0 / (c.bounds.gamma_min * f.phi_inf));
  CHECK(c.kappa1 == doctest::Approx(c.kappa0 + f.phi_sup * c.bounds.gamma_max * c.beta));
  CHECK(c.tau <= std::min(c.kappa0 / (c.kappa1 * c.kappa1),
                          (1 - c.lambda) / (c.kappa0 + f.phi_sup * c.bounds.gamma_max * c.u_max)));
  CHECK(c.input_bound() == doctest::Approx(std::max(c.beta / c.lambda, 20.0)));
}

TEST_CASE("constants: monotone in L_max, degenerate r = 1, bad initial errors") {
  const Alpha a = Alpha::standard();
  const FunnelSpec f = FunnelSpec::constant(0.15);
  const ReferenceSignal ref = ReferenceSignal::sine(0.4, 1.5, 2);
  const std::vector<VectorXd> e0(2, VectorXd::Zero(1));
  const HighGainBounds gb{0.25, 0.25};
  const auto c1 = build_constants(f, ref, gb, 1.4, 0.75, 20, e0, a);
  const auto c2 = build_constants(f, ref, gb, 2.8, 0.75, 20, e0, a);
  CHECK(c2.kappa0 > c1.kappa0);
  CHECK(c2.beta_min > c1.beta_min);
  CHECK_THROWS(build_constants(f, ref, gb, 1.4, 0.75, 20, e0, a, c1.beta_min * 0.9));

  const ReferenceSignal ref1 = ReferenceSignal::sine(0.4, 1.5, 1);
  const auto c0 = build_constants(f, ref1, gb, 1.0, 0.5, 0, {VectorXd::Zero(1)}, a);
  CHECK(c0.eps.empty());
  CHECK(c0.kappa0 == doctest::Approx(f.phi_sup * (1.0 + 0.4 * 1.5)));

  std::vector<VectorXd> bad(2, VectorXd::Zero(1));
  bad[0](0) = 1.0;
  CHECK_THROWS_AS(build_constants(f, ref, gb, 1.4, 0.75, 20, bad, a), InitialConditionViolated);
}

TEST_CASE("L_max oracle") {
  const ExperimentConfig cfg = default_benchmark();
  const ContinuousLTI plant = make_plant(cfg);
  const ControllerConstants c = make_constants(cfg, plant);
  const double lmax = l_max_oracle(byrnes_isidori(plant), make_funnel(cfg), make_reference(cfg, 2), c,
                                   Alpha::standard());
  CHECK(std::abs(lmax - 1.4) <= 0.15 * 1.4);

  // companion form y'' = a0 y + a1 y' + u: no internal dynamics
  auto companion = [](double a0, double a1) {
    MatrixXd A(2, 2);
    A << 0, 1, a0, a1;
    return ContinuousLTI(A, (MatrixXd(2, 1) << 0, 1).finished(), (MatrixXd(1, 2) << 1, 0).finished(),
                         VectorXd::Zero(2));
  };
  const FunnelSpec f = FunnelSpec::constant(0.2);
  const ReferenceSignal ref = ReferenceSignal::sine(0.4, 1.0, 2);
  const auto cc = build_constants(f, ref, {1, 1}, 1.0, 0.5, 1.0, std::vector<VectorXd>(2, VectorXd::Zero(1)),
                                  Alpha::standard());
  CHECK(l_max_oracle(byrnes_isidori(companion(0, 0)), f, ref, cc, Alpha::standard()) == 0.0);
  const double one = l_max_oracle(byrnes_isidori(companion(-0.3, -0.7)), f, ref, cc, Alpha::standard());
  const double two = l_max_oracle(byrnes_isidori(companion(-0.6, -1.4)), f, ref, cc, Alpha::standard());
  CHECK(one > 0.0);
  CHECK(two == doctest::Approx(2.0 * one).epsilon(1e-12));

  // unstable zero dynamics
  MatrixXd A(2, 2);
  A << 0, 1, 1, 1;
  const ContinuousLTI nmp(A, (MatrixXd(2, 1) << 1, 0).finished(), (MatrixXd(1, 2) << 1, 0).finished(),
                          VectorXd::Zero(2));
  const ReferenceSignal ref_r1 = ReferenceSignal::sine(0.4, 1.0, 1);
  const auto c_r1 = build_constants(f, ref_r1, {1, 1}, 1.0, 0.5, 1.0, {VectorXd::Zero(1)}, Alpha::standard());
  CHECK_THROWS_AS(l_max_oracle(byrnes_isidori(nmp), f, ref_r1, c_r1, Alpha::standard()), NotHurwitz);
}

TEST_CASE("zoh feedback") {
  VectorXd e(2);
  e << 1, 0;
  const VectorXd u = zoh_feedback(e, 2.0);
  CHECK(u(0) == doctest::Approx(-2.0));
  CHECK(u(1) == 0.0);
  CHECK(zoh_feedback(3.0 * e, 2.0).norm() == doctest::Approx(u.norm() / 3.0));
  VectorXd at_lambda = VectorXd::Constant(1, 0.75);
  CHECK(zoh_feedback(at_lambda, 27.779).norm() == doctest::Approx(27.779 / 0.75));
  CHECK_THROWS_AS(zoh_feedback(VectorXd::Zero(2), 1.0), DivisionByZero);
}
