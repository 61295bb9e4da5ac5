#include <doctest.h>

#include <limits>
#include <random>

#include "ddfc/errors.hpp"
#include "ddfc/mpc.hpp"
#include "support.hpp"

using namespace ddfc;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using testing::constrained_oracle;
using testing::Instance;
using testing::oracle_for;
using testing::stack;
using testing::tiny_instance;

}  // namespace

TEST_CASE("weights are validated") {
  CHECK_THROWS_AS(OcpWeights(-MatrixXd::Identity(1, 1), MatrixXd::Identity(1, 1), 0.0), NotPositiveDefinite);
  CHECK_THROWS_AS(OcpWeights(MatrixXd::Identity(1, 1), MatrixXd::Zero(1, 1), 0.0), NotPositiveDefinite);
  const OcpWeights w = OcpWeights::scaled_identity(2, 100, 1e-4, 1e-6);
  CHECK(w.Q(1, 1) == 100.0);
  CHECK(w.R(0, 0) == 1e-4);
  CHECK(w.nu_reg == 1e-6);
}

TEST_CASE("assembly checks excitation and dimensions") {
  std::mt19937_64 rng(1);
  Instance inst = tiny_instance(rng, 2, 3, 1.0);
  const OcpWeights w = OcpWeights::scaled_identity(1, 1, 0.1, 1e-8);
  const OcpProblem p = assemble_ocp(inst.hp, inst.past, inst.ref, w, kInf, inst.n);
  CHECK(p.L == 3);
  CHECK(p.basis.rows() == 2 * (3 + 2));

  // constant input data is not exciting
  DataLog flat(1);
  for (int k = 0; k < 40; ++k) flat.append(VectorXd::Ones(1), VectorXd::Constant(1, k));
  CHECK_THROWS_AS(assemble_ocp(hankel_pair(flat, 5), inst.past, inst.ref, w, kInf, 2), InsufficientPE);

  PastWindow short_past{{VectorXd::Zero(1)}, {VectorXd::Zero(1)}};
  CHECK_THROWS_AS(assemble_ocp(inst.hp, short_past, inst.ref, w, kInf, inst.n), DimensionMismatch);
  std::vector<VectorXd> long_ref(4, VectorXd::Zero(1));
  CHECK_THROWS_AS(assemble_ocp(inst.hp, inst.past, long_ref, w, kInf, inst.n), DimensionMismatch);
}

TEST_CASE("zero reference and zero past give the zero plan") {
  std::mt19937_64 rng(2);
  Instance inst = tiny_instance(rng, 2, 3, 1.0);
  for (auto& v : inst.past.u) v.setZero();
  for (auto& v : inst.past.y) v.setZero();
  for (auto& v : inst.ref) v.setZero();
  const OcpWeights w = OcpWeights::scaled_identity(1, 100, 1e-4, 1e-6);
  const auto sol = solve_ocp(assemble_ocp(inst.hp, inst.past, inst.ref, w, 20.0, inst.n));
  CHECK(sol.status == OcpStatus::Optimal);
  CHECK(sol.objective <= 1e-12);
  for (const auto& u : sol.u_plan) CHECK(u.norm() <= 1e-10);
  for (const auto& y : sol.y_plan) CHECK(y.norm() <= 1e-10);
  CHECK(first_action(sol).norm() <= 1e-10);
}

TEST_CASE("unconstrained instances agree with the dense KKT oracle") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    CAPTURE(trial);
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 2);
    const Eigen::Index L = 1 + static_cast<Eigen::Index>(rng() % 3);
    const Instance inst = tiny_instance(rng, n, L, 1.0);
    const OcpWeights w = OcpWeights::scaled_identity(1, 10.0, 0.1, 1e-6);
    const OcpProblem p = assemble_ocp(inst.hp, inst.past, inst.ref, w, kInf, n);
    const auto sol = solve_ocp(p);
    REQUIRE(sol.status == OcpStatus::Optimal);
    const auto o = oracle_for(inst, w);
    const VectorXd u_ref = o.Uf * o.solve({}, {});
    CHECK((stack(sol.u_plan) - u_ref).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK((o.Uf * sol.nu - stack(sol.u_plan)).norm() <= 1e-8 * std::max(1.0, u_ref.norm()));
    CHECK(kkt_residuals(p, sol).max() < 1e-6);
  }
}

TEST_CASE("constrained instances agree with active-set enumeration") {
  std::mt19937_64 rng(4);
  int active_seen = 0;
  for (int trial = 0; trial < 60; ++trial) {
    CAPTURE(trial);
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 2);
    const Eigen::Index L = 1 + static_cast<Eigen::Index>(rng() % 3);
    const Instance inst = tiny_instance(rng, n, L, 5.0);
    const OcpWeights w = OcpWeights::scaled_identity(1, 10.0, 0.01, 1e-6);
    const double u_max = 0.5;
    const OcpProblem p = assemble_ocp(inst.hp, inst.past, inst.ref, w, u_max, n);
    const auto sol = solve_ocp(p);
    REQUIRE(sol.status == OcpStatus::Optimal);
    const auto o = oracle_for(inst, w);
    const VectorXd u_ref = constrained_oracle(o, u_max);
    REQUIRE(u_ref.size() == L);
    CHECK((stack(sol.u_plan) - u_ref).cwiseAbs().maxCoeff() <= 1e-6);
    for (const auto& u : sol.u_plan) CHECK(u.norm() <= u_max * (1 + 1e-8));
    CHECK(kkt_residuals(p, sol).max() < 1e-6);
    if ((u_ref.cwiseAbs().array() >= u_max * (1 - 1e-9)).any()) ++active_seen;
  }
  CHECK(active_seen > 10);
}

TEST_CASE("tight bound saturates the plan") {
  std::mt19937_64 rng(8);
  Instance inst = tiny_instance(rng, 2, 3, 1.0);
  for (auto& v : inst.ref) v.setConstant(50.0);
  const OcpWeights w = OcpWeights::scaled_identity(1, 100, 1e-4, 1e-6);
  const auto free_sol = solve_ocp(assemble_ocp(inst.hp, inst.past, inst.ref, w, kInf, inst.n));
  double free_peak = 0.0;
  for (const auto& u : free_sol.u_plan) free_peak = std::max(free_peak, u.norm());
  const double u_max = 0.5 * free_peak;
  const OcpProblem p = assemble_ocp(inst.hp, inst.past, inst.ref, w, u_max, inst.n);
  const auto sol = solve_ocp(p);
  REQUIRE(sol.status == OcpStatus::Optimal);
  double peak = 0.0;
  for (const auto& u : sol.u_plan) peak = std::max(peak, u.norm());
  CHECK(peak == doctest::Approx(u_max).epsilon(1e-9));
  CHECK(sol.objective >= free_sol.objective);
  CHECK((stack(sol.u_plan) - constrained_oracle(oracle_for(inst, w), u_max)).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK(kkt_residuals(p, sol).complementarity < 1e-6);
}

TEST_CASE("two-channel ball constraint") {
  std::mt19937_64 rng(12);
  const auto sys = testing::random_minimal(rng, 2, 2);
  const Eigen::Index n = 2, L = 3;
  std::vector<VectorXd> u, y;
  for (int k = 0; k < 60; ++k) u.push_back(testing::random_vector(rng, 2));
  testing::simulate(sys, testing::random_vector(rng, 2), u, y);
  DataLog log(2);
  for (std::size_t k = 0; k < u.size(); ++k) log.append(u[k], y[k]);
  PastWindow past{{u[10], u[11]}, {y[10], y[11]}};
  std::vector<VectorXd> ref(L, VectorXd::Constant(2, 10.0));
  const OcpWeights w = OcpWeights::scaled_identity(2, 100, 1e-4, 1e-6);
  const OcpProblem p = assemble_ocp(hankel_pair(log, L + n), past, ref, w, 1.0, n);
  const auto sol = solve_ocp(p);
  CHECK(sol.status == OcpStatus::Optimal);
  // unpolished ADMM iterate: feasible to the solver tolerance
  for (const auto& uk : sol.u_plan) CHECK(uk.norm() <= 1.0 * (1 + 1e-6));
  CHECK(kkt_residuals(p, sol).max() < 1e-6);
}

TEST_CASE("factor-based assembly gives the same plan") {
  std::mt19937_64 rng(5);
  const Instance inst = tiny_instance(rng, 2, 3, 2.0);
  DataLog log(1);
  const auto us = dehankel(inst.hp.Hu, 1);
  const auto ys = dehankel(inst.hp.Hy, 1);
  for (std::size_t k = 0; k < us.size(); ++k) log.append(us[k], ys[k]);
  const TrajectoryFactor f(log, inst.L + inst.n);
  const OcpWeights w = OcpWeights::scaled_identity(1, 10, 0.01, 1e-6);
  const auto a = solve_ocp(assemble_ocp(inst.hp, inst.past, inst.ref, w, 0.7, inst.n));
  const auto b = solve_ocp(assemble_ocp(f, inst.past, inst.ref, w, 0.7, inst.n));
  CHECK((stack(a.u_plan) - stack(b.u_plan)).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(b.nu.size() == 0);
}

TEST_CASE("solver caches its factorisation and warm starts") {
  std::mt19937_64 rng(6);
  Instance inst = tiny_instance(rng, 2, 3, 5.0);
  const OcpWeights w = OcpWeights::scaled_identity(1, 10, 0.01, 1e-6);
  OcpProblem p = assemble_ocp(inst.hp, inst.past, inst.ref, w, 0.5, inst.n);
  OcpSolver solver;
  const auto first = solver.solve(p);
  CHECK(solver.factorizations() == 1);
  p.ref *= 1.01;
  const auto second = solver.solve(p);
  CHECK(solver.factorizations() == 1);
  CHECK(second.status == OcpStatus::Optimal);
  p.weights = OcpWeights::scaled_identity(1, 20, 0.01, 1e-6);
  solver.solve(p);
  CHECK(solver.factorizations() == 2);
  solver.reset();
  solver.solve(p);
  CHECK(solver.factorizations() == 3);
  CHECK(first.iterations >= 1);
}

TEST_CASE("singular reduced problem is reported") {
  // second coefficient moves nothing; without regularisation it is free
  OcpProblem p;
  p.m = 1;
  p.n = 0;
  p.L = 2;
  p.basis = MatrixXd::Zero(4, 2);
  p.basis(0, 0) = 1.0;
  p.basis(3, 0) = 1.0;
  p.ref = VectorXd::Ones(2);
  p.weights = OcpWeights(MatrixXd::Identity(1, 1), MatrixXd::Identity(1, 1), 0.0);
  CHECK_THROWS_AS(solve_ocp(p), SingularKKT);
  p.weights.nu_reg = 1e-6;
  CHECK(solve_ocp(p).status == OcpStatus::Optimal);
}

TEST_CASE("adaptive horizon") {
  DataLog empty(1);
  CHECK(adaptive_horizon(empty, 4, 50) == 0);
  std::mt19937_64 rng(10);
  DataLog log(1);
  Eigen::Index prev = 0;
  for (int k = 0; k < 260; ++k) {
    log.append(testing::random_vector(rng, 1), testing::random_vector(rng, 1));
    const Eigen::Index L = adaptive_horizon(log, 4, 50);
    CHECK(L >= prev);
    prev = L;
  }
  CHECK(prev == 50);
  CHECK_THROWS(first_action(OcpSolution{}));
}
