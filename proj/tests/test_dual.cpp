// Copyright (c) opmm contributors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch.hpp>

#include <cmath>
#include <random>

#include "opmm/dual.hpp"
#include "opmm/opmm.hpp"
#include "test_support.hpp"

using namespace opmm;
using namespace opmm::test;

namespace {

using Set = SimpleSet<double>;

struct Instance {
  Set set;
  ConstraintFamily<double> cons;
};

// Two convex constraints on a box: a linear cut and a disc.
Instance box_instance() {
  Instance inst{Set::box(vec({-1, -1}), vec({1, 1})), {}};
  auto& c = inst.cons;
  c.n = 2;
  c.p = 2;
  c.value = [](const Vec& x) -> Vec {
    return vec({x(0) + 0.5 * x(1) - 0.2, (x - vec({0.3, 0.2})).squaredNorm() - 0.8});
  };
  c.jacobian = [](const Vec& x) -> Mat {
    Mat j(2, 2);
    j << 1, 0.5, 2 * (x(0) - 0.3), 2 * (x(1) - 0.2);
    return j;
  };
  c.convex = {true, true};
  c.kappa_g = 2 * std::hypot(1.3, 1.2);
  c.nu_g = 4;
  c.lipschitz_grad = 2;
  c.slater_point = vec({0, 0});
  c.slater_margin = 0.2;
  return inst;
}

DualProblem<double> random_problem(const Instance& inst, std::mt19937_64& rng) {
  const Vec xt = inst.set.sample(rng);
  const auto f = quadratic_loss(uniform(rng, 0.1, 2), uniform_vec(rng, 2, -2, 2), 10);
  return make_dual_problem(f, inst.cons, xt, uniform_vec(rng, 2, 0, 2),
                           uniform(rng, 0.1, 2), uniform(rng, 0.2, 3),
                           uniform(rng, 0, 1.5));
}

Models<double> primal_models(const DualProblem<double>& dp) {
  Models<double> m;
  m.objective.anchor = dp.x_t;
  m.objective.constant = dp.f_value;
  m.objective.grad = dp.grad_f;
  if (dp.eta > 0) m.objective.theta = Curvature<double>::scalar_identity(dp.eta);
  for (Index i = 0; i < dp.p(); ++i) {
    QuadModel<double> q;
    q.anchor = dp.x_t;
    q.constant = dp.g(i);
    q.grad = dp.jacobian.row(i).transpose();
    m.constraints.push_back(q);
  }
  return m;
}

}  // namespace

TEST_CASE("dual objective vanishes at the trivial point", "[dual]") {
  DualProblem<double> dp;
  dp.x_t = vec({0.2, -0.1});
  dp.grad_f = vec({0, 0});
  dp.g = vec({0});
  dp.jacobian = Mat::Ones(1, 2);
  dp.lambda = vec({0});
  const auto r = dual_objective(Set::box(vec({-1, -1}), vec({1, 1})), dp, vec({0}));
  CHECK(r.value == 0.0);
  CHECK(r.gradient.norm() == 0.0);
}

TEST_CASE("dual gradient matches finite differences", "[dual][property]") {
  const auto inst = box_instance();
  std::mt19937_64 rng(12);
  for (int k = 0; k < 100; ++k) {
    const auto dp = random_problem(inst, rng);
    const Vec y = uniform_vec(rng, 2, 0.01, 3);
    auto f = [&](const Vec& z) { return dual_objective(inst.set, dp, z).value; };
    CHECK(relative_error(dual_objective(inst.set, dp, y).gradient,
                         central_difference(f, y, 1e-6)) <= 1e-5);
  }
}

TEST_CASE("dual objective is concave along segments", "[dual][property]") {
  const auto inst = box_instance();
  std::mt19937_64 rng(13);
  for (int k = 0; k < 200; ++k) {
    const auto dp = random_problem(inst, rng);
    const Vec u = uniform_vec(rng, 2, 0, 4), v = uniform_vec(rng, 2, 0, 4);
    const double mid = dual_objective(inst.set, dp, Vec(0.5 * (u + v))).value;
    const double avg = 0.5 * (dual_objective(inst.set, dp, u).value +
                              dual_objective(inst.set, dp, v).value);
    CHECK(mid >= avg - 1e-9);
  }
}

TEST_CASE("dual route reproduces the 1-D primal example", "[dual]") {
  const auto set = Set::box(vec({-10}), vec({10}));
  const auto cons = linear_constraints(Mat::Ones(1, 1), vec({5}), vec({0}), 15);
  const auto f = linear_loss(vec({1}));
  const auto dp = make_dual_problem(f, cons, vec({0}), vec({0}), 1.0, 1.0, 0.0);
  const Vec y = solve_dual(set, dp, {});
  CHECK(y(0) == Approx(0).margin(1e-12));
  const Vec x = recover_primal(set, dp, y);
  CHECK(x(0) == Approx(-1));
  CHECK(recover_primal(set, 1.0, 0.0, vec({0}), vec({1}), Mat(Mat::Ones(1, 1)), 1.0,
                       vec({0}))(0) == Approx(-1));
}

TEST_CASE("strictly feasible anchor gives a zero dual solution", "[dual]") {
  const auto inst = box_instance();
  const auto f = quadratic_loss(1.0, vec({0, 0}), 4);
  const auto dp = make_dual_problem(f, inst.cons, vec({0, 0}), vec({0, 0}), 0.01, 1.0, 0.0);
  REQUIRE((dp.g.array() < 0).all());
  const auto g0 = dual_objective(inst.set, dp, vec({0, 0})).gradient;
  CHECK((g0.array() <= 0).all());
  const Vec y = solve_dual(inst.set, dp, {});
  CHECK(y.norm() == 0.0);
  CHECK(recover_multiplier(dual_objective(inst.set, dp, y).gradient, dp.sigma, y).norm() ==
        0.0);
}

TEST_CASE("recovery examples", "[dual]") {
  const auto set = Set::box(vec({-1, -1}), vec({1, 1}));
  CHECK(recover_primal(set, 1.0, 0.0, vec({0.3, 0.1}), vec({0, 0}), Mat(Mat::Ones(1, 2)), 1.0,
                       vec({0})) == vec({0.3, 0.1}));
  const Vec edge = recover_primal(set, 1.0, 0.0, vec({0.9, 0}), vec({-5, 0}),
                                  Mat(Mat::Ones(1, 2)), 1.0, vec({0}));
  CHECK(edge(0) == 1.0);
  CHECK(recover_multiplier(vec({0, 0}), 0.5, vec({2, 4})) == vec({1, 2}));
  CHECK(recover_multiplier(vec({-1, -0.1}), 0.5, vec({0, 0})) == vec({0, 0}));
}

TEST_CASE("dual solutions are ascent steps, stable in the tolerance, and tight",
          "[dual][property]") {
  const auto inst = box_instance();
  std::mt19937_64 rng(14);
  for (int k = 0; k < 100; ++k) {
    const auto dp = random_problem(inst, rng);
    InnerSolverParams<double> loose, tight;
    loose.tol = 1e-6;
    tight.tol = 1e-10;
    const auto s1 = solve_dual_result(inst.set, dp, loose);
    const auto s2 = solve_dual_result(inst.set, dp, tight);
    REQUIRE(s2.converged);
    CHECK(s2.value >= dual_objective(inst.set, dp, dp.lambda).value - 1e-12);
    CHECK((s1.y - s2.y).norm() <= 1e-5);

    const Vec x = recover_primal(inst.set, dp, s2.y);
    const double gap = subproblem_dual_gap(inst.set, dp, x, s2.y);
    const double scale = 1 + std::abs(s2.value) + std::abs(dp.f_value);
    CHECK(std::abs(gap) <= 1e-6 * scale);

    const auto m = primal_models(dp);
    const Vec xp = solve_subproblem(inst.set, m, dp.lambda, dp.sigma, dp.alpha, dp.x_t, tight);
    CHECK((x - xp).norm() <= 1e-6);
    const Vec lam_primal = update_multipliers(dp.lambda, dp.sigma, m, xp);
    const Vec lam_dual = recover_multiplier(s2.gradient, dp.sigma, s2.y);
    CHECK((lam_primal - lam_dual).norm() <= 1e-6);
  }
}

TEST_CASE("dual route preconditions", "[dual]") {
  auto inst = box_instance();
  const auto f = quadratic_loss(1.0, vec({0, 0}), 4);
  auto nonconvex = inst.cons;
  nonconvex.convex = {true, false};
  CHECK_THROWS_AS(make_dual_problem(f, nonconvex, vec({0, 0}), vec({0, 0}), 1.0, 1.0, 0.0),
                  StrategyAssumptionViolation);
  CHECK_THROWS_AS(make_dual_problem(f, inst.cons, vec({0, 0}), vec({0, 0}), 1.0, 1.0, -1.0),
                  InvalidArgument);

  Models<double> m;
  m.objective.anchor = vec({0, 0});
  m.objective.grad = vec({0, 0});
  m.objective.theta = Curvature<double>::dense(Mat::Identity(2, 2));
  CHECK_THROWS_AS(make_dual_problem(m, Vec(0), 1.0, 1.0), StrategyAssumptionViolation);
  m.objective.theta = Curvature<double>::scalar_identity(1.0);
  QuadModel<double> q;
  q.anchor = vec({0, 0});
  q.grad = vec({1, 0});
  q.theta = Curvature<double>::scalar_identity(-1.0);
  m.constraints = {q};
  CHECK_THROWS_AS(make_dual_problem(m, vec({0}), 1.0, 1.0), StrategyAssumptionViolation);
}
