// Copyright (c) opmm contributors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch.hpp>

#include <cmath>
#include <random>

#include "opmm/geometry.hpp"
#include "opmm/oracle.hpp"
#include "test_support.hpp"

using namespace opmm;
using namespace opmm::test;
using Strategy = ThetaStrategy;

namespace {

ConstraintFamily<double> sine_constraint() {
  ConstraintFamily<double> c;
  c.n = 1;
  c.p = 1;
  c.value = [](const Vec& x) -> Vec { return vec({std::sin(x(0))}); };
  c.jacobian = [](const Vec& x) -> Mat { return Mat::Constant(1, 1, std::cos(x(0))); };
  c.convex = {false};
  c.kappa_g = 1;
  c.nu_g = 1;
  c.lipschitz_grad = 1;
  c.slater_point = vec({-1.5});
  c.slater_margin = -std::sin(-1.5);
  return c;
}

// g_1 = ‖x‖² − 1 (convex), g_2 = x_1 + 0.3 sin(x_2) (non-convex).
ConstraintFamily<double> mixed_constraints() {
  ConstraintFamily<double> c;
  c.n = 2;
  c.p = 2;
  c.value = [](const Vec& x) -> Vec {
    return vec({x.squaredNorm() - 1, x(0) + 0.3 * std::sin(x(1))});
  };
  c.jacobian = [](const Vec& x) -> Mat {
    Mat j(2, 2);
    j << 2 * x(0), 2 * x(1), 1, 0.3 * std::cos(x(1));
    return j;
  };
  c.convex = {true, false};
  c.kappa_g = 4;
  c.nu_g = 3;
  c.lipschitz_grad = 2;
  c.slater_point = vec({-0.5, 0});
  c.slater_margin = 0.5;
  return c;
}

RoundLoss<double> sine_loss() {
  RoundLoss<double> f;
  f.value = [](const Vec& x) { return std::sin(x(0)) + x(1) * x(1) * x(1) / 3; };
  f.gradient = [](const Vec& x) -> Vec { return vec({std::cos(x(0)), x(1) * x(1)}); };
  f.kappa_f = 2;
  f.lipschitz_grad = 3;
  return f;
}

}  // namespace

TEST_CASE("quadratic loss is its own model", "[oracle]") {
  const auto f = quadratic_loss(1.0, vec({0, 0}), 2.0);
  const auto cons = linear_constraints(Mat::Identity(2, 2), vec({5, 5}), vec({0, 0}), 7);
  const auto m = build_models(f, cons, vec({0, 0}), Strategy::scalar(1.0));
  std::mt19937_64 rng(1);
  for (int k = 0; k < 20; ++k) {
    const Vec x = uniform_vec(rng, 2, -3, 3);
    CHECK(m.objective.value(x) == Approx(0.5 * x.squaredNorm()).epsilon(1e-14));
  }
}

TEST_CASE("linear constraint is its own linearization", "[oracle]") {
  const auto f = linear_loss(vec({1}));
  const auto cons = linear_constraints(Mat::Ones(1, 1), vec({5}), vec({0}), 15);
  const auto m = build_models(f, cons, vec({0}), Strategy::zero());
  for (double x : {-10.0, -1.0, 0.0, 3.0, 10.0}) {
    CHECK(m.constraints[0].value(vec({x})) == Approx(x - 5));
  }
}

TEST_CASE("concave minorant of sin", "[oracle]") {
  const auto f = linear_loss(vec({1}));
  const auto cons = sine_constraint();
  const auto m = build_models(f, cons, vec({0}), Strategy::concave_minorant(0));
  for (int k = 0; k <= 6000; ++k) {
    const double x = -3 + k * 1e-3;
    const double q = m.constraints[0].value(vec({x}));
    CHECK(q == Approx(x - 0.5 * x * x).margin(1e-14));
    CHECK(q <= std::sin(x) + 1e-12);
  }
}

TEST_CASE("strategy preconditions", "[oracle]") {
  const auto lin = linear_loss(vec({1}));
  const auto sine = sine_constraint();
  CHECK_THROWS_AS(build_models(lin, sine, vec({0}), Strategy::scalar(1)),
                  StrategyAssumptionViolation);
  CHECK_THROWS_AS(build_models(lin, sine, vec({0}), Strategy::zero()),
                  StrategyAssumptionViolation);
  CHECK_NOTHROW(build_models(lin, sine, vec({0}), Strategy::concave_minorant(0)));

  const auto cons = linear_constraints(Mat::Identity(2, 2), vec({1, 1}), vec({0, 0}), 3);
  CHECK_THROWS_AS(build_models(sine_loss(), cons, vec({0, 0}), Strategy::zero()),
                  StrategyAssumptionViolation);
  CHECK_THROWS_AS(build_models(sine_loss(), cons, vec({0, 0}), Strategy::exact_hessian()),
                  StrategyAssumptionViolation);
  CHECK_THROWS_AS(build_models(sine_loss(), cons, vec({0, 0}), Strategy::scalar(-1)),
                  StrategyAssumptionViolation);
  CHECK_THROWS_AS(build_models(sine_loss(), cons, vec({0, 0, 0}), Strategy::scalar(0)),
                  DimensionMismatch);
}

TEST_CASE("exact Hessian strategy", "[oracle]") {
  const auto cons = linear_constraints(Mat::Identity(2, 2), vec({1, 1}), vec({0, 0}), 3);
  const auto f = quadratic_loss(2.5, vec({0.3, -0.2}), 10);
  const auto m = build_models(f, cons, vec({0.1, 0.1}), Strategy::exact_hessian());
  CHECK(m.objective.theta.form() == Curvature<double>::Form::ScalarIdentity);
  CHECK(m.objective.theta.eta() == 2.5);

  RoundLoss<double> dense = f;
  Mat h(2, 2);
  h << 2, 1, 1, 3;
  dense.hessian = h;
  dense.hessian_is_scalar = false;
  dense.value = [h](const Vec& x) { return 0.5 * x.dot(h * x); };
  dense.gradient = [h](const Vec& x) -> Vec { return h * x; };
  const auto md = build_models(dense, cons, vec({0.2, -0.4}), Strategy::exact_hessian());
  std::mt19937_64 rng(4);
  for (int k = 0; k < 20; ++k) {
    const Vec x = uniform_vec(rng, 2, -2, 2);
    CHECK(md.objective.value(x) == Approx(dense.value(x)).epsilon(1e-12));
  }
  CHECK(md.objective.theta.norm() == Approx((5 + std::sqrt(5.0)) / 2));
}

TEST_CASE("model properties", "[oracle][property]") {
  const auto box = SimpleSet<double>::box(vec({-1.5, -1.5}), vec({1.5, 1.5}));
  const auto cons = mixed_constraints();
  const auto f = sine_loss();
  std::mt19937_64 rng(99);
  for (int k = 0; k < 50; ++k) {
    const Vec xt = box.sample(rng);
    for (const auto& strategy : {Strategy::concave_minorant(0.0),
                                 Strategy::concave_minorant(1.5)}) {
      const auto m = build_models(f, cons, xt, strategy);
      CHECK(m.objective.value(xt) == f.value(xt));
      CHECK(m.constraint_values(xt) == cons.value(xt));
      CHECK(m.curvature_bound() <= cons.lipschitz_grad + 1.5);
      CHECK(m.objective.theta.min_eigenvalue() >= 0);
      for (int j = 0; j < 20; ++j) {
        const Vec x = box.sample(rng);
        const Vec gx = cons.value(x);
        for (Index i = 0; i < cons.p; ++i) {
          CHECK(m.constraints[i].value(x) <= gx(i) + 1e-9);
          auto qi = [&](const Vec& z) { return m.constraints[i].value(z); };
          CHECK(relative_error(m.constraints[i].gradient(x),
                               central_difference(qi, x, 1e-5)) <= 1e-8);
        }
        auto q0 = [&](const Vec& z) { return m.objective.value(z); };
        CHECK(relative_error(m.objective.gradient(x), central_difference(q0, x, 1e-5)) <=
              1e-8);
      }
    }
  }
}

TEST_CASE("curvature forms", "[oracle]") {
  const auto z = Curvature<double>::zero();
  CHECK(z.norm() == 0);
  CHECK(z.apply(vec({1, 2})) == vec({0, 0}));
  const auto s = Curvature<double>::scalar_identity(-2);
  CHECK(s.norm() == 2);
  CHECK(s.min_eigenvalue() == -2);
  Mat m(2, 2);
  m << 1, 2, 2, 1;
  const auto d = Curvature<double>::dense(m);
  CHECK(d.norm() == Approx(3));
  CHECK(d.min_eigenvalue() == Approx(-1));
  CHECK(d.to_dense(2).isApprox(m));
}
