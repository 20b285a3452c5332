// Copyright (c) opmm contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <utility>

#include "opmm/geometry.hpp"
#include "opmm/opmm.hpp"
#include "opmm/oracle.hpp"
#include "opmm/projected_gradient.hpp"
#include "opmm/types.hpp"

namespace opmm {

/// Data of one round's dual problem for convex constraints, linear
/// constraint models and Θ₀ = η·I, so that H = (α + η)·I.
template <typename Scalar>
struct DualProblem {
  Vector<Scalar> x_t;
  Scalar f_value = 0;      ///< f_t(x_t)
  Vector<Scalar> grad_f;   ///< ∇f_t(x_t)
  Vector<Scalar> g;        ///< g(x_t)
  Matrix<Scalar> jacobian; ///< Jg(x_t), p×n
  Vector<Scalar> lambda;
  Scalar sigma = 1;
  Scalar alpha = 1;
  Scalar eta = 0;

  Scalar h() const { return alpha + eta; }
  Index p() const { return g.size(); }
};

/// Builds the dual data directly from the loss and constraints at x_t.
/// Throws StrategyAssumptionViolation when a constraint is not convex.
template <typename Scalar>
DualProblem<Scalar> make_dual_problem(const RoundLoss<Scalar>& loss,
                                      const ConstraintFamily<Scalar>& cons,
                                      const Vector<Scalar>& x_t,
                                      const Vector<Scalar>& lambda,
                                      Scalar sigma, Scalar alpha, Scalar eta) {
  if (!cons.all_convex()) {
    throw StrategyAssumptionViolation(
        "dual route requires every constraint to be convex");
  }
  if (!(eta >= 0)) throw InvalidArgument("dual route requires eta >= 0");
  if (!(sigma > 0) || !(alpha > 0)) {
    throw InvalidArgument("dual route requires sigma > 0 and alpha > 0");
  }
  if (lambda.size() != cons.p) {
    throw DimensionMismatch("make_dual_problem", cons.p, lambda.size());
  }
  DualProblem<Scalar> dp;
  dp.x_t = x_t;
  dp.f_value = loss.value(x_t);
  dp.grad_f = loss.gradient(x_t);
  dp.g = cons.value(x_t);
  dp.jacobian = cons.jacobian(x_t);
  dp.lambda = lambda;
  dp.sigma = sigma;
  dp.alpha = alpha;
  dp.eta = eta;
  return dp;
}

/// Builds the dual data from one round's models. Requires every Θ_i = 0 and
/// Θ₀ either 0 or a nonnegative multiple of the identity.
template <typename Scalar>
DualProblem<Scalar> make_dual_problem(const Models<Scalar>& models,
                                      const Vector<Scalar>& lambda,
                                      Scalar sigma, Scalar alpha) {
  using Form = typename Curvature<Scalar>::Form;
  const auto& q0 = models.objective;
  Scalar eta = 0;
  if (q0.theta.form() == Form::ScalarIdentity) {
    eta = q0.theta.eta();
  } else if (q0.theta.form() == Form::Dense) {
    throw StrategyAssumptionViolation(
        "dual route requires Theta_0 to be a multiple of the identity");
  }
  if (!(eta >= 0)) {
    throw StrategyAssumptionViolation("dual route requires Theta_0 >= 0");
  }
  const Index n = q0.anchor.size();
  DualProblem<Scalar> dp;
  dp.x_t = q0.anchor;
  dp.f_value = q0.constant;
  dp.grad_f = q0.grad;
  dp.g.resize(models.p());
  dp.jacobian.resize(models.p(), n);
  for (Index i = 0; i < models.p(); ++i) {
    const auto& q = models.constraints[i];
    if (q.theta.form() != Form::Zero) {
      throw StrategyAssumptionViolation(
          "dual route requires linear constraint models");
    }
    dp.g(i) = q.constant;
    dp.jacobian.row(i) = q.grad.transpose();
  }
  if (lambda.size() != models.p()) {
    throw DimensionMismatch("make_dual_problem", models.p(), lambda.size());
  }
  dp.lambda = lambda;
  dp.sigma = sigma;
  dp.alpha = alpha;
  dp.eta = eta;
  return dp;
}

/// x⁺ = Π_C(x_t − (α + η)⁻¹(∇f_t(x_t) + σ Jg(x_t)ᵀ y)).
template <typename Scalar>
Vector<Scalar> recover_primal(const SimpleSet<Scalar>& set, Scalar alpha,
                              Scalar eta, const Vector<Scalar>& x_t,
                              const Vector<Scalar>& grad_f,
                              const Matrix<Scalar>& jacobian, Scalar sigma,
                              const Vector<Scalar>& y) {
  const Vector<Scalar> v = grad_f + sigma * jacobian.transpose() * y;
  return project(set, Vector<Scalar>(x_t - v / (alpha + eta)));
}

template <typename Scalar>
Vector<Scalar> recover_primal(const SimpleSet<Scalar>& set,
                              const DualProblem<Scalar>& dp,
                              const Vector<Scalar>& y) {
  return recover_primal(set, dp.alpha, dp.eta, dp.x_t, dp.grad_f, dp.jacobian,
                        dp.sigma, y);
}

/// ω_t(y) = −(σ/2)‖y‖² + ⟨y, λ + σg(x_t)⟩ − ‖v‖²/(2h) + (h/2) dist(x_t − v/h, C)²
/// with v = ∇f_t(x_t) + σJᵀy and h = α + η, together with
/// ∇ω_t(y) = −σy + λ + σg(x_t) − σJ[x_t − Π_C(x_t − v/h)].
///
/// ω_t omits the constant f_t(x_t); see subproblem_dual_gap().
template <typename Scalar>
ValueAndGradient<Scalar> dual_objective(const SimpleSet<Scalar>& set,
                                        const DualProblem<Scalar>& dp,
                                        const Vector<Scalar>& y) {
  if (y.size() != dp.p()) {
    throw DimensionMismatch("dual_objective", dp.p(), y.size());
  }
  const Scalar h = dp.h();
  const Scalar sigma = dp.sigma;
  const Vector<Scalar> v = dp.grad_f + sigma * dp.jacobian.transpose() * y;
  const Vector<Scalar> u = dp.x_t - v / h;
  const auto metric = WeightedMetric<Scalar>::scalar_identity(h);
  const auto dist = weighted_dist_sq(set, metric, u);

  const Scalar value = -Scalar(0.5) * sigma * y.squaredNorm() +
                       y.dot(dp.lambda + sigma * dp.g) -
                       v.squaredNorm() / (2 * h) + dist.value;
  // dist.gradient = h(u − Π_C(u)); chain rule through u(y) gives
  // −σJ(u − Π_C(u)), and −‖v‖²/(2h) contributes −σJv/h.
  const Vector<Scalar> grad =
      -sigma * y + dp.lambda + sigma * dp.g -
      sigma * dp.jacobian * (v / h + dist.gradient / h);
  return {value, grad};
}

template <typename Scalar>
struct DualSolution {
  Vector<Scalar> y;
  Scalar value = 0;
  Vector<Scalar> gradient;
  Scalar residual = 0;
  Index iterations = 0;
  bool converged = false;
};

/// Projected gradient ascent on ω_t over {y ≥ 0}, warm-started at y⁰ = λ.
template <typename Scalar>
DualSolution<Scalar> solve_dual_result(const SimpleSet<Scalar>& set,
                                       const DualProblem<Scalar>& dp,
                                       const InnerSolverParams<Scalar>& inner) {
  auto neg = [&](const Vector<Scalar>& y) {
    auto vg = dual_objective(set, dp, y);
    return std::pair<Scalar, Vector<Scalar>>{-vg.value, -vg.gradient};
  };
  auto proj = [](const Vector<Scalar>& y) -> Vector<Scalar> {
    return positive_part(y);
  };
  const Scalar jn = dp.jacobian.squaredNorm();
  const Scalar lip = dp.sigma + dp.sigma * dp.sigma * jn / dp.h();
  auto r = projected_gradient<Scalar>(neg, proj, dp.lambda, inner, Scalar(1) / lip);

  DualSolution<Scalar> out;
  auto vg = dual_objective(set, dp, r.x);
  out.y = std::move(r.x);
  out.value = vg.value;
  out.gradient = std::move(vg.gradient);
  out.residual = r.residual;
  out.iterations = r.iterations;
  out.converged = r.converged;
  return out;
}

/// Throwing variant of solve_dual_result(); returns y*.
template <typename Scalar>
Vector<Scalar> solve_dual(const SimpleSet<Scalar>& set,
                          const DualProblem<Scalar>& dp,
                          const InnerSolverParams<Scalar>& inner) {
  auto sol = solve_dual_result(set, dp, inner);
  if (!sol.converged) {
    throw MaxItersExceeded<Scalar>("solve_dual: iteration limit reached",
                                   std::move(sol.y), sol.residual);
  }
  return std::move(sol.y);
}

/// λ⁺ = [∇ω_t(y*) + σ y*]₊.
template <typename Scalar>
Vector<Scalar> recover_multiplier(const Vector<Scalar>& omega_gradient,
                                  Scalar sigma, const Vector<Scalar>& y) {
  return positive_part(omega_gradient + sigma * y);
}

/// Primal prox objective at x minus the dual value at y, with the constants
/// dropped from ω_t restored: F(x) − (ω_t(y) + f_t(x_t) − ‖λ‖²/(2σ)). Zero at
/// a primal-dual optimal pair.
template <typename Scalar>
Scalar subproblem_dual_gap(const SimpleSet<Scalar>& set,
                           const DualProblem<Scalar>& dp,
                           const Vector<Scalar>& x, const Vector<Scalar>& y) {
  const Vector<Scalar> d = x - dp.x_t;
  const Vector<Scalar> lin = dp.lambda + dp.sigma * (dp.g + dp.jacobian * d);
  const Scalar primal = dp.f_value + dp.grad_f.dot(d) +
                        Scalar(0.5) * dp.h() * d.squaredNorm() +
                        (positive_part(lin).squaredNorm() -
                         dp.lambda.squaredNorm()) /
                            (2 * dp.sigma);
  const Scalar dual = dual_objective(set, dp, y).value + dp.f_value -
                      dp.lambda.squaredNorm() / (2 * dp.sigma);
  return primal - dual;
}

}  // namespace opmm
