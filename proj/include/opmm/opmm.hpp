// Copyright (c) opmm contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

#include "opmm/geometry.hpp"
#include "opmm/oracle.hpp"
#include "opmm/projected_gradient.hpp"
#include "opmm/types.hpp"

namespace opmm {

/// L^t_σ(x, λ) = q₀(x) + (1/2σ)[Σ_i [λ_i + σ q_i(x)]₊² − ‖λ‖²] and its
/// gradient ∇q₀(x) + Σ_i [λ_i + σ q_i(x)]₊ ∇q_i(x).
template <typename Scalar>
ValueAndGradient<Scalar> aug_lagrangian(const Models<Scalar>& models,
                                        const Vector<Scalar>& lambda,
                                        Scalar sigma,
                                        const Vector<Scalar>& x) {
  if (lambda.size() != models.p()) {
    throw DimensionMismatch("aug_lagrangian", models.p(), lambda.size());
  }
  Scalar penalty = 0;
  Vector<Scalar> grad = models.objective.gradient(x);
  for (Index i = 0; i < models.p(); ++i) {
    const auto& q = models.constraints[i];
    const Scalar shifted = lambda(i) + sigma * q.value(x);
    if (shifted > 0) {
      penalty += shifted * shifted;
      grad += shifted * q.gradient(x);
    }
  }
  const Scalar value =
      models.objective.value(x) + (penalty - lambda.squaredNorm()) / (2 * sigma);
  return {value, std::move(grad)};
}

/// F(x) = L^t_σ(x, λ) + (α/2)‖x − x_t‖², the per-round prox objective.
template <typename Scalar>
ValueAndGradient<Scalar> prox_objective(const Models<Scalar>& models,
                                        const Vector<Scalar>& lambda,
                                        Scalar sigma, Scalar alpha,
                                        const Vector<Scalar>& x_t,
                                        const Vector<Scalar>& x) {
  auto vg = aug_lagrangian(models, lambda, sigma, x);
  const Vector<Scalar> d = x - x_t;
  vg.value += Scalar(0.5) * alpha * d.squaredNorm();
  vg.gradient += alpha * d;
  return vg;
}

/// Solves min over x ∈ C of L^t_σ(x, λ) + (α/2)‖x − x_t‖² from x_t.
///
/// Returns the full solver result. Use solve_subproblem() for the throwing
/// variant.
template <typename Scalar>
PgResult<Scalar> solve_subproblem_result(const SimpleSet<Scalar>& set,
                                         const Models<Scalar>& models,
                                         const Vector<Scalar>& lambda,
                                         Scalar sigma, Scalar alpha,
                                         const Vector<Scalar>& x_t,
                                         const InnerSolverParams<Scalar>& inner) {
  set.check_dim("solve_subproblem", x_t);
  auto fun = [&](const Vector<Scalar>& x) {
    auto vg = prox_objective(models, lambda, sigma, alpha, x_t, x);
    return std::pair<Scalar, Vector<Scalar>>{vg.value, std::move(vg.gradient)};
  };
  auto proj = [&](const Vector<Scalar>& x) { return project(set, x); };
  return projected_gradient<Scalar>(fun, proj, x_t, inner, Scalar(1) / alpha);
}

/// x^{t+1} = argmin over x ∈ C of L^t_σ(x, λ^t) + (α/2)‖x − x^t‖².
///
/// Throws MaxItersExceeded (carrying the best iterate) when the stationarity
/// residual does not reach the tolerance.
template <typename Scalar>
Vector<Scalar> solve_subproblem(const SimpleSet<Scalar>& set,
                                const Models<Scalar>& models,
                                const Vector<Scalar>& lambda, Scalar sigma,
                                Scalar alpha, const Vector<Scalar>& x_t,
                                const InnerSolverParams<Scalar>& inner) {
  auto res = solve_subproblem_result(set, models, lambda, sigma, alpha, x_t, inner);
  if (!res.converged) {
    throw MaxItersExceeded<Scalar>("solve_subproblem: iteration limit reached",
                                   std::move(res.x), res.residual);
  }
  return std::move(res.x);
}

/// λ^{t+1} = [λ^t + σ q^t(x^{t+1})]₊.
template <typename Scalar>
Vector<Scalar> update_multipliers(const Vector<Scalar>& lambda, Scalar sigma,
                                  const Models<Scalar>& models,
                                  const Vector<Scalar>& x_next) {
  if (lambda.size() != models.p()) {
    throw DimensionMismatch("update_multipliers", models.p(), lambda.size());
  }
  return positive_part(lambda + sigma * models.constraint_values(x_next));
}

/// The normal-cone element certified by the subproblem's optimality system:
/// w = −[∇q₀(x⁺) + Σ_i λ⁺_i ∇q_i(x⁺) + α(x⁺ − x_t)].
template <typename Scalar>
Vector<Scalar> recover_w(const Models<Scalar>& models,
                         const Vector<Scalar>& lambda_next, Scalar alpha,
                         const Vector<Scalar>& x_t,
                         const Vector<Scalar>& x_next) {
  Vector<Scalar> s = models.objective.gradient(x_next) + alpha * (x_next - x_t);
  for (Index i = 0; i < models.p(); ++i) {
    s += lambda_next(i) * models.constraints[i].gradient(x_next);
  }
  return -s;
}

}  // namespace opmm
