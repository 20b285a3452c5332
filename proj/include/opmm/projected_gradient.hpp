// Copyright (c) opmm contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "opmm/types.hpp"

namespace opmm {

template <typename Scalar>
struct InnerSolverParams {
  Index max_iters = 10000;
  /// Absolute stationarity tolerance. When not positive, the solver uses
  /// relative_tol·(1 + ‖∇F(x⁰)‖).
  Scalar tol = 0;
  Scalar relative_tol = Scalar(1e-9);
  Scalar shrink = Scalar(0.5);
  Scalar sufficient_decrease = Scalar(1e-4);
};

template <typename Scalar>
struct PgResult {
  Vector<Scalar> x;
  Scalar residual = 0;
  /// Last accepted step size η.
  Scalar step = 0;
  /// The tolerance that was actually applied.
  Scalar tol = 0;
  Index iterations = 0;
  bool converged = false;
};

/// Minimizes a smooth F over a closed convex set by projected gradient with
/// Armijo backtracking along the projection arc.
///
/// `fun(x)` returns a (value, gradient) pair and `proj(x)` the Euclidean
/// projection. Trial steps come from the Barzilai–Borwein rule and are
/// shrunk until F(x⁺) ≤ F(x) + c⟨∇F(x), x⁺ − x⟩. Once value differences
/// fall below rounding level the curvature test ⟨∇F(x⁺) − ∇F(x), x⁺ − x⟩ ≤
/// ‖x⁺ − x‖²/η is used instead, which implies the Armijo condition for
/// c ≤ ½ in exact arithmetic.
///
/// Stops when the gradient-mapping residual ‖x − Π(x − η₀∇F(x))‖/η₀ ≤ tol,
/// with η₀ the initial step, so the test does not depend on the BB steps.
/// Returns the best iterate with converged = false when the budget runs out.
template <typename Scalar, typename Fun, typename Proj>
PgResult<Scalar> projected_gradient(Fun&& fun, Proj&& proj, Vector<Scalar> x0,
                                    const InnerSolverParams<Scalar>& params,
                                    Scalar initial_step) {
  constexpr Scalar eps = std::numeric_limits<Scalar>::epsilon();
  constexpr Scalar min_step = Scalar(1e-14);
  constexpr Scalar max_step = Scalar(1e14);

  PgResult<Scalar> out;
  Vector<Scalar> x = proj(x0);
  auto [fx, gx] = fun(x);
  out.tol = params.tol > 0 ? params.tol
                           : params.relative_tol * (1 + gx.norm());
  Scalar step = std::clamp(initial_step, min_step, max_step);
  const Scalar ref_step = step;

  auto residual_at = [&](const Vector<Scalar>& pt, const Vector<Scalar>& g) {
    return (pt - proj(Vector<Scalar>(pt - ref_step * g))).norm() / ref_step;
  };

  Vector<Scalar> best = x;
  Scalar best_res = residual_at(x, gx);
  out.step = step;
  if (best_res <= out.tol) {
    out.x = std::move(x);
    out.residual = best_res;
    out.converged = true;
    return out;
  }

  for (Index it = 1; it <= params.max_iters; ++it) {
    Vector<Scalar> x_new;
    Scalar f_new = 0;
    Vector<Scalar> g_new;
    Scalar eta = step;
    bool accepted = false;
    for (int bt = 0; bt < 200; ++bt) {
      x_new = proj(Vector<Scalar>(x - eta * gx));
      const Vector<Scalar> d = x_new - x;
      const Scalar dd = d.squaredNorm();
      if (dd == 0) {
        // x is a fixed point of the gradient map at this step.
        f_new = fx;
        g_new = gx;
        accepted = true;
        break;
      }
      auto [fv, gv] = fun(x_new);
      f_new = fv;
      g_new = std::move(gv);
      const Scalar slope = gx.dot(d);
      if (f_new <= fx + params.sufficient_decrease * slope) {
        accepted = true;
        break;
      }
      const Scalar noise = 64 * eps * (1 + std::abs(fx));
      if (std::abs(f_new - fx) <= noise && (g_new - gx).dot(d) <= dd / eta) {
        accepted = true;
        break;
      }
      eta *= params.shrink;
      if (eta < min_step) break;
    }
    if (!accepted) break;

    const Vector<Scalar> s = x_new - x;
    const Vector<Scalar> y = g_new - gx;
    x = std::move(x_new);
    fx = f_new;
    gx = std::move(g_new);
    out.iterations = it;
    out.step = eta;

    const Scalar res = residual_at(x, gx);
    if (res < best_res) {
      best_res = res;
      best = x;
    }
    if (res <= out.tol) {
      out.x = std::move(x);
      out.residual = res;
      out.converged = true;
      return out;
    }

    const Scalar sy = s.dot(y);
    step = sy > 0 ? s.squaredNorm() / sy : 2 * eta;
    step = std::clamp(step, min_step, max_step);
  }

  out.x = std::move(best);
  out.residual = best_res;
  out.converged = false;
  return out;
}

}  // namespace opmm
