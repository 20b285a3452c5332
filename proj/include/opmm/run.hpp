// Copyright (c) opmm contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "opmm/dual.hpp"
#include "opmm/geometry.hpp"
#include "opmm/opmm.hpp"
#include "opmm/oracle.hpp"
#include "opmm/projected_gradient.hpp"
#include "opmm/types.hpp"

namespace opmm {

/// Supplies f_1, f_2, ... strictly in round order.
template <typename Scalar>
class LossStream {
 public:
  virtual ~LossStream() = default;
  virtual RoundLoss<Scalar> next() = 0;
};

enum class Route { Primal, Dual };

template <typename Scalar>
struct AlgoParams {
  Scalar sigma = 1;
  Scalar alpha = 1;
  Index horizon = 1;
  ThetaStrategy strategy;
  InnerSolverParams<Scalar> inner;
  Route route = Route::Primal;
  /// Rethrow MaxItersExceeded instead of continuing with the best iterate.
  bool strict = false;

  /// σ = T^{−1/4}, α = T^{1/4}.
  static AlgoParams theorem1(Index horizon) {
    AlgoParams p;
    p.horizon = horizon;
    p.sigma = std::pow(Scalar(horizon), Scalar(-0.25));
    p.alpha = std::pow(Scalar(horizon), Scalar(0.25));
    return p;
  }

  /// σ = T^{−1/2}, α = T^{1/2}, for convex quadratic losses.
  static AlgoParams quadratic_convex(Index horizon) {
    AlgoParams p;
    p.horizon = horizon;
    p.sigma = std::pow(Scalar(horizon), Scalar(-0.5));
    p.alpha = std::pow(Scalar(horizon), Scalar(0.5));
    return p;
  }

  void validate() const {
    if (!(sigma > 0)) throw InvalidArgument("sigma must be positive");
    if (!(alpha > 0)) throw InvalidArgument("alpha must be positive");
    if (horizon < 1) throw InvalidArgument("horizon must be at least 1");
  }
};

template <typename Scalar>
struct Problem {
  SimpleSet<Scalar> set;
  ConstraintFamily<Scalar> constraints;
  Vector<Scalar> x1;
};

/// Everything observed in round t, including the late quantities that need
/// f_{t+1}.
template <typename Scalar>
struct RoundRecord {
  Index t = 0;
  Vector<Scalar> x;            ///< x^t
  Vector<Scalar> x_next;       ///< x^{t+1}
  Vector<Scalar> lambda;       ///< λ^t
  Vector<Scalar> lambda_next;  ///< λ^{t+1}
  Vector<Scalar> w;            ///< w^{t+1} ∈ N_C(x^{t+1})
  Scalar f_value = 0;          ///< f_t(x^t)
  Vector<Scalar> g;            ///< g(x^t)
  Vector<Scalar> g_next;       ///< g(x^{t+1})
  Vector<Scalar> grad_f_next;  ///< ∇f_{t+1}(x^{t+1})
  Matrix<Scalar> jacobian_next;  ///< Jg(x^{t+1})
  Scalar sigma = 0;
  Scalar curvature = 0;  ///< max_i ‖Θ^t_i‖ this round

  Scalar inner_residual = 0;
  Scalar inner_tol = 0;
  Index inner_iterations = 0;
  bool solver_failed = false;

  /// Dual route only: y^t and ‖λ^{t+1} − [∇ω_t(y^t) + σy^t]₊‖.
  Vector<Scalar> y;
  Scalar multiplier_identity_error = 0;
};

template <typename Scalar>
struct RunTrace {
  std::vector<RoundRecord<Scalar>> records;
  Vector<Scalar> x_final;
  Vector<Scalar> lambda_final;
  Index failed_rounds = 0;
};

/// Runs T rounds of the online proximal method of multipliers:
/// build models → solve the prox subproblem (primal or dual route) →
/// update multipliers → recover w → receive f_{t+1} → emit.
template <typename Scalar>
RunTrace<Scalar> opmm_run(
    const Problem<Scalar>& problem, LossStream<Scalar>& stream,
    const AlgoParams<Scalar>& params,
    const std::vector<std::function<void(const RoundRecord<Scalar>&)>>& sinks = {},
    bool keep_records = true) {
  params.validate();
  const auto& set = problem.set;
  const auto& cons = problem.constraints;
  if (problem.x1.size() != set.dim()) {
    throw DimensionMismatch("opmm_run", set.dim(), problem.x1.size());
  }
  if (cons.n != set.dim()) {
    throw DimensionMismatch("opmm_run: constraints", set.dim(), cons.n);
  }
  if (!set.contains(problem.x1)) {
    throw InfeasiblePoint("opmm_run: x1 is not in C");
  }

  RunTrace<Scalar> trace;
  Vector<Scalar> x = problem.x1;
  Vector<Scalar> lambda = Vector<Scalar>::Zero(cons.p);
  RoundLoss<Scalar> loss = stream.next();
  Vector<Scalar> g_x = cons.value(x);

  for (Index t = 1; t <= params.horizon; ++t) {
    const auto models = build_models(loss, cons, x, params.strategy);

    RoundRecord<Scalar> rec;
    rec.t = t;
    rec.sigma = params.sigma;
    rec.curvature = models.curvature_bound();

    Vector<Scalar> x_next;
    Vector<Scalar> lambda_from_dual;
    if (params.route == Route::Primal) {
      auto res = solve_subproblem_result(set, models, lambda, params.sigma,
                                         params.alpha, x, params.inner);
      rec.inner_residual = res.residual;
      rec.inner_tol = res.tol;
      rec.inner_iterations = res.iterations;
      rec.solver_failed = !res.converged;
      if (!res.converged && params.strict) {
        throw MaxItersExceeded<Scalar>(
            "round " + std::to_string(t) + ": subproblem iteration limit",
            std::move(res.x), res.residual);
      }
      x_next = std::move(res.x);
    } else {
      const auto dp = make_dual_problem(models, lambda, params.sigma, params.alpha);
      auto sol = solve_dual_result(set, dp, params.inner);
      rec.inner_residual = sol.residual;
      rec.inner_iterations = sol.iterations;
      rec.solver_failed = !sol.converged;
      rec.inner_tol = params.inner.tol > 0
                          ? params.inner.tol
                          : params.inner.relative_tol *
                                (1 + dual_objective(set, dp, dp.lambda).gradient.norm());
      if (!sol.converged && params.strict) {
        throw MaxItersExceeded<Scalar>(
            "round " + std::to_string(t) + ": dual iteration limit",
            std::move(sol.y), sol.residual);
      }
      x_next = recover_primal(set, dp, sol.y);
      lambda_from_dual = recover_multiplier(sol.gradient, params.sigma, sol.y);
      rec.y = std::move(sol.y);
    }
    if (rec.solver_failed) ++trace.failed_rounds;

    Vector<Scalar> lambda_next =
        update_multipliers(lambda, params.sigma, models, x_next);
    if (params.route == Route::Dual) {
      rec.multiplier_identity_error = (lambda_next - lambda_from_dual).norm();
    }
    rec.w = recover_w(models, lambda_next, params.alpha, x, x_next);

    // Online protocol: f_{t+1} is revealed only after x^{t+1} is committed.
    RoundLoss<Scalar> next_loss = stream.next();

    rec.x = x;
    rec.x_next = x_next;
    rec.lambda = lambda;
    rec.lambda_next = lambda_next;
    rec.f_value = models.objective.constant;
    rec.g = g_x;
    rec.g_next = cons.value(x_next);
    rec.grad_f_next = next_loss.gradient(x_next);
    rec.jacobian_next = cons.jacobian(x_next);

    for (const auto& sink : sinks) sink(rec);

    x = std::move(x_next);
    lambda = std::move(lambda_next);
    g_x = rec.g_next;
    loss = std::move(next_loss);
    if (keep_records) trace.records.push_back(std::move(rec));
  }
  trace.x_final = std::move(x);
  trace.lambda_final = std::move(lambda);
  return trace;
}

}  // namespace opmm
