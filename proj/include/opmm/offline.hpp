// Copyright (c) opmm contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "opmm/geometry.hpp"
#include "opmm/oracle.hpp"
#include "opmm/projected_gradient.hpp"
#include "opmm/types.hpp"

namespace opmm {

/// Σ_t f_t(z) = c + ⟨b, z⟩ + ½ zᵀ H z for losses with constant Hessians.
template <typename Scalar>
struct QuadraticSum {
  Scalar constant = 0;
  Vector<Scalar> linear;
  Matrix<Scalar> hessian;
  Index terms = 0;

  Scalar value(const Vector<Scalar>& z) const {
    return constant + linear.dot(z) + Scalar(0.5) * z.dot(hessian * z);
  }
  Vector<Scalar> gradient(const Vector<Scalar>& z) const {
    return linear + hessian * z;
  }
  /// Largest eigenvalue of H.
  Scalar curvature() const {
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(hessian,
                                                     Eigen::EigenvaluesOnly);
    return std::max(Scalar(0), es.eigenvalues().maxCoeff());
  }
};

template <typename Scalar>
QuadraticSum<Scalar> aggregate_quadratic(std::span<const RoundLoss<Scalar>> losses,
                                         Index n) {
  QuadraticSum<Scalar> q;
  q.linear = Vector<Scalar>::Zero(n);
  q.hessian = Matrix<Scalar>::Zero(n, n);
  const Vector<Scalar> zero = Vector<Scalar>::Zero(n);
  for (const auto& f : losses) {
    if (!f.hessian) {
      throw InvalidArgument("offline oracle: every loss needs a constant Hessian");
    }
    if (f.hessian->rows() != n || f.hessian->cols() != n) {
      throw DimensionMismatch("offline oracle: hessian", n, f.hessian->rows());
    }
    q.constant += f.value(zero);
    q.linear += f.gradient(zero);
    q.hessian += *f.hessian;
    ++q.terms;
  }
  q.hessian = Scalar(0.5) * (q.hessian + q.hessian.transpose()).eval();
  return q;
}

enum class OfflineMode { Auto, Grid, Convex };

template <typename Scalar>
struct OfflineParams {
  /// Auto uses the convex solver when every g_i is convex, the grid otherwise.
  OfflineMode mode = OfflineMode::Auto;
  /// Grid spacing. When not positive: D₀/2000 for n ≤ 2, D₀/200 for n = 3.
  Scalar pitch = 0;
  /// Points with max_i g_i ≤ feasibility_tol count as feasible.
  Scalar feasibility_tol = Scalar(1e-10);
  Index outer_iters = 100;
  InnerSolverParams<Scalar> inner{20000, 0, Scalar(1e-13)};
};

template <typename Scalar>
struct OfflineResult {
  Vector<Scalar> point;
  /// Σ_t f_t(point).
  Scalar value = 0;
  /// value / T.
  Scalar average = 0;
  Scalar max_violation = 0;
  OfflineMode mode_used = OfflineMode::Convex;
  Scalar pitch = 0;
  /// For grid mode, n·h²·λ_max(H)/8, the quadratic error of rounding a point
  /// to the grid.
  Scalar grid_error = 0;
  /// ‖z − Π_C(z − ∇ₓℓ(z, μ))‖ at the returned point and multipliers.
  Scalar stationarity = 0;
  Vector<Scalar> multipliers;
};

namespace detail {

/// Augmented-Lagrangian minimization of the averaged quadratic over
/// {z ∈ C : g(z) ≤ 0}, started from z0.
template <typename Scalar>
OfflineResult<Scalar> offline_al(const QuadraticSum<Scalar>& q,
                                 const SimpleSet<Scalar>& set,
                                 const ConstraintFamily<Scalar>& cons,
                                 Vector<Scalar> z0,
                                 const OfflineParams<Scalar>& params) {
  const Scalar scale = Scalar(1) / Scalar(std::max<Index>(q.terms, 1));
  Vector<Scalar> mu = Vector<Scalar>::Zero(cons.p);
  Scalar rho = 10;
  Vector<Scalar> z = project(set, z0);
  auto proj = [&](const Vector<Scalar>& x) { return project(set, x); };
  Scalar prev_viol = std::numeric_limits<Scalar>::infinity();

  for (Index outer = 0; outer < params.outer_iters; ++outer) {
    auto fun = [&](const Vector<Scalar>& x) {
      Scalar v = scale * q.value(x);
      Vector<Scalar> g = scale * q.gradient(x);
      if (cons.p > 0) {
        const Vector<Scalar> gv = cons.value(x);
        const Vector<Scalar> shifted = positive_part(mu + rho * gv);
        v += (shifted.squaredNorm() - mu.squaredNorm()) / (2 * rho);
        g += cons.jacobian(x).transpose() * shifted;
      }
      return std::pair<Scalar, Vector<Scalar>>{v, std::move(g)};
    };
    const Scalar lip = scale * q.curvature() + rho * cons.kappa_g * cons.kappa_g +
                       Scalar(1);
    auto r = projected_gradient<Scalar>(fun, proj, z, params.inner,
                                        Scalar(1) / lip);
    z = std::move(r.x);
    if (cons.p == 0) break;
    const Vector<Scalar> gv = cons.value(z);
    const Vector<Scalar> mu_next = positive_part(mu + rho * gv);
    const Scalar viol = std::max(Scalar(0), gv.maxCoeff());
    const Scalar comp = (mu_next - positive_part(mu_next + gv)).norm();
    mu = mu_next;
    if (viol <= params.feasibility_tol && comp <= Scalar(1e-10) &&
        (mu - positive_part(mu + rho * gv)).norm() <= Scalar(1e-12) * (1 + mu.norm())) {
      break;
    }
    if (viol > Scalar(0.25) * prev_viol) rho = std::min(rho * 10, Scalar(1e12));
    prev_viol = viol;
  }

  OfflineResult<Scalar> out;
  out.point = z;
  out.value = q.value(z);
  out.average = out.value * scale;
  out.max_violation =
      cons.p > 0 ? std::max(Scalar(0), cons.value(z).maxCoeff()) : Scalar(0);
  out.multipliers = mu;
  Vector<Scalar> grad = scale * q.gradient(z);
  if (cons.p > 0) grad += cons.jacobian(z).transpose() * mu;
  out.stationarity = (z - project(set, Vector<Scalar>(z - grad))).norm();
  out.mode_used = OfflineMode::Convex;
  return out;
}

}  // namespace detail

/// Minimizer of Σ_t f_t over Φ = {z ∈ C : g(z) ≤ 0} for quadratic losses.
///
/// Convex mode runs an augmented-Lagrangian loop with projected-gradient
/// inner solves. Grid mode (n ≤ 3) scans a uniform grid over the bounding box
/// of C, keeps the best feasible point and polishes it with the same local
/// solver, keeping the polish only if it stays feasible and improves the value.
template <typename Scalar>
OfflineResult<Scalar> offline_oracle(std::span<const RoundLoss<Scalar>> losses,
                                     const SimpleSet<Scalar>& set,
                                     const ConstraintFamily<Scalar>& cons,
                                     const OfflineParams<Scalar>& params = {}) {
  const Index n = set.dim();
  if (cons.n != n) throw DimensionMismatch("offline_oracle", n, cons.n);
  if (losses.empty()) throw InvalidArgument("offline_oracle: no losses");
  const auto q = aggregate_quadratic(losses, n);

  OfflineMode mode = params.mode;
  if (mode == OfflineMode::Auto) {
    mode = cons.all_convex() ? OfflineMode::Convex : OfflineMode::Grid;
  }
  if (mode == OfflineMode::Convex && !cons.all_convex()) {
    throw InvalidArgument("offline_oracle: convex mode needs convex constraints");
  }
  if (mode == OfflineMode::Grid && n > 3) {
    throw InvalidArgument("offline_oracle: grid mode supports n <= 3, got n = " +
                          std::to_string(n));
  }

  if (mode == OfflineMode::Convex) {
    Vector<Scalar> start = cons.slater_point.size() == n
                               ? Vector<Scalar>(cons.slater_point)
                               : project(set, Vector<Scalar>(Vector<Scalar>::Zero(n)));
    return detail::offline_al(q, set, cons, std::move(start), params);
  }

  const Scalar d0 = set.diameter();
  Scalar h = params.pitch;
  if (!(h > 0)) h = d0 / (n <= 2 ? Scalar(2000) : Scalar(200));
  if (!(h > 0)) h = Scalar(1);
  const auto [lo, hi] = set.bounding_box();
  std::vector<Index> counts(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    counts[j] = static_cast<Index>(std::floor((hi(j) - lo(j)) / h + 1e-9)) + 1;
  }

  Vector<Scalar> z(n);
  Vector<Scalar> best;
  Scalar best_value = std::numeric_limits<Scalar>::infinity();
  std::vector<Index> idx(static_cast<std::size_t>(n), 0);
  while (true) {
    for (Index j = 0; j < n; ++j) z(j) = std::min(hi(j), lo(j) + Scalar(idx[j]) * h);
    if (set.contains(z)) {
      const Scalar v = q.value(z);
      if (v < best_value &&
          (cons.p == 0 || cons.value(z).maxCoeff() <= params.feasibility_tol)) {
        best_value = v;
        best = z;
      }
    }
    Index j = 0;
    while (j < n && ++idx[j] == counts[j]) idx[j++] = 0;
    if (j == n) break;
  }
  if (best.size() == 0) {
    throw InfeasiblePoint("offline_oracle: no feasible grid point");
  }

  OfflineResult<Scalar> out;
  auto polished = detail::offline_al(q, set, cons, best, params);
  if (polished.max_violation <= params.feasibility_tol &&
      polished.value <= best_value) {
    out = std::move(polished);
  } else {
    out.point = best;
    out.value = best_value;
    out.average = best_value / Scalar(q.terms);
    out.max_violation =
        cons.p > 0 ? std::max(Scalar(0), cons.value(best).maxCoeff()) : Scalar(0);
    out.multipliers = Vector<Scalar>::Zero(cons.p);
    out.stationarity = polished.stationarity;
  }
  out.mode_used = OfflineMode::Grid;
  out.pitch = h;
  out.grid_error = Scalar(n) * h * h * q.curvature() / 8;
  return out;
}

}  // namespace opmm
