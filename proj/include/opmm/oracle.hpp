// Copyright (c) opmm contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "opmm/types.hpp"

namespace opmm {

/// One round's loss f_t together with its declared regularity constants.
template <typename Scalar>
struct RoundLoss {
  std::function<Scalar(const Vector<Scalar>&)> value;
  std::function<Vector<Scalar>(const Vector<Scalar>&)> gradient;

  /// Lipschitz constant of f_t on C (also bounds ‖∇f_t‖ there).
  Scalar kappa_f = 0;
  /// Lipschitz constant of ∇f_t on C.
  Scalar lipschitz_grad = 0;
  bool convex = false;

  /// Set for convex quadratic losses; the loss then equals its own second
  /// order expansion everywhere.
  std::optional<Matrix<Scalar>> hessian;
  /// True when `hessian` is a multiple of the identity.
  bool hessian_is_scalar = false;

  bool is_quadratic_convex() const { return hessian.has_value(); }
};

/// The shared constraint map g: ℝⁿ → ℝᵖ with its declared constants and a
/// Slater point.
template <typename Scalar>
struct ConstraintFamily {
  Index n = 0;
  Index p = 0;
  std::function<Vector<Scalar>(const Vector<Scalar>&)> value;
  /// p×n Jacobian.
  std::function<Matrix<Scalar>(const Vector<Scalar>&)> jacobian;
  std::vector<bool> convex;

  Scalar kappa_g = 0;  ///< Lipschitz constant of each g_i on C.
  Scalar nu_g = 0;     ///< Bound on ‖g(x)‖ over C.
  Scalar lipschitz_grad = 0;  ///< Lipschitz constant of each ∇g_i on C.

  Vector<Scalar> slater_point;
  Scalar slater_margin = 0;  ///< ε₀ with g_i(x̂) ≤ −ε₀.

  bool all_convex() const {
    for (bool c : convex) {
      if (!c) return false;
    }
    return true;
  }
};

/// Curvature of a quadratic model, stored in the cheapest exact form.
template <typename Scalar>
class Curvature {
 public:
  enum class Form { Zero, ScalarIdentity, Dense };

  static Curvature zero() { return Curvature{Form::Zero}; }
  static Curvature scalar_identity(Scalar eta) {
    Curvature c{Form::ScalarIdentity};
    c.eta_ = eta;
    return c;
  }
  static Curvature dense(Matrix<Scalar> m) {
    Curvature c{Form::Dense};
    c.dense_ = Scalar(0.5) * (m + m.transpose());
    return c;
  }

  Form form() const { return form_; }
  Scalar eta() const { return eta_; }
  const Matrix<Scalar>& dense_matrix() const { return dense_; }

  Vector<Scalar> apply(const Vector<Scalar>& v) const {
    switch (form_) {
      case Form::Zero:
        return Vector<Scalar>::Zero(v.size());
      case Form::ScalarIdentity:
        return eta_ * v;
      case Form::Dense:
        return dense_ * v;
    }
    return v;
  }

  /// Spectral norm ‖Θ‖.
  Scalar norm() const {
    switch (form_) {
      case Form::Zero:
        return Scalar(0);
      case Form::ScalarIdentity:
        return std::abs(eta_);
      case Form::Dense:
        return eigenvalues().cwiseAbs().maxCoeff();
    }
    return Scalar(0);
  }

  Scalar min_eigenvalue() const {
    switch (form_) {
      case Form::Zero:
        return Scalar(0);
      case Form::ScalarIdentity:
        return eta_;
      case Form::Dense:
        return eigenvalues().minCoeff();
    }
    return Scalar(0);
  }

  Matrix<Scalar> to_dense(Index n) const {
    switch (form_) {
      case Form::Zero:
        return Matrix<Scalar>::Zero(n, n);
      case Form::ScalarIdentity:
        return eta_ * Matrix<Scalar>::Identity(n, n);
      case Form::Dense:
        return dense_;
    }
    return {};
  }

 private:
  explicit Curvature(Form form) : form_{form} {}

  Vector<Scalar> eigenvalues() const {
    return Eigen::SelfAdjointEigenSolver<Matrix<Scalar>>(dense_,
                                                         Eigen::EigenvaluesOnly)
        .eigenvalues();
  }

  Form form_;
  Scalar eta_ = 0;
  Matrix<Scalar> dense_;
};

/// q(x) = c + ⟨b, x − a⟩ + ½⟨Θ(x − a), x − a⟩ anchored at a.
template <typename Scalar>
struct QuadModel {
  Vector<Scalar> anchor;
  Scalar constant = 0;
  Vector<Scalar> grad;
  Curvature<Scalar> theta = Curvature<Scalar>::zero();

  Scalar value(const Vector<Scalar>& x) const {
    const Vector<Scalar> d = x - anchor;
    return constant + grad.dot(d) + Scalar(0.5) * d.dot(theta.apply(d));
  }

  Vector<Scalar> gradient(const Vector<Scalar>& x) const {
    return grad + theta.apply(x - anchor);
  }
};

/// The surrogate models of one round: q₀ for the loss, q_i for each g_i.
template <typename Scalar>
struct Models {
  QuadModel<Scalar> objective;
  std::vector<QuadModel<Scalar>> constraints;

  Index p() const { return static_cast<Index>(constraints.size()); }

  Vector<Scalar> constraint_values(const Vector<Scalar>& x) const {
    Vector<Scalar> out(p());
    for (Index i = 0; i < p(); ++i) out(i) = constraints[i].value(x);
    return out;
  }

  /// max over i = 0..p of ‖Θ_i‖.
  Scalar curvature_bound() const {
    Scalar k = objective.theta.norm();
    for (const auto& q : constraints) k = std::max(k, q.theta.norm());
    return k;
  }
};

/// How the curvature matrices Θ^t_i are chosen each round.
struct ThetaStrategy {
  enum class Kind {
    /// All Θ = 0. Requires convex g and a convex loss.
    Zero,
    /// Θ₀ = η₀·I, Θ_i = 0. Requires convex g.
    Scalar,
    /// Θ₀ = η₀·I; Θ_i = −L_g·I for non-convex g_i (a concave minorant by
    /// the descent lemma), 0 for convex g_i.
    ConcaveMinorant,
    /// Θ₀ = ∇²f_t for convex quadratic losses, Θ_i = 0. Requires convex g.
    ExactHessian,
  };

  Kind kind = Kind::Scalar;
  double eta0 = 0.0;

  static ThetaStrategy zero() { return {Kind::Zero, 0.0}; }
  static ThetaStrategy scalar(double eta0) { return {Kind::Scalar, eta0}; }
  static ThetaStrategy concave_minorant(double eta0) {
    return {Kind::ConcaveMinorant, eta0};
  }
  static ThetaStrategy exact_hessian() { return {Kind::ExactHessian, 0.0}; }
};

inline std::string to_string(ThetaStrategy::Kind kind) {
  switch (kind) {
    case ThetaStrategy::Kind::Zero:
      return "zero";
    case ThetaStrategy::Kind::Scalar:
      return "scalar";
    case ThetaStrategy::Kind::ConcaveMinorant:
      return "concave-minorant";
    case ThetaStrategy::Kind::ExactHessian:
      return "exact-hessian";
  }
  return "unknown";
}

namespace detail {

// Curvature choice for each strategy, without validating its preconditions.
template <typename Scalar>
Models<Scalar> build_models_unchecked(const RoundLoss<Scalar>& loss,
                                      const ConstraintFamily<Scalar>& cons,
                                      const Vector<Scalar>& x_t,
                                      const ThetaStrategy& strategy) {
  using Kind = ThetaStrategy::Kind;
  Models<Scalar> m;
  m.objective.anchor = x_t;
  m.objective.constant = loss.value(x_t);
  m.objective.grad = loss.gradient(x_t);
  switch (strategy.kind) {
    case Kind::Zero:
      break;
    case Kind::Scalar:
    case Kind::ConcaveMinorant:
      if (strategy.eta0 > 0) {
        m.objective.theta = Curvature<Scalar>::scalar_identity(
            static_cast<Scalar>(strategy.eta0));
      }
      break;
    case Kind::ExactHessian:
      if (!loss.hessian) break;
      if (loss.hessian_is_scalar) {
        m.objective.theta =
            Curvature<Scalar>::scalar_identity((*loss.hessian)(0, 0));
      } else {
        m.objective.theta = Curvature<Scalar>::dense(*loss.hessian);
      }
      break;
  }

  const Vector<Scalar> g = cons.value(x_t);
  const Matrix<Scalar> jac = cons.jacobian(x_t);
  m.constraints.resize(cons.p);
  for (Index i = 0; i < cons.p; ++i) {
    auto& q = m.constraints[i];
    q.anchor = x_t;
    q.constant = g(i);
    q.grad = jac.row(i).transpose();
    if (strategy.kind == Kind::ConcaveMinorant && !cons.convex[i]) {
      q.theta = Curvature<Scalar>::scalar_identity(-cons.lipschitz_grad);
    }
  }
  return m;
}

}  // namespace detail

/// Throws StrategyAssumptionViolation when the convexity flags of the loss or
/// the constraints contradict the strategy.
template <typename Scalar>
void check_strategy(const RoundLoss<Scalar>& loss,
                    const ConstraintFamily<Scalar>& cons,
                    const ThetaStrategy& strategy) {
  using Kind = ThetaStrategy::Kind;
  if (static_cast<Index>(cons.convex.size()) != cons.p) {
    throw InvalidArgument("convex flags do not match the constraint count");
  }
  if (strategy.kind != Kind::ConcaveMinorant && !cons.all_convex()) {
    throw StrategyAssumptionViolation(
        "strategy '" + to_string(strategy.kind) +
        "' requires every constraint to be convex");
  }
  if (strategy.kind == Kind::Zero && !loss.convex &&
      !loss.is_quadratic_convex()) {
    throw StrategyAssumptionViolation("strategy 'zero' requires a convex loss");
  }
  if (strategy.kind == Kind::ExactHessian && !loss.is_quadratic_convex()) {
    throw StrategyAssumptionViolation(
        "strategy 'exact-hessian' requires a convex quadratic loss");
  }
  if ((strategy.kind == Kind::Scalar ||
       strategy.kind == Kind::ConcaveMinorant) &&
      !(strategy.eta0 >= 0)) {
    throw StrategyAssumptionViolation("eta0 must be nonnegative");
  }
}

/// Builds q^t₀ and q^t_i at the anchor x_t after validating the strategy.
template <typename Scalar>
Models<Scalar> build_models(const RoundLoss<Scalar>& loss,
                            const ConstraintFamily<Scalar>& cons,
                            const Vector<Scalar>& x_t,
                            const ThetaStrategy& strategy) {
  if (x_t.size() != cons.n) {
    throw DimensionMismatch("build_models", cons.n, x_t.size());
  }
  check_strategy(loss, cons, strategy);
  return detail::build_models_unchecked(loss, cons, x_t, strategy);
}

}  // namespace opmm
