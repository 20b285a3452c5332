// Copyright (c) opmm contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "opmm/types.hpp"

namespace opmm {

/// Every derived constant evaluated at one (σ, α, s).
template <typename Scalar>
struct ConstantsSnapshot {
  Scalar beta0;
  Scalar theta;
  Scalar psi;
  Scalar kappa0;
  Scalar kappa1;
  Scalar kappa2;
  Scalar kappa3;
};

/// Problem constants that drive the multiplier bounds and regret
/// coefficients.
///
/// κ_q and L_g may be zero (linear constraints, first-order models); every
/// other constant must be strictly positive.
template <typename Scalar>
struct StructuralConstants {
  Scalar kappa_f = 0;
  Scalar kappa_g = 0;
  Scalar nu_g = 0;
  Scalar lipschitz_f = 0;
  Scalar lipschitz_g = 0;
  Scalar kappa_q = 0;
  Scalar slater_margin = 0;  ///< ε₀
  Scalar diameter = 0;       ///< D₀
  Index p = 0;

  void validate() const {
    auto positive = [](Scalar v, const char* name) {
      if (!(v > 0)) {
        throw InvalidArgument(std::string("constants: ") + name +
                              " must be positive");
      }
    };
    auto nonnegative = [](Scalar v, const char* name) {
      if (!(v >= 0)) {
        throw InvalidArgument(std::string("constants: ") + name +
                              " must be nonnegative");
      }
    };
    positive(kappa_f, "kappa_f");
    positive(kappa_g, "kappa_g");
    positive(nu_g, "nu_g");
    positive(slater_margin, "slater_margin");
    positive(diameter, "diameter");
    nonnegative(lipschitz_f, "lipschitz_f");
    nonnegative(lipschitz_g, "lipschitz_g");
    nonnegative(kappa_q, "kappa_q");
    if (p <= 0) throw InvalidArgument("constants: p must be positive");
  }

  /// β₀ = ν_g + √p (κ_g D₀ + ½ κ_q D₀²), the per-round multiplier step
  /// bound divided by σ.
  Scalar beta0() const {
    const Scalar d = diameter;
    return nu_g + std::sqrt(Scalar(p)) *
                      (kappa_g * d + Scalar(0.5) * kappa_q * d * d);
  }

  /// Threshold above which ‖λ‖ drifts down over s rounds.
  Scalar theta(Scalar sigma, Scalar alpha, Index s) const {
    check_args(sigma, alpha, s);
    const Scalar eps = slater_margin;
    const Scalar d = diameter;
    const Scalar ss = Scalar(s);
    return eps * sigma * ss / 2 + beta0() * sigma * (ss - 1) +
           alpha * d * d / (eps * ss) +
           (2 * kappa_f * d + kappa_q * d * d) / eps +
           sigma * nu_g * nu_g / eps;
  }

  /// ψ(σ, α, s) = ϑ(σ, α, s) + [β₀ + (8β₀²/ε₀) ln(32β₀²/ε₀²)] σ s, a uniform
  /// bound on ‖λ^t‖. The logarithm is natural.
  Scalar psi(Scalar sigma, Scalar alpha, Index s) const {
    return theta(sigma, alpha, s) + drift_coefficient() * sigma * Scalar(s);
  }

  Scalar kappa0() const {
    const Scalar d = diameter;
    return (2 * kappa_f * d + kappa_q * d * d) / slater_margin;
  }
  Scalar kappa1() const { return diameter * diameter / slater_margin; }
  /// May be negative.
  Scalar kappa2() const { return nu_g * nu_g / slater_margin - beta0(); }
  Scalar kappa3() const {
    return 2 * beta0() + slater_margin / 2 + log_term();
  }

  /// κ₀ + κ₁α/s + κ₂σ + κ₃σs, algebraically equal to psi().
  Scalar psi_expanded(Scalar sigma, Scalar alpha, Index s) const {
    check_args(sigma, alpha, s);
    return kappa0() + kappa1() * alpha / Scalar(s) + kappa2() * sigma +
           kappa3() * sigma * Scalar(s);
  }

  /// min over integer s ∈ [1, s_max] of ψ(σ, α, s). ψ is convex in s, so the
  /// minimizer is one of the integers bracketing √(κ₁α / (κ₃σ)).
  Scalar min_psi(Scalar sigma, Scalar alpha, Index s_max,
                 Index* argmin = nullptr) const {
    check_args(sigma, alpha, s_max);
    const Scalar s_star = std::sqrt(kappa1() * alpha / (kappa3() * sigma));
    Index best_s = 1;
    Scalar best = psi(sigma, alpha, 1);
    for (Scalar cand : {std::floor(s_star), std::ceil(s_star), Scalar(s_max)}) {
      const Index s = static_cast<Index>(
          std::clamp(cand, Scalar(1), Scalar(s_max)));
      const Scalar v = psi(sigma, alpha, s);
      if (v < best) {
        best = v;
        best_s = s;
      }
    }
    if (argmin != nullptr) *argmin = best_s;
    return best;
  }

  ConstantsSnapshot<Scalar> snapshot(Scalar sigma, Scalar alpha,
                                     Index s) const {
    return {beta0(),  theta(sigma, alpha, s), psi(sigma, alpha, s),
            kappa0(), kappa1(),               kappa2(),
            kappa3()};
  }

 private:
  Scalar log_term() const {
    const Scalar b = beta0();
    const Scalar eps = slater_margin;
    return 8 * b * b / eps * std::log(32 * b * b / (eps * eps));
  }
  Scalar drift_coefficient() const { return beta0() + log_term(); }

  static void check_args(Scalar sigma, Scalar alpha, Index s) {
    if (!(sigma > 0)) throw InvalidArgument("constants: sigma must be positive");
    if (!(alpha > 0)) throw InvalidArgument("constants: alpha must be positive");
    if (s < 1) throw InvalidArgument("constants: s must be at least 1");
  }
};

}  // namespace opmm
