// Copyright (c) opmm contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "opmm/constants.hpp"
#include "opmm/run.hpp"
#include "opmm/types.hpp"

namespace opmm {

/// Per-round increments kept by the ledger.
template <typename Scalar>
struct LedgerEntry {
  Index t = 0;
  Vector<Scalar> lagrangian;  ///< H_t
  Vector<Scalar> g;           ///< g(x^t)
  Scalar complementarity = 0; ///< ‖λ^{t+1} − [λ^{t+1} + σg(x^{t+1})]₊‖
  Scalar f_value = 0;         ///< f_t(x^t)
};

/// Running sums behind the KKT regrets and the objective regret.
///
/// H_t = ∇f_{t+1}(x^{t+1}) + Σ_i λ^{t+1}_i ∇g_i(x^{t+1}) + w^{t+1} needs the
/// next round's loss, so a round can be opened first and closed once
/// ∇f_{t+1}(x^{t+1}) is known.
template <typename Scalar>
class RegretLedger {
 public:
  RegretLedger(Index n, Index p)
      : sum_h_{Vector<Scalar>::Zero(n)}, sum_g_{Vector<Scalar>::Zero(p)} {}

  /// Adds a complete round. Rounds must arrive as t = 1, 2, ...
  void accumulate(const RoundRecord<Scalar>& r) {
    begin_round(r);
    close_pending(r.grad_f_next);
  }

  /// Opens round r.t; every field except grad_f_next must be final.
  void begin_round(const RoundRecord<Scalar>& r) {
    if (pending_) throw InvalidArgument("ledger: previous round still pending");
    if (r.t != rounds() + 1) {
      throw InvalidArgument("ledger: out-of-order record t=" +
                            std::to_string(r.t) + ", expected " +
                            std::to_string(rounds() + 1));
    }
    if (r.g.size() != sum_g_.size() || r.lambda_next.size() != sum_g_.size()) {
      throw DimensionMismatch("ledger", sum_g_.size(), r.g.size());
    }
    LedgerEntry<Scalar> e;
    e.t = r.t;
    e.g = r.g;
    e.f_value = r.f_value;
    e.complementarity =
        (r.lambda_next - positive_part(r.lambda_next + r.sigma * r.g_next))
            .norm();
    // Everything in H_t except ∇f_{t+1}(x^{t+1}).
    e.lagrangian = r.jacobian_next.transpose() * r.lambda_next + r.w;
    pending_ = std::move(e);
  }

  bool has_pending() const { return pending_.has_value(); }

  void close_pending(const Vector<Scalar>& grad_f_next) {
    if (!pending_) throw InvalidArgument("ledger: no pending round");
    LedgerEntry<Scalar> e = std::move(*pending_);
    pending_.reset();
    e.lagrangian += grad_f_next;
    add(e);
    entries_.push_back(std::move(e));
  }

  Index rounds() const { return static_cast<Index>(entries_.size()); }
  const Vector<Scalar>& sum_lagrangian() const { return sum_h_; }
  const Vector<Scalar>& sum_g() const { return sum_g_; }
  Scalar sum_complementarity() const { return sum_comp_; }
  Scalar sum_f() const { return sum_f_; }
  const std::vector<LedgerEntry<Scalar>>& entries() const { return entries_; }

  /// The ledger of `first` followed by `second` (renumbered).
  static RegretLedger concatenate(const RegretLedger& first,
                                  const RegretLedger& second) {
    RegretLedger out = first;
    for (auto e : second.entries_) {
      e.t = out.rounds() + 1;
      out.add(e);
      out.entries_.push_back(std::move(e));
    }
    return out;
  }

 private:
  void add(const LedgerEntry<Scalar>& e) {
    sum_h_ += e.lagrangian;
    sum_g_ += e.g;
    sum_comp_ += e.complementarity;
    sum_f_ += e.f_value;
  }

  Vector<Scalar> sum_h_;
  Vector<Scalar> sum_g_;
  Scalar sum_comp_ = 0;
  Scalar sum_f_ = 0;
  std::vector<LedgerEntry<Scalar>> entries_;
  std::optional<LedgerEntry<Scalar>> pending_;
};

template <typename Scalar>
struct Regrets {
  /// ‖(1/T) Σ H_t‖, the norm of the average (not the average of norms).
  Scalar lagrangian = 0;
  /// (1/T) Σ g_i(x^t) for each i.
  Vector<Scalar> violation;
  Scalar max_violation = 0;
  Scalar complementarity = 0;
  /// (1/T) Σ f_t(x^t).
  Scalar average_loss = 0;
};

template <typename Scalar>
Regrets<Scalar> regrets(const RegretLedger<Scalar>& ledger) {
  const Index T = ledger.rounds();
  if (T == 0) throw InvalidArgument("regrets: empty ledger");
  const Scalar inv = Scalar(1) / Scalar(T);
  Regrets<Scalar> r;
  r.lagrangian = (ledger.sum_lagrangian() * inv).norm();
  r.violation = ledger.sum_g() * inv;
  r.max_violation = r.violation.size() > 0 ? r.violation.maxCoeff() : Scalar(0);
  r.complementarity = ledger.sum_complementarity() * inv;
  r.average_loss = ledger.sum_f() * inv;
  return r;
}

template <typename Scalar>
struct ObjectiveRegret {
  Scalar regret = 0;
  /// (κ_f² + ½ν_g² + ½dist²(x¹, S*))·T^{−1/2}.
  Scalar bound = 0;
};

/// (1/T)Σ f_t(x^t) − (1/T) min over z ∈ Φ of Σ f_t(z), next to the bound for
/// convex quadratic losses run with σ = T^{−1/2}, α = T^{1/2}. Negative values
/// are legitimate.
template <typename Scalar>
ObjectiveRegret<Scalar> objective_regret(const RegretLedger<Scalar>& ledger,
                                         Scalar offline_average,
                                         Scalar kappa_f, Scalar nu_g,
                                         Scalar dist_x1_to_optimum) {
  const Index T = ledger.rounds();
  if (T == 0) throw InvalidArgument("objective_regret: empty ledger");
  ObjectiveRegret<Scalar> out;
  out.regret = ledger.sum_f() / Scalar(T) - offline_average;
  out.bound = (kappa_f * kappa_f + Scalar(0.5) * nu_g * nu_g +
               Scalar(0.5) * dist_x1_to_optimum * dist_x1_to_optimum) /
              std::sqrt(Scalar(T));
  return out;
}

template <typename Scalar>
struct TheoryBounds {
  Scalar step_bound = 0;  ///< σβ₀
  Scalar min_psi = 0;     ///< min over s ∈ [1, T] of ψ(σ, α, s)
  Index min_psi_s = 1;
  Index quarter_s = 1;    ///< ⌈T^{1/4}⌉
  Scalar psi_at_quarter = 0;
  /// Leading coefficient of the Lagrangian-residual rate:
  /// κ_q²/2 + 2(1+p)ν_g K + ((L_g+κ_q)²/2) K², K = κ₀ + κ₁ + κ₃.
  Scalar rho0 = 0;
  /// ν_g K + κ_g², leading coefficient of the violation rate.
  Scalar violation_coefficient = 0;
  /// β₀, leading coefficient of the complementarity rate.
  Scalar complementarity_coefficient = 0;
};

inline Index quarter_power(Index horizon) {
  auto s = static_cast<Index>(std::ceil(std::pow(double(horizon), 0.25) - 1e-12));
  return s < 1 ? 1 : s;
}

template <typename Scalar>
TheoryBounds<Scalar> theory_bounds(const StructuralConstants<Scalar>& c,
                                   Scalar sigma, Scalar alpha, Index horizon) {
  c.validate();
  TheoryBounds<Scalar> b;
  b.step_bound = sigma * c.beta0();
  b.min_psi = c.min_psi(sigma, alpha, horizon, &b.min_psi_s);
  b.quarter_s = quarter_power(horizon);
  b.psi_at_quarter = c.psi(sigma, alpha, b.quarter_s);
  const Scalar k = c.kappa0() + c.kappa1() + c.kappa3();
  const Scalar lq = c.lipschitz_g + c.kappa_q;
  b.rho0 = c.kappa_q * c.kappa_q / 2 + 2 * Scalar(1 + c.p) * c.nu_g * k +
           lq * lq / 2 * k * k;
  b.violation_coefficient = c.nu_g * k + c.kappa_g * c.kappa_g;
  b.complementarity_coefficient = c.beta0();
  return b;
}

/// Hypothesis of the drift lemma: a sequence with Z₀ = 0, bounded steps
/// |Z_{t+1} − Z_t| ≤ δ_max, and Z_{t+t₀} − Z_t ≤ −t₀ζ whenever Z_t ≥ θ.
template <typename Scalar>
struct DriftHypothesis {
  Index t0 = 1;
  Scalar theta = 0;
  Scalar delta_max = 1;
  Scalar zeta = 1;
  /// Slack on the step test, for sequences produced by inexact solves.
  Scalar step_tol = 0;

  /// θ + t₀δ_max + t₀(4δ_max²/ζ) ln(8δ_max²/ζ²).
  Scalar bound() const {
    const Scalar d2 = delta_max * delta_max;
    return theta + Scalar(t0) * delta_max +
           Scalar(t0) * (4 * d2 / zeta) * std::log(8 * d2 / (zeta * zeta));
  }
};

template <typename Scalar>
struct DriftReport {
  bool hypothesis_holds = true;
  /// First t with |Z_{t+1} − Z_t| > δ_max, or −1.
  Index step_violation = -1;
  /// First t with Z_t ≥ θ but Z_{t+t₀} − Z_t > −t₀ζ, or −1.
  Index drift_violation = -1;
  bool bound_holds = true;
  /// First t with Z_t > bound, or −1.
  Index bound_violation = -1;
  Scalar bound = 0;
  Scalar max_value = 0;
};

/// Checks the drift lemma's hypothesis on a finite sequence and, when it
/// holds, whether the sequence respects the lemma's bound. A hypothesis that
/// holds with a violated bound points at a defect in whatever produced Z.
template <typename Scalar>
DriftReport<Scalar> drift_check(std::span<const Scalar> z,
                                const DriftHypothesis<Scalar>& hyp) {
  if (z.empty() || z[0] != 0) {
    throw InvalidArgument("drift_check: the sequence must start at Z_0 = 0");
  }
  if (hyp.t0 < 1 || !(hyp.theta >= 0) || !(hyp.zeta > 0) ||
      !(hyp.zeta <= hyp.delta_max)) {
    throw InvalidArgument("drift_check: need t0 >= 1, theta >= 0, "
                          "0 < zeta <= delta_max");
  }
  DriftReport<Scalar> rep;
  rep.bound = hyp.bound();
  const auto n = static_cast<Index>(z.size());
  for (Index t = 0; t + 1 < n; ++t) {
    if (std::abs(z[t + 1] - z[t]) > hyp.delta_max + hyp.step_tol) {
      rep.step_violation = t;
      break;
    }
  }
  for (Index t = 1; t + hyp.t0 < n; ++t) {
    if (z[t] >= hyp.theta && z[t + hyp.t0] - z[t] > -Scalar(hyp.t0) * hyp.zeta) {
      rep.drift_violation = t;
      break;
    }
  }
  rep.hypothesis_holds = rep.step_violation < 0 && rep.drift_violation < 0;
  for (Index t = 0; t < n; ++t) {
    rep.max_value = std::max(rep.max_value, z[t]);
    if (rep.bound_violation < 0 && z[t] > rep.bound) rep.bound_violation = t;
  }
  rep.bound_holds = rep.bound_violation < 0;
  return rep;
}

/// Least-squares slope of ln(y) against ln(x).
template <typename Scalar>
Scalar loglog_slope(std::span<const Scalar> x, std::span<const Scalar> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InvalidArgument("loglog_slope: need at least two matching points");
  }
  const auto n = static_cast<Scalar>(x.size());
  Scalar sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) {
      throw InvalidArgument("loglog_slope: values must be positive");
    }
    const Scalar lx = std::log(x[i]);
    const Scalar ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace opmm
