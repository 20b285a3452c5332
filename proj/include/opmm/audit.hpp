// Copyright (c) opmm contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "opmm/constants.hpp"
#include "opmm/geometry.hpp"
#include "opmm/oracle.hpp"

namespace opmm {

/// Outcome of one assumption check. `worst` is the largest observed value of
/// the audited quantity and `limit` the bound it is compared against.
struct AuditCheck {
  std::string name;
  std::string description;
  bool passed = true;
  /// Failing a non-required check is reported as a warning.
  bool required = true;
  double worst = 0.0;
  double limit = 0.0;
  std::string witness;
};

inline AuditCheck make_check(std::string name, std::string description) {
  AuditCheck c;
  c.name = std::move(name);
  c.description = std::move(description);
  return c;
}

struct AuditReport {
  std::vector<AuditCheck> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const AuditCheck& c) {
      return c.passed || !c.required;
    });
  }

  const AuditCheck* find(const std::string& name) const {
    for (const auto& c : checks) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }

  std::string to_text() const {
    std::ostringstream os;
    os.precision(6);
    for (const auto& c : checks) {
      const char* status = c.passed ? "PASS" : (c.required ? "FAIL" : "WARN");
      os << status << "  " << c.name << "  " << c.description
         << "  worst=" << c.worst << " limit=" << c.limit;
      if (!c.passed && !c.witness.empty()) os << "  witness: " << c.witness;
      os << '\n';
    }
    os << (passed() ? "audit passed" : "audit failed") << '\n';
    return os.str();
  }
};

template <typename Scalar>
struct AuditRequest {
  ThetaStrategy strategy;
  /// Declared bound on ‖Θ^t_i‖.
  Scalar kappa_q = 0;
  Scalar sigma = 1;
  /// Multipliers at which convexity of x ↦ L^t_σ(x, λ) is probed. λ = 0 is
  /// always probed.
  std::vector<Vector<Scalar>> multipliers;
  /// Also require every constraint to be convex and Θ₀ to be a multiple of
  /// the identity (the projection route).
  bool dual_route = false;
  Index samples = 128;
  std::uint64_t seed = 1;
  Scalar tol = Scalar(1e-9);
};

/// Sampled estimates of the regularity constants.
template <typename Scalar>
struct EstimatedConstants {
  Scalar kappa_f = 0;
  Scalar kappa_g = 0;
  Scalar nu_g = 0;
  Scalar lipschitz_f = 0;
  Scalar lipschitz_g = 0;
};

namespace detail {

template <typename Scalar>
std::string format_point(const Vector<Scalar>& x) {
  std::ostringstream os;
  os.precision(6);
  os << '(';
  for (Index i = 0; i < x.size(); ++i) {
    if (i > 0) os << ", ";
    os << x(i);
  }
  os << ')';
  return os.str();
}

template <typename Scalar>
std::vector<Vector<Scalar>> audit_points(const SimpleSet<Scalar>& set,
                                         Index samples, std::uint64_t seed) {
  std::mt19937_64 rng{seed};
  std::vector<Vector<Scalar>> pts;
  for (const auto& v : set.vertices()) pts.push_back(v);
  for (Index k = 0; k < samples; ++k) pts.push_back(set.sample(rng));
  return pts;
}

// Records `value` against `limit` for check `c` and keeps the worst witness.
inline void observe(AuditCheck& c, double value, double limit,
                    const std::string& witness) {
  const double excess = value - limit;
  const double worst_excess = c.worst - c.limit;
  if (c.witness.empty() || excess > worst_excess) {
    c.worst = value;
    c.limit = limit;
    c.witness = witness;
  }
}

inline void finish(AuditCheck& c, double tol) {
  c.passed = c.worst <= c.limit + tol * (1.0 + std::abs(c.limit));
}

template <typename Scalar>
Scalar augmented_lagrangian_value(const Models<Scalar>& m,
                                  const Vector<Scalar>& lambda, Scalar sigma,
                                  const Vector<Scalar>& x) {
  Scalar pen = 0;
  for (Index i = 0; i < m.p(); ++i) {
    const Scalar s = std::max(Scalar(0), lambda(i) + sigma * m.constraints[i].value(x));
    pen += s * s;
  }
  return m.objective.value(x) + (pen - lambda.squaredNorm()) / (2 * sigma);
}

}  // namespace detail

/// Estimates κ_f, κ_g, ν_g, L_f, L_g by sampling C: gradient norms, value
/// differences and gradient differences over sampled pairs, and ‖g‖ at
/// sampled points. Estimates are lower bounds of the true constants.
template <typename Scalar>
EstimatedConstants<Scalar> estimate_constants(
    std::span<const RoundLoss<Scalar>> losses,
    const ConstraintFamily<Scalar>& cons, const SimpleSet<Scalar>& set,
    Index samples = 256, std::uint64_t seed = 7) {
  const auto pts = detail::audit_points(set, samples, seed);
  EstimatedConstants<Scalar> est;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const auto& x = pts[k];
    const auto& y = pts[(k + 1) % pts.size()];
    const Scalar dxy = (x - y).norm();
    const Vector<Scalar> gx = cons.value(x);
    const Matrix<Scalar> jx = cons.jacobian(x);
    est.nu_g = std::max(est.nu_g, gx.norm());
    est.kappa_g = std::max(est.kappa_g, jx.rowwise().norm().maxCoeff());
    if (dxy > 0) {
      const Vector<Scalar> gy = cons.value(y);
      const Matrix<Scalar> jy = cons.jacobian(y);
      est.kappa_g = std::max(est.kappa_g, (gx - gy).cwiseAbs().maxCoeff() / dxy);
      est.lipschitz_g =
          std::max(est.lipschitz_g, (jx - jy).rowwise().norm().maxCoeff() / dxy);
    }
    for (const auto& f : losses) {
      const Vector<Scalar> fx = f.gradient(x);
      est.kappa_f = std::max(est.kappa_f, fx.norm());
      if (dxy > 0) {
        est.kappa_f = std::max(est.kappa_f, std::abs(f.value(x) - f.value(y)) / dxy);
        est.lipschitz_f =
            std::max(est.lipschitz_f, (fx - f.gradient(y)).norm() / dxy);
      }
    }
  }
  return est;
}

/// Audits the structural and model assumptions by deterministic sampling
/// over C. Report-only: never throws on a failed assumption.
///
/// A1: Lipschitz ratios of f_t and g_i, and ‖g‖ ≤ ν_g.
/// A2: gradient Lipschitz ratios.
/// A3: Slater point in C with g(x̂) ≤ −ε₀, and ν_g ≥ ε₀.
/// B1: Θ₀ ⪰ 0. B2: q_i ≤ g_i on C. B3: ‖Θ_i‖ ≤ κ_q.
/// B4: second differences of x ↦ L^t_σ(x, λ) along sampled segments
/// (warning only).
template <typename Scalar>
AuditReport assumption_audit(std::span<const RoundLoss<Scalar>> losses,
                             const ConstraintFamily<Scalar>& cons,
                             const SimpleSet<Scalar>& set,
                             const AuditRequest<Scalar>& req) {
  using detail::format_point;
  using detail::observe;
  const double tol = static_cast<double>(req.tol);
  const auto pts = detail::audit_points(set, req.samples, req.seed);
  const std::size_t npts = pts.size();

  AuditReport report;
  auto strategy = make_check("strategy", "convexity flags match the theta strategy");
  if (!losses.empty()) {
    try {
      check_strategy(losses.front(), cons, req.strategy);
    } catch (const Error& e) {
      strategy.passed = false;
      strategy.witness = e.what();
    }
  }
  report.checks.push_back(strategy);

  auto a1f = make_check("A1.f", "|f(x)-f(x')| <= kappa_f |x-x'|");
  auto a1g = make_check("A1.g", "|g_i(x)-g_i(x')| <= kappa_g |x-x'|");
  auto a1nu = make_check("A1.nu", "|g(x)| <= nu_g");
  auto a2f = make_check("A2.f", "|grad f(x)-grad f(x')| <= L_f |x-x'|");
  auto a2g = make_check("A2.g", "|grad g_i(x)-grad g_i(x')| <= L_g |x-x'|");

  for (std::size_t k = 0; k < npts; ++k) {
    const auto& x = pts[k];
    const auto& y = pts[(k * 7 + 3) % npts];
    const Scalar dxy = (x - y).norm();
    const std::string pair = format_point(x) + " " + format_point(y);

    const Vector<Scalar> gx = cons.value(x);
    observe(a1nu, double(gx.norm()), double(cons.nu_g), format_point(x));
    if (dxy > 0) {
      const Vector<Scalar> gy = cons.value(y);
      const Matrix<Scalar> jx = cons.jacobian(x);
      const Matrix<Scalar> jy = cons.jacobian(y);
      for (Index i = 0; i < cons.p; ++i) {
        observe(a1g, double(std::abs(gx(i) - gy(i)) / dxy),
                double(cons.kappa_g), "g_" + std::to_string(i + 1) + " " + pair);
        observe(a2g, double((jx.row(i) - jy.row(i)).norm() / dxy),
                double(cons.lipschitz_grad),
                "g_" + std::to_string(i + 1) + " " + pair);
      }
    }
    for (std::size_t l = 0; l < losses.size(); ++l) {
      const auto& f = losses[l];
      const std::string tag = "f_" + std::to_string(l + 1) + " ";
      if (dxy > 0) {
        observe(a1f, double(std::abs(f.value(x) - f.value(y)) / dxy),
                double(f.kappa_f), tag + pair);
        observe(a2f, double((f.gradient(x) - f.gradient(y)).norm() / dxy),
                double(f.lipschitz_grad), tag + pair);
      }
      observe(a1f, double(f.gradient(x).norm()), double(f.kappa_f),
              tag + "gradient norm at " + format_point(x));
    }
  }

  auto a3 = make_check("A3", "Slater point in C with g_i(x_hat) <= -eps0");
  if (cons.slater_point.size() != cons.n || !set.contains(cons.slater_point)) {
    a3.passed = false;
    a3.witness = "slater point missing or outside C";
  } else {
    const Vector<Scalar> gs = cons.value(cons.slater_point);
    observe(a3, double(gs.maxCoeff()), double(-cons.slater_margin),
            format_point(cons.slater_point));
    detail::finish(a3, tol);
    if (!(cons.slater_margin > 0) || cons.nu_g < cons.slater_margin) {
      a3.passed = false;
      a3.witness = "need 0 < eps0 <= nu_g";
    }
  }

  auto b1 = make_check("B1", "Theta_0 is positive semidefinite");
  auto b2 = make_check("B2", "q_i(x) <= g_i(x) on C");
  auto b3 = make_check("B3", "|Theta_i| <= kappa_q");
  auto b4 = make_check("B4", "x -> L_sigma(x, lambda) convex along segments");
  b4.required = false;
  auto route = make_check("route", "convex g and scalar Theta_0 (projection route)");

  std::vector<Vector<Scalar>> multipliers = req.multipliers;
  multipliers.insert(multipliers.begin(), Vector<Scalar>::Zero(cons.p));

  const std::size_t anchors = std::min<std::size_t>(npts, 16);
  for (std::size_t a = 0; a < anchors && !losses.empty(); ++a) {
    const auto& anchor = pts[(a * 5) % npts];
    const auto& loss = losses[a % losses.size()];
    const auto m =
        detail::build_models_unchecked(loss, cons, anchor, req.strategy);
    const std::string at = "anchor " + format_point(anchor);

    observe(b1, double(-m.objective.theta.min_eigenvalue()), 0.0, at);
    observe(b3, double(m.curvature_bound()), double(req.kappa_q), at);
    if (req.dual_route) {
      using Form = typename Curvature<Scalar>::Form;
      bool ok = cons.all_convex() && m.objective.theta.form() != Form::Dense;
      for (const auto& q : m.constraints) ok = ok && q.theta.form() == Form::Zero;
      observe(route, ok ? 0.0 : 1.0, 0.0, at);
    }

    for (std::size_t k = 0; k < npts; ++k) {
      const auto& x = pts[k];
      const Vector<Scalar> gx = cons.value(x);
      for (Index i = 0; i < cons.p; ++i) {
        observe(b2, double(m.constraints[i].value(x) - gx(i)), 0.0,
                "g_" + std::to_string(i + 1) + " " + at + " x " +
                    format_point(x));
      }
    }

    for (const auto& lambda : multipliers) {
      for (std::size_t k = 0; k < npts; ++k) {
        const auto& u = pts[k];
        const auto& v = pts[(k * 11 + 1) % npts];
        const Vector<Scalar> mid = Scalar(0.5) * (u + v);
        const Scalar lu = detail::augmented_lagrangian_value(m, lambda, req.sigma, u);
        const Scalar lv = detail::augmented_lagrangian_value(m, lambda, req.sigma, v);
        const Scalar lm = detail::augmented_lagrangian_value(m, lambda, req.sigma, mid);
        // Convexity: L(mid) <= (L(u) + L(v)) / 2.
        const Scalar scale = 1 + std::abs(lu) + std::abs(lv);
        observe(b4, double((2 * lm - lu - lv) / scale), 0.0,
                at + " lambda " + format_point(lambda) + " segment " +
                    format_point(u) + " " + format_point(v));
      }
    }
  }

  for (AuditCheck* c : {&a1f, &a1g, &a1nu, &a2f, &a2g, &b1, &b2, &b3, &b4}) {
    detail::finish(*c, tol);
  }
  // Lipschitz ratios are compared with a relative slack for rounding.
  for (AuditCheck* c : {&a1f, &a1g, &a2f, &a2g}) {
    c->passed = c->worst <= c->limit * (1 + 1e-9) + tol;
  }
  report.checks.insert(report.checks.end(),
                       {a1f, a1g, a1nu, a2f, a2g, a3, b1, b2, b3, b4});
  if (req.dual_route) {
    detail::finish(route, 0.0);
    if (!cons.all_convex()) {
      route.passed = false;
      route.witness = "a constraint is flagged non-convex";
    }
    report.checks.push_back(route);
  }
  return report;
}

/// Collects the constants of a problem. κ_f is the largest declared κ_f over
/// the supplied losses.
template <typename Scalar>
StructuralConstants<Scalar> make_constants(
    std::span<const RoundLoss<Scalar>> losses,
    const ConstraintFamily<Scalar>& cons, const SimpleSet<Scalar>& set,
    Scalar kappa_q) {
  StructuralConstants<Scalar> c;
  for (const auto& f : losses) {
    c.kappa_f = std::max(c.kappa_f, f.kappa_f);
    c.lipschitz_f = std::max(c.lipschitz_f, f.lipschitz_grad);
  }
  c.kappa_g = cons.kappa_g;
  c.nu_g = cons.nu_g;
  c.lipschitz_g = cons.lipschitz_grad;
  c.kappa_q = kappa_q;
  c.slater_margin = cons.slater_margin;
  c.diameter = set.diameter();
  c.p = cons.p;
  c.validate();
  return c;
}

}  // namespace opmm
