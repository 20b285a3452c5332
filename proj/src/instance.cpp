// Copyright (c) opmm contributors
// SPDX-License-Identifier: Apache-2.0

#include "opmm/harness/instance.hpp"

#include <algorithm>
#include <cmath>

#include "opmm/harness/streams.hpp"

namespace opmm::harness {

namespace {

Vector<double> to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector<double>>(v.data(), static_cast<Index>(v.size()));
}

Matrix<double> to_matrix(const std::vector<std::vector<double>>& rows, Index n,
                         const char* where) {
  Matrix<double> m(static_cast<Index>(rows.size()), n);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<Index>(rows[i].size()) != n) {
      throw DimensionMismatch(where, n, static_cast<Index>(rows[i].size()));
    }
    m.row(static_cast<Index>(i)) = to_vector(rows[i]).transpose();
  }
  return m;
}

// max over C of |⟨a, x⟩ − b|.
double max_abs_affine(const SimpleSet<double>& set, const Vector<double>& a,
                      double b) {
  const double hi = a.dot(set.support_point(a)) - b;
  const double lo = a.dot(set.support_point(Vector<double>(-a))) - b;
  return std::max(std::abs(hi), std::abs(lo));
}

}  // namespace

SimpleSet<double> make_set(const SetSpec& spec) {
  if (spec.kind == "box") return SimpleSet<double>::box(to_vector(spec.lower), to_vector(spec.upper));
  if (spec.kind == "ball") return SimpleSet<double>::ball(to_vector(spec.center), spec.radius);
  if (spec.kind == "simplex") return SimpleSet<double>::simplex(spec.dim);
  throw ConfigError("set.kind: unsupported value '" + spec.kind + "'");
}

Vector<double> set_center(const SimpleSet<double>& set) {
  using Kind = SimpleSet<double>::Kind;
  switch (set.kind()) {
    case Kind::Box:
      return 0.5 * (set.lower() + set.upper());
    case Kind::Ball:
      return set.center();
    case Kind::Simplex:
      return Vector<double>::Constant(set.dim(), 1.0 / double(set.dim()));
  }
  return Vector<double>::Zero(set.dim());
}

ConstraintFamily<double> make_constraints(const ConstraintSpec& spec,
                                          const SimpleSet<double>& set) {
  const Index n = set.dim();
  const double sqrt_n = std::sqrt(double(n));
  ConstraintFamily<double> cons;
  cons.n = n;
  double nu_sq = 0;

  if (spec.family == "linear" || spec.family == "nonconvex-sine") {
    const Matrix<double> a = to_matrix(spec.a, n, "constraints.a");
    const Vector<double> b = to_vector(spec.b);
    if (b.size() != a.rows()) throw DimensionMismatch("constraints.b", a.rows(), b.size());
    if (a.rows() == 0) throw ConfigError("constraints: need at least one constraint");
    Vector<double> amp = Vector<double>::Zero(a.rows());
    if (spec.family == "nonconvex-sine") {
      amp = to_vector(spec.amplitude);
      if (amp.size() != a.rows()) {
        throw DimensionMismatch("constraints.amplitude", a.rows(), amp.size());
      }
    }
    cons.p = a.rows();
    cons.value = [a, b, amp](const Vector<double>& x) -> Vector<double> {
      return a * x - b + amp * x.array().sin().sum();
    };
    cons.jacobian = [a, amp](const Vector<double>& x) -> Matrix<double> {
      return a + amp * x.array().cos().matrix().transpose();
    };
    for (Index i = 0; i < cons.p; ++i) {
      const double ai = std::abs(amp(i));
      cons.convex.push_back(ai == 0);
      cons.kappa_g = std::max(cons.kappa_g, a.row(i).norm() + ai * sqrt_n);
      cons.lipschitz_grad = std::max(cons.lipschitz_grad, ai);
      const double m = max_abs_affine(set, a.row(i).transpose(), b(i)) + ai * double(n);
      nu_sq += m * m;
    }
  } else if (spec.family == "quadratic-ball") {
    const Matrix<double> c = to_matrix(spec.centers, n, "constraints.centers");
    const Vector<double> r = to_vector(spec.radii);
    if (r.size() != c.rows()) throw DimensionMismatch("constraints.radii", c.rows(), r.size());
    if (c.rows() == 0) throw ConfigError("constraints: need at least one constraint");
    cons.p = c.rows();
    cons.value = [c, r](const Vector<double>& x) -> Vector<double> {
      return (c.rowwise() - x.transpose()).rowwise().squaredNorm() - r.cwiseAbs2();
    };
    cons.jacobian = [c](const Vector<double>& x) -> Matrix<double> {
      return -2.0 * (c.rowwise() - x.transpose());
    };
    cons.lipschitz_grad = 2;
    for (Index i = 0; i < cons.p; ++i) {
      cons.convex.push_back(true);
      const double far = set.max_distance_from(c.row(i).transpose());
      cons.kappa_g = std::max(cons.kappa_g, 2 * far);
      const double m = std::max(far * far - r(i) * r(i), r(i) * r(i));
      nu_sq += m * m;
    }
  } else {
    throw ConfigError("constraints.family: unsupported value '" + spec.family + "'");
  }
  cons.nu_g = std::sqrt(nu_sq);
  if (!(cons.kappa_g > 0)) cons.kappa_g = 1e-12;

  cons.slater_point = spec.slater_point.empty() ? set_center(set)
                                                : to_vector(spec.slater_point);
  if (cons.slater_point.size() != n) {
    throw DimensionMismatch("constraints.slater_point", n, cons.slater_point.size());
  }
  if (!set.contains(cons.slater_point)) {
    throw ConfigError("constraints: the Slater point is not in C");
  }
  cons.slater_margin = -cons.value(cons.slater_point).maxCoeff();
  if (!(cons.slater_margin > 0)) {
    throw ConfigError("constraints: no Slater margin at the Slater point");
  }
  return cons;
}

ThetaStrategy resolve_theta(const RunConfig& config,
                            const ConstraintFamily<double>& cons) {
  const auto& k = config.theta.kind;
  const double eta = config.theta.eta;
  if (k == "zero") return ThetaStrategy::zero();
  if (k == "scalar") return ThetaStrategy::scalar(eta);
  if (k == "concave-minorant") return ThetaStrategy::concave_minorant(eta);
  if (k == "exact-hessian") return ThetaStrategy::exact_hessian();
  if (!cons.all_convex()) return ThetaStrategy::concave_minorant(eta);
  if (config.preset == "prop4" && config.stream.id == "quad-convex") {
    return ThetaStrategy::exact_hessian();
  }
  return ThetaStrategy::scalar(eta);
}

double declared_kappa_q(const ThetaStrategy& strategy,
                        const ConstraintFamily<double>& cons,
                        double hessian_bound) {
  using Kind = ThetaStrategy::Kind;
  double objective = 0.0;
  if (strategy.kind == Kind::Scalar || strategy.kind == Kind::ConcaveMinorant) {
    objective = strategy.eta0;
  } else if (strategy.kind == Kind::ExactHessian) {
    objective = hessian_bound;
  }
  double constraint = 0.0;
  if (strategy.kind == Kind::ConcaveMinorant && !cons.all_convex()) {
    constraint = cons.lipschitz_grad;
  }
  return std::max(objective, constraint);
}

AlgoParams<double> make_params(const RunConfig& config, Index horizon) {
  AlgoParams<double> p;
  if (config.preset == "theorem1") {
    p = AlgoParams<double>::theorem1(horizon);
  } else if (config.preset == "prop4") {
    p = AlgoParams<double>::quadratic_convex(horizon);
  } else {
    p.horizon = horizon;
    p.sigma = config.sigma;
    p.alpha = config.alpha;
  }
  p.inner.max_iters = config.solver.max_iters;
  p.inner.tol = config.solver.tol;
  p.inner.relative_tol = config.solver.relative_tol;
  p.route = config.route == "dual" ? Route::Dual : Route::Primal;
  return p;
}

Instance make_instance(const RunConfig& config) {
  Instance inst{{make_set(config.set), {}, {}}, {}, {}, 0.0};
  inst.problem.constraints = make_constraints(config.constraints, inst.problem.set);
  inst.problem.x1 = config.x1.empty() ? set_center(inst.problem.set) : to_vector(config.x1);
  if (inst.problem.x1.size() != inst.problem.set.dim()) {
    throw DimensionMismatch("x1", inst.problem.set.dim(), inst.problem.x1.size());
  }
  if (!inst.problem.set.contains(inst.problem.x1)) {
    throw ConfigError("x1: not in C");
  }
  inst.strategy = resolve_theta(config, inst.problem.constraints);

  const SeededStream stream(config.stream, inst.problem.set);
  inst.kappa_f = stream.kappa_f();
  const auto& cons = inst.problem.constraints;
  auto& c = inst.constants;
  c.kappa_f = stream.kappa_f();
  c.lipschitz_f = stream.lipschitz_f();
  c.kappa_g = cons.kappa_g;
  c.nu_g = cons.nu_g;
  c.lipschitz_g = cons.lipschitz_grad;
  c.kappa_q = declared_kappa_q(inst.strategy, cons, stream.lipschitz_f());
  c.slater_margin = cons.slater_margin;
  c.diameter = inst.problem.set.diameter();
  c.p = cons.p;
  if (!(c.kappa_f > 0)) c.kappa_f = 1e-12;
  c.validate();
  return inst;
}

}  // namespace opmm::harness
