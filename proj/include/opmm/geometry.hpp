// Copyright (c) opmm contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "opmm/types.hpp"

namespace opmm {

/// Absolute tolerance used by every membership test.
inline constexpr double kFeasibilityTol = 1e-10;

/// A compact convex set with a closed-form Euclidean projection: a box, a
/// Euclidean ball, or the probability simplex {x ≥ 0, Σx = 1}.
template <typename Scalar>
class SimpleSet {
 public:
  enum class Kind { Box, Ball, Simplex };

  static SimpleSet box(Vector<Scalar> lower, Vector<Scalar> upper) {
    if (lower.size() != upper.size()) {
      throw DimensionMismatch("SimpleSet::box", lower.size(), upper.size());
    }
    if (lower.size() == 0) {
      throw InvalidArgument("SimpleSet::box: empty dimension");
    }
    if ((lower.array() > upper.array()).any()) {
      throw InvalidArgument("SimpleSet::box: lower > upper");
    }
    SimpleSet s{Kind::Box, lower.size()};
    s.lower_ = std::move(lower);
    s.upper_ = std::move(upper);
    return s;
  }

  static SimpleSet ball(Vector<Scalar> center, Scalar radius) {
    if (!(radius > 0)) {
      throw InvalidArgument("SimpleSet::ball: radius must be positive");
    }
    if (center.size() == 0) {
      throw InvalidArgument("SimpleSet::ball: empty dimension");
    }
    SimpleSet s{Kind::Ball, center.size()};
    s.center_ = std::move(center);
    s.radius_ = radius;
    return s;
  }

  static SimpleSet simplex(Index n) {
    if (n <= 0) {
      throw InvalidArgument("SimpleSet::simplex: dimension must be positive");
    }
    return SimpleSet{Kind::Simplex, n};
  }

  Kind kind() const { return kind_; }
  Index dim() const { return dim_; }

  const Vector<Scalar>& lower() const { return lower_; }
  const Vector<Scalar>& upper() const { return upper_; }
  const Vector<Scalar>& center() const { return center_; }
  Scalar radius() const { return radius_; }

  /// Diameter D₀ = sup ‖x − x'‖ over the set.
  Scalar diameter() const {
    switch (kind_) {
      case Kind::Box:
        return (upper_ - lower_).norm();
      case Kind::Ball:
        return 2 * radius_;
      case Kind::Simplex:
        // A single point has diameter zero.
        return dim_ == 1 ? Scalar(0) : std::sqrt(Scalar(2));
    }
    return Scalar(0);
  }

  bool contains(const Vector<Scalar>& x,
                Scalar tol = Scalar(kFeasibilityTol)) const {
    check_dim("SimpleSet::contains", x);
    switch (kind_) {
      case Kind::Box:
        return ((x - lower_).array() >= -tol).all() &&
               ((upper_ - x).array() >= -tol).all();
      case Kind::Ball:
        return (x - center_).norm() <= radius_ + tol;
      case Kind::Simplex:
        return (x.array() >= -tol).all() && std::abs(x.sum() - 1) <= tol;
    }
    return false;
  }

  /// Maximizer of the linear function z ↦ ⟨w, z⟩ over the set. For boxes and
  /// the simplex this is a vertex, so it dominates every vertex.
  Vector<Scalar> support_point(const Vector<Scalar>& w) const {
    check_dim("SimpleSet::support_point", w);
    switch (kind_) {
      case Kind::Box: {
        Vector<Scalar> z = lower_;
        for (Index i = 0; i < dim_; ++i) {
          if (w(i) > 0) z(i) = upper_(i);
        }
        return z;
      }
      case Kind::Ball: {
        const Scalar nw = w.norm();
        if (nw == 0) return center_;
        return center_ + (radius_ / nw) * w;
      }
      case Kind::Simplex: {
        Index best = 0;
        w.maxCoeff(&best);
        return Vector<Scalar>::Unit(dim_, best);
      }
    }
    return w;
  }

  /// Vertices of the simplex, or the 2ⁿ corners of a box when n ≤ 16.
  /// Empty for balls.
  std::vector<Vector<Scalar>> vertices() const {
    std::vector<Vector<Scalar>> out;
    if (kind_ == Kind::Simplex) {
      for (Index i = 0; i < dim_; ++i) {
        out.push_back(Vector<Scalar>::Unit(dim_, i));
      }
    } else if (kind_ == Kind::Box && dim_ <= 16) {
      const std::uint64_t count = std::uint64_t{1} << dim_;
      for (std::uint64_t mask = 0; mask < count; ++mask) {
        Vector<Scalar> z(dim_);
        for (Index i = 0; i < dim_; ++i) {
          z(i) = (mask >> i) & 1 ? upper_(i) : lower_(i);
        }
        out.push_back(std::move(z));
      }
    }
    return out;
  }

  /// sup over z in the set of ‖z − a‖.
  Scalar max_distance_from(const Vector<Scalar>& a) const {
    check_dim("SimpleSet::max_distance_from", a);
    switch (kind_) {
      case Kind::Box:
        return (lower_ - a).cwiseAbs().cwiseMax((upper_ - a).cwiseAbs()).norm();
      case Kind::Ball:
        return (center_ - a).norm() + radius_;
      case Kind::Simplex: {
        Scalar best = 0;
        for (Index i = 0; i < dim_; ++i) {
          best = std::max(best, (Vector<Scalar>::Unit(dim_, i) - a).norm());
        }
        return best;
      }
    }
    return Scalar(0);
  }

  /// Axis-aligned bounding box as a (lower, upper) pair.
  std::pair<Vector<Scalar>, Vector<Scalar>> bounding_box() const {
    switch (kind_) {
      case Kind::Box:
        return {lower_, upper_};
      case Kind::Ball:
        return {center_.array() - radius_, center_.array() + radius_};
      case Kind::Simplex:
        return {Vector<Scalar>::Zero(dim_), Vector<Scalar>::Ones(dim_)};
    }
    return {};
  }

  /// Draws a point of the set. Box: uniform. Ball: uniform. Simplex:
  /// flat Dirichlet.
  template <typename Rng>
  Vector<Scalar> sample(Rng& rng) const {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Vector<Scalar> z(dim_);
    switch (kind_) {
      case Kind::Box:
        for (Index i = 0; i < dim_; ++i) {
          z(i) = lower_(i) + Scalar(unif(rng)) * (upper_(i) - lower_(i));
        }
        return z;
      case Kind::Ball: {
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (Index i = 0; i < dim_; ++i) z(i) = Scalar(gauss(rng));
        const Scalar nz = z.norm();
        if (nz == 0) return center_;
        const Scalar r =
            radius_ * Scalar(std::pow(unif(rng), 1.0 / double(dim_)));
        return center_ + (r / nz) * z;
      }
      case Kind::Simplex: {
        for (Index i = 0; i < dim_; ++i) {
          z(i) = Scalar(-std::log(1.0 - unif(rng)));
        }
        return z / z.sum();
      }
    }
    return z;
  }

  void check_dim(const char* where, const Vector<Scalar>& x) const {
    if (x.size() != dim_) throw DimensionMismatch(where, dim_, x.size());
  }

 private:
  SimpleSet(Kind kind, Index dim) : kind_{kind}, dim_{dim} {}

  Kind kind_;
  Index dim_;
  Vector<Scalar> lower_;
  Vector<Scalar> upper_;
  Vector<Scalar> center_;
  Scalar radius_ = 0;
};

namespace detail {

// Sort-and-threshold projection onto {x ≥ 0, Σx = 1}.
template <typename Scalar>
Vector<Scalar> project_simplex(const Vector<Scalar>& v) {
  const Index n = v.size();
  std::vector<Scalar> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<Scalar>());
  Scalar cumsum = 0;
  Scalar tau = 0;
  for (Index j = 0; j < n; ++j) {
    cumsum += u[j];
    const Scalar candidate = (cumsum - 1) / Scalar(j + 1);
    if (u[j] - candidate > 0) tau = candidate;
  }
  return (v.array() - tau).cwiseMax(Scalar(0)).matrix();
}

}  // namespace detail

/// Euclidean projection Π_C(x).
template <typename Scalar>
Vector<Scalar> project(const SimpleSet<Scalar>& set, const Vector<Scalar>& x) {
  set.check_dim("project", x);
  using Kind = typename SimpleSet<Scalar>::Kind;
  switch (set.kind()) {
    case Kind::Box:
      return x.cwiseMax(set.lower()).cwiseMin(set.upper());
    case Kind::Ball: {
      const Vector<Scalar> d = x - set.center();
      const Scalar nd = d.norm();
      if (nd <= set.radius()) return x;
      return set.center() + (set.radius() / nd) * d;
    }
    case Kind::Simplex:
      return detail::project_simplex(x);
  }
  return x;
}

/// A positive-definite metric G that is either c·I or diag(d).
template <typename Scalar>
class WeightedMetric {
 public:
  enum class Form { ScalarIdentity, Diagonal };

  static WeightedMetric scalar_identity(Scalar c) {
    if (!(c > 0)) {
      throw InvalidArgument("WeightedMetric: weight must be positive");
    }
    WeightedMetric m{Form::ScalarIdentity};
    m.scale_ = c;
    return m;
  }

  static WeightedMetric diagonal(Vector<Scalar> d) {
    if (d.size() == 0 || !(d.array() > 0).all()) {
      throw InvalidArgument("WeightedMetric: weights must be positive");
    }
    WeightedMetric m{Form::Diagonal};
    m.diag_ = std::move(d);
    return m;
  }

  Form form() const { return form_; }
  Scalar scale() const { return scale_; }
  const Vector<Scalar>& diag() const { return diag_; }

  /// G·v.
  Vector<Scalar> apply(const Vector<Scalar>& v) const {
    if (form_ == Form::ScalarIdentity) return scale_ * v;
    if (v.size() != diag_.size()) {
      throw DimensionMismatch("WeightedMetric::apply", diag_.size(), v.size());
    }
    return diag_.cwiseProduct(v);
  }

 private:
  explicit WeightedMetric(Form form) : form_{form} {}

  Form form_;
  Scalar scale_ = 1;
  Vector<Scalar> diag_;
};

/// G-weighted projection Π^G_C(x) = argmin over u ∈ C of ‖x − u‖_G.
///
/// A scalar metric does not change the minimizer. A diagonal metric is only
/// supported on boxes, where the problem separates into per-coordinate clamps.
template <typename Scalar>
Vector<Scalar> weighted_project(const SimpleSet<Scalar>& set,
                                const WeightedMetric<Scalar>& metric,
                                const Vector<Scalar>& x) {
  if (metric.form() == WeightedMetric<Scalar>::Form::Diagonal) {
    if (set.kind() != SimpleSet<Scalar>::Kind::Box) {
      throw UnsupportedMetricSetPair(
          "weighted_project: diagonal metric requires a box");
    }
    if (metric.diag().size() != set.dim()) {
      throw DimensionMismatch("weighted_project", set.dim(),
                              metric.diag().size());
    }
  }
  return project(set, x);
}

template <typename Scalar>
struct ValueAndGradient {
  Scalar value;
  Vector<Scalar> gradient;
};

/// π(x) = ½ dist^G_C(x)² together with ∇π(x) = G(x − Π^G_C(x)).
template <typename Scalar>
ValueAndGradient<Scalar> weighted_dist_sq(const SimpleSet<Scalar>& set,
                                          const WeightedMetric<Scalar>& metric,
                                          const Vector<Scalar>& x) {
  const Vector<Scalar> r = x - weighted_project(set, metric, x);
  Vector<Scalar> g = metric.apply(r);
  return {Scalar(0.5) * r.dot(g), std::move(g)};
}

/// Largest value of ⟨w, z − x⟩ over a deterministic sample of z ∈ C. The
/// sample contains `samples` seeded random points, every simplex vertex, and
/// the exact linear maximizer of ⟨w, ·⟩ (the best box vertex, or the ball's
/// support point). A result ≤ tol certifies w ∈ N_C(x) on the sample.
template <typename Scalar>
Scalar normal_cone_violation(const SimpleSet<Scalar>& set,
                             const Vector<Scalar>& x, const Vector<Scalar>& w,
                             Index samples = 64,
                             std::uint64_t seed = 0x5eed0c0deULL) {
  set.check_dim("normal_cone_violation", x);
  set.check_dim("normal_cone_violation", w);
  if (!set.contains(x)) {
    throw InfeasiblePoint("normal_cone_violation: x is not in the set");
  }
  if (samples <= 0) {
    throw InvalidArgument("normal_cone_violation: samples must be positive");
  }
  Scalar worst = w.dot(set.support_point(w) - x);
  if (set.kind() == SimpleSet<Scalar>::Kind::Simplex) {
    for (const auto& v : set.vertices()) worst = std::max(worst, w.dot(v - x));
  }
  std::mt19937_64 rng{seed};
  for (Index k = 0; k < samples; ++k) {
    worst = std::max(worst, w.dot(set.sample(rng) - x));
  }
  return worst;
}

}  // namespace opmm
