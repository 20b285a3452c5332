// Copyright (c) opmm contributors
// SPDX-License-Identifier: Apache-2.0

#include "opmm/harness/streams.hpp"

#include <cmath>

namespace opmm::harness {

SeededStream::SeededStream(const StreamSpec& spec, const SimpleSet<double>& set)
    : spec_{spec}, n_{set.dim()}, rng_{spec.seed} {
  if (spec.center.empty()) {
    center_ = Vector<double>::Zero(n_);
  } else if (static_cast<Index>(spec.center.size()) == n_) {
    center_ = Eigen::Map<const Vector<double>>(spec.center.data(), n_);
  } else {
    throw DimensionMismatch("stream.center", n_,
                            static_cast<Index>(spec.center.size()));
  }
  if (!(spec.radius >= 0)) throw ConfigError("stream.radius: must be >= 0");
  const double spread = spec.radius * std::sqrt(double(n_));

  if (spec.id == "linear-drift") {
    kappa_f_ = center_.norm() + spread;
    lipschitz_f_ = 0;
  } else if (spec.id == "quad-convex") {
    if (!(spec.curvature_min > 0) || spec.curvature_max < spec.curvature_min) {
      throw ConfigError("stream.curvature: need 0 < min <= max");
    }
    kappa_f_ = spec.curvature_max * (set.max_distance_from(center_) + spread);
    lipschitz_f_ = spec.curvature_max;
  } else if (spec.id == "nonconvex-smooth") {
    if (!(spec.amplitude >= 0)) throw ConfigError("stream.amplitude: must be >= 0");
    kappa_f_ = center_.norm() + spread + spec.amplitude * std::sqrt(double(n_));
    lipschitz_f_ = spec.amplitude;
  } else {
    throw ConfigError("stream.id: unsupported value '" + spec.id + "'");
  }
}

double SeededStream::unit() {
  return double(rng_() >> 11) * 0x1.0p-52 - 1.0;
}

RoundLoss<double> SeededStream::next() {
  ++produced_;
  Vector<double> u(n_);
  for (Index j = 0; j < n_; ++j) u(j) = unit();
  const Vector<double> shift = center_ + spec_.radius * u;
  const double s = 0.5 * (unit() + 1.0);  // in [0, 1)

  RoundLoss<double> f;
  f.kappa_f = kappa_f_;
  f.lipschitz_grad = lipschitz_f_;
  if (spec_.id == "linear-drift") {
    f.value = [c = shift](const Vector<double>& x) { return c.dot(x); };
    f.gradient = [c = shift](const Vector<double>&) -> Vector<double> { return c; };
    f.convex = true;
    f.hessian = Matrix<double>::Zero(n_, n_);
    f.hessian_is_scalar = true;
  } else if (spec_.id == "quad-convex") {
    const double a = spec_.curvature_min + s * (spec_.curvature_max - spec_.curvature_min);
    f.value = [a, b = shift](const Vector<double>& x) {
      return 0.5 * a * (x - b).squaredNorm();
    };
    f.gradient = [a, b = shift](const Vector<double>& x) -> Vector<double> {
      return a * (x - b);
    };
    f.convex = true;
    f.hessian = a * Matrix<double>::Identity(n_, n_);
    f.hessian_is_scalar = true;
  } else {
    const double a = spec_.amplitude * (2 * s - 1);
    f.value = [a, c = shift](const Vector<double>& x) {
      return c.dot(x) + a * x.array().sin().sum();
    };
    f.gradient = [a, c = shift](const Vector<double>& x) -> Vector<double> {
      return c + a * x.array().cos().matrix();
    };
    f.convex = false;
  }
  return f;
}

std::vector<RoundLoss<double>> draw_losses(const StreamSpec& spec,
                                           const SimpleSet<double>& set,
                                           Index count) {
  SeededStream stream(spec, set);
  std::vector<RoundLoss<double>> out;
  out.reserve(static_cast<std::size_t>(count));
  for (Index t = 0; t < count; ++t) out.push_back(stream.next());
  return out;
}

}  // namespace opmm::harness
