// Copyright (c) opmm contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "opmm/constants.hpp"
#include "opmm/geometry.hpp"
#include "opmm/harness/config.hpp"
#include "opmm/oracle.hpp"
#include "opmm/run.hpp"

namespace opmm::harness {

SimpleSet<double> make_set(const SetSpec& spec);

/// The center of C: box midpoint, ball center or simplex barycenter.
Vector<double> set_center(const SimpleSet<double>& set);

/// Builds the constraint family with declared constants valid on C. The Slater
/// point defaults to the center of C; its margin must be positive.
ConstraintFamily<double> make_constraints(const ConstraintSpec& spec,
                                          const SimpleSet<double>& set);

/// `auto` resolves to concave-minorant(η) when some g_i is non-convex,
/// exact-hessian for quadratic streams under the prop4 preset, and
/// scalar(η) otherwise.
ThetaStrategy resolve_theta(const RunConfig& config,
                            const ConstraintFamily<double>& cons);

/// Declared bound on ‖Θ_i‖ for i = 0..p implied by the strategy. The
/// objective's curvature counts too; `hessian_bound` bounds ‖∇²f_t‖ and is
/// used by the exact-Hessian strategy.
double declared_kappa_q(const ThetaStrategy& strategy,
                        const ConstraintFamily<double>& cons,
                        double hessian_bound);

/// σ and α for a horizon under the configured preset.
AlgoParams<double> make_params(const RunConfig& config, Index horizon);

struct Instance {
  Problem<double> problem;
  ThetaStrategy strategy;
  StructuralConstants<double> constants;
  double kappa_f = 0;
};

Instance make_instance(const RunConfig& config);

}  // namespace opmm::harness
