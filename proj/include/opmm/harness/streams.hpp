// Copyright (c) opmm contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>
#include <vector>

#include "opmm/geometry.hpp"
#include "opmm/harness/config.hpp"
#include "opmm/oracle.hpp"
#include "opmm/run.hpp"

namespace opmm::harness {

/// Deterministic loss stream driven by a 64-bit Mersenne Twister. Every call
/// to next() consumes the same number of draws, so the t-th loss depends only
/// on the seed and t.
class SeededStream final : public LossStream<double> {
 public:
  SeededStream(const StreamSpec& spec, const SimpleSet<double>& set);

  RoundLoss<double> next() override;

  /// Declared bound on |f_t(x) − f_t(x')|/‖x − x'‖ and ‖∇f_t‖ over C.
  double kappa_f() const { return kappa_f_; }
  /// Declared Lipschitz constant of ∇f_t.
  double lipschitz_f() const { return lipschitz_f_; }
  bool quadratic() const { return spec_.id != "nonconvex-smooth"; }
  bool convex() const { return quadratic(); }
  Index produced() const { return produced_; }

 private:
  /// Uniform in [−1, 1), independent of the standard library's distributions.
  double unit();

  StreamSpec spec_;
  Index n_;
  Vector<double> center_;
  std::mt19937_64 rng_;
  double kappa_f_ = 0;
  double lipschitz_f_ = 0;
  Index produced_ = 0;
};

/// The first `count` losses of the stream.
std::vector<RoundLoss<double>> draw_losses(const StreamSpec& spec,
                                           const SimpleSet<double>& set,
                                           Index count);

}  // namespace opmm::harness
