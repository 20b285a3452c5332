// Copyright (c) opmm contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "opmm/audit.hpp"
#include "opmm/harness/config.hpp"
#include "opmm/harness/instance.hpp"
#include "opmm/metrics.hpp"
#include "opmm/run.hpp"

namespace opmm::harness {

/// Command-line overrides applied on top of a config.
struct RunOptions {
  std::optional<std::string> route;
  std::optional<std::uint64_t> seed;
  bool strict = false;
};

RunConfig apply_options(RunConfig config, const RunOptions& options);

/// 17 significant digits, enough to round-trip a double.
std::string format_double(double v);

std::string csv_header(Index p);

struct RunResult {
  std::string csv;
  nlohmann::json summary;
  RunTrace<double> trace;
  Regrets<double> regrets;
  TheoryBounds<double> bounds;
  AuditReport audit;
  /// ‖λ^t‖ ≤ min_s ψ(σ, α, s) for every t.
  bool multiplier_bound_ok = true;
  /// |‖λ^{t+1}‖ − ‖λ^t‖| ≤ σβ₀ + 1e−9 for every round.
  bool step_bound_ok = true;
  DriftReport<double> drift;
};

/// Audits the instance for the configured route.
AuditReport audit_instance(const RunConfig& config, const Instance& inst,
                           Index horizon);

/// One run over config.horizon rounds. Throws ConfigError when the dual route
/// is requested but the audit rejects it, and MaxItersExceeded in strict mode.
RunResult run_experiment(const RunConfig& config, bool strict = false);

struct SweepResult {
  std::string csv;
  nlohmann::json summary;
  std::vector<Regrets<double>> regrets;
};

/// One run per horizon with the preset's σ and α, plus log-log slopes.
SweepResult sweep_experiment(const RunConfig& config,
                             const std::vector<Index>& horizons,
                             bool strict = false);

struct CheckResult {
  AuditReport report;
  bool passed = false;
};

CheckResult check_experiment(const RunConfig& config);

}  // namespace opmm::harness
