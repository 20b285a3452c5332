// Copyright (c) opmm contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "opmm/types.hpp"

namespace opmm::harness {

inline constexpr int kSchemaVersion = 1;

/// Thrown for malformed or schema-violating configuration files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct SetSpec {
  std::string kind = "box";  ///< box | ball | simplex
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> center;
  double radius = 1.0;
  Index dim = 0;

  bool operator==(const SetSpec&) const = default;
};

/// linear:         g_i(x) = ⟨a_i, x⟩ − b_i
/// quadratic-ball: g_i(x) = ‖x − c_i‖² − r_i²
/// nonconvex-sine: g_i(x) = ⟨a_i, x⟩ − b_i + amplitude_i Σ_j sin(x_j)
struct ConstraintSpec {
  std::string family = "linear";
  std::vector<std::vector<double>> a;
  std::vector<double> b;
  std::vector<std::vector<double>> centers;
  std::vector<double> radii;
  std::vector<double> amplitude;
  /// Optional; defaults to the center of C.
  std::vector<double> slater_point;

  bool operator==(const ConstraintSpec&) const = default;
};

/// linear-drift:     f_t(x) = ⟨c_t, x⟩, c_t = center + radius·u_t
/// quad-convex:      f_t(x) = ½ a_t ‖x − b_t‖², b_t = center + radius·u_t,
///                   a_t uniform in [curvature_min, curvature_max]
/// nonconvex-smooth: f_t(x) = ⟨c_t, x⟩ + a_t Σ_j sin(x_j), |a_t| ≤ amplitude
/// with u_t uniform in [−1, 1]ⁿ.
struct StreamSpec {
  std::string id = "linear-drift";
  std::uint64_t seed = 1;
  std::vector<double> center;
  double radius = 1.0;
  double curvature_min = 1.0;
  double curvature_max = 1.0;
  double amplitude = 1.0;

  bool operator==(const StreamSpec&) const = default;
};

struct ThetaSpec {
  /// auto | zero | scalar | concave-minorant | exact-hessian
  std::string kind = "auto";
  double eta = 0.0;

  bool operator==(const ThetaSpec&) const = default;
};

struct SolverSpec {
  Index max_iters = 10000;
  double tol = 0.0;
  double relative_tol = 1e-9;

  bool operator==(const SolverSpec&) const = default;
};

struct RunConfig {
  SetSpec set;
  ConstraintSpec constraints;
  StreamSpec stream;
  std::string preset = "theorem1";  ///< theorem1 | prop4 | custom
  double sigma = 0.0;               ///< custom only
  double alpha = 0.0;               ///< custom only
  Index horizon = 1;
  std::vector<Index> horizons;
  ThetaSpec theta;
  SolverSpec solver;
  std::vector<double> x1;
  std::string route = "primal";
  std::string output;

  bool operator==(const RunConfig&) const = default;

  Index dim() const;
};

RunConfig parse_config(const nlohmann::json& j);
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);
nlohmann::json to_json(const RunConfig& c);
std::string serialize_config(const RunConfig& c);

}  // namespace opmm::harness
