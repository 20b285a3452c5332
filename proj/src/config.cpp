// Copyright (c) opmm contributors
// SPDX-License-Identifier: Apache-2.0

#include "opmm/harness/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace opmm::harness {

namespace {

using nlohmann::json;

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
}

void reject_unknown(const json& j, const std::string& where,
                    std::initializer_list<const char*> allowed) {
  for (const auto& [key, _] : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* a) { return key == a; });
    if (!known) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

double get_number(const json& j, const char* key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_number()) {
    throw ConfigError(where + "." + key + ": expected a number");
  }
  return v.get<double>();
}

Index get_index(const json& j, const char* key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_number_integer()) {
    throw ConfigError(where + "." + key + ": expected an integer");
  }
  return v.get<Index>();
}

std::string get_string(const json& j, const char* key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_string()) throw ConfigError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

std::vector<double> get_vector(const json& j, const char* key,
                               const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_array()) throw ConfigError(where + "." + key + ": expected an array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) {
      throw ConfigError(where + "." + key + ": expected numbers");
    }
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<std::vector<double>> get_matrix(const json& j, const char* key,
                                            const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_array()) throw ConfigError(where + "." + key + ": expected rows");
  std::vector<std::vector<double>> out;
  for (const auto& row : v) {
    json wrap = {{"row", row}};
    out.push_back(get_vector(wrap, "row", where + "." + key));
  }
  return out;
}

template <typename T, typename Get>
void maybe(const json& j, const char* key, T& dst, Get get,
           const std::string& where = "config") {
  if (j.contains(key)) dst = get(j, key, where);
}

void one_of(const std::string& value, const std::string& where,
            std::initializer_list<const char*> options) {
  for (const char* o : options) {
    if (value == o) return;
  }
  throw ConfigError(where + ": unsupported value '" + value + "'");
}

SetSpec parse_set(const json& j) {
  const std::string w = "set";
  require_object(j, w);
  reject_unknown(j, w, {"kind", "lower", "upper", "center", "radius", "dim"});
  SetSpec s;
  s.kind = get_string(j, "kind", w);
  one_of(s.kind, w + ".kind", {"box", "ball", "simplex"});
  if (s.kind == "box") {
    s.lower = get_vector(j, "lower", w);
    s.upper = get_vector(j, "upper", w);
    if (s.lower.size() != s.upper.size() || s.lower.empty()) {
      throw ConfigError("set: lower and upper must be nonempty and equal length");
    }
  } else if (s.kind == "ball") {
    s.center = get_vector(j, "center", w);
    s.radius = get_number(j, "radius", w);
    if (s.center.empty()) throw ConfigError("set.center: empty");
  } else {
    s.dim = get_index(j, "dim", w);
    if (s.dim < 1) throw ConfigError("set.dim: must be positive");
  }
  return s;
}

ConstraintSpec parse_constraints(const json& j) {
  const std::string w = "constraints";
  require_object(j, w);
  reject_unknown(j, w, {"family", "a", "b", "centers", "radii", "amplitude",
                        "slater_point"});
  ConstraintSpec c;
  c.family = get_string(j, "family", w);
  one_of(c.family, w + ".family", {"linear", "quadratic-ball", "nonconvex-sine"});
  if (c.family == "quadratic-ball") {
    c.centers = get_matrix(j, "centers", w);
    c.radii = get_vector(j, "radii", w);
  } else {
    c.a = get_matrix(j, "a", w);
    c.b = get_vector(j, "b", w);
    if (c.family == "nonconvex-sine") c.amplitude = get_vector(j, "amplitude", w);
  }
  maybe(j, "slater_point", c.slater_point, get_vector, w);
  return c;
}

StreamSpec parse_stream(const json& j) {
  const std::string w = "stream";
  require_object(j, w);
  reject_unknown(j, w, {"id", "seed", "center", "radius", "curvature", "amplitude"});
  StreamSpec s;
  s.id = get_string(j, "id", w);
  one_of(s.id, w + ".id", {"linear-drift", "quad-convex", "nonconvex-smooth"});
  if (j.contains("seed")) {
    const auto& v = j.at("seed");
    const bool nonnegative =
        v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    if (!nonnegative) {
      throw ConfigError("stream.seed: expected an unsigned 64-bit integer");
    }
    s.seed = v.get<std::uint64_t>();
  }
  maybe(j, "center", s.center, get_vector, w);
  maybe(j, "radius", s.radius, get_number, w);
  if (j.contains("curvature")) {
    const auto c = get_vector(j, "curvature", w);
    if (c.size() != 2) throw ConfigError("stream.curvature: expected [min, max]");
    s.curvature_min = c[0];
    s.curvature_max = c[1];
  }
  maybe(j, "amplitude", s.amplitude, get_number, w);
  return s;
}

}  // namespace

Index RunConfig::dim() const {
  if (set.kind == "box") return static_cast<Index>(set.lower.size());
  if (set.kind == "ball") return static_cast<Index>(set.center.size());
  return set.dim;
}

RunConfig parse_config(const json& j) {
  const std::string w = "config";
  require_object(j, w);
  reject_unknown(j, w, {"schema_version", "set", "constraints", "stream", "params",
                        "horizon", "horizons", "theta_strategy", "solver", "x1",
                        "route", "output"});
  if (!j.contains("schema_version") ||
      !j.at("schema_version").is_number_integer() ||
      j.at("schema_version").get<int>() != kSchemaVersion) {
    throw ConfigError("config: schema_version must be " +
                      std::to_string(kSchemaVersion));
  }
  RunConfig c;
  try {
    c.set = parse_set(j.at("set"));
    c.constraints = parse_constraints(j.at("constraints"));
    c.stream = parse_stream(j.at("stream"));
    c.horizon = get_index(j, "horizon", w);

    const auto& p = j.at("params");
    require_object(p, "params");
    reject_unknown(p, "params", {"preset", "sigma", "alpha"});
    c.preset = get_string(p, "preset", "params");
    one_of(c.preset, "params.preset", {"theorem1", "prop4", "custom"});
    if (c.preset == "custom") {
      c.sigma = get_number(p, "sigma", "params");
      c.alpha = get_number(p, "alpha", "params");
    } else if (p.contains("sigma") || p.contains("alpha")) {
      throw ConfigError("params: sigma and alpha are only allowed with preset 'custom'");
    }

    if (j.contains("horizons")) {
      for (const auto& v : j.at("horizons")) {
        if (!v.is_number_integer()) throw ConfigError("horizons: expected integers");
        c.horizons.push_back(v.get<Index>());
      }
    }
    if (j.contains("theta_strategy")) {
      const auto& t = j.at("theta_strategy");
      require_object(t, "theta_strategy");
      reject_unknown(t, "theta_strategy", {"kind", "eta"});
      c.theta.kind = get_string(t, "kind", "theta_strategy");
      one_of(c.theta.kind, "theta_strategy.kind",
             {"auto", "zero", "scalar", "concave-minorant", "exact-hessian"});
      maybe(t, "eta", c.theta.eta, get_number, "theta_strategy");
    }
    if (j.contains("solver")) {
      const auto& s = j.at("solver");
      require_object(s, "solver");
      reject_unknown(s, "solver", {"max_iters", "tol", "relative_tol"});
      maybe(s, "max_iters", c.solver.max_iters, get_index, "solver");
      maybe(s, "tol", c.solver.tol, get_number, "solver");
      maybe(s, "relative_tol", c.solver.relative_tol, get_number, "solver");
    }
    maybe(j, "x1", c.x1, get_vector);
    if (j.contains("route")) {
      c.route = get_string(j, "route", w);
      one_of(c.route, "route", {"primal", "dual"});
    }
    maybe(j, "output", c.output, get_string);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (c.horizon < 1) throw ConfigError("horizon: must be at least 1");
  for (Index t : c.horizons) {
    if (t < 1) throw ConfigError("horizons: entries must be at least 1");
  }
  if (c.preset == "custom" && (!(c.sigma > 0) || !(c.alpha > 0))) {
    throw ConfigError("params: sigma and alpha must be positive");
  }
  if (c.solver.max_iters < 1) throw ConfigError("solver.max_iters: must be positive");
  return c;
}

RunConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return parse_config(j);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

json to_json(const RunConfig& c) {
  json j;
  j["schema_version"] = kSchemaVersion;

  json set = {{"kind", c.set.kind}};
  if (c.set.kind == "box") {
    set["lower"] = c.set.lower;
    set["upper"] = c.set.upper;
  } else if (c.set.kind == "ball") {
    set["center"] = c.set.center;
    set["radius"] = c.set.radius;
  } else {
    set["dim"] = c.set.dim;
  }
  j["set"] = set;

  json cons = {{"family", c.constraints.family}};
  if (c.constraints.family == "quadratic-ball") {
    cons["centers"] = c.constraints.centers;
    cons["radii"] = c.constraints.radii;
  } else {
    cons["a"] = c.constraints.a;
    cons["b"] = c.constraints.b;
    if (c.constraints.family == "nonconvex-sine") {
      cons["amplitude"] = c.constraints.amplitude;
    }
  }
  if (!c.constraints.slater_point.empty()) {
    cons["slater_point"] = c.constraints.slater_point;
  }
  j["constraints"] = cons;

  json stream = {{"id", c.stream.id},
                 {"seed", c.stream.seed},
                 {"radius", c.stream.radius},
                 {"curvature", {c.stream.curvature_min, c.stream.curvature_max}},
                 {"amplitude", c.stream.amplitude}};
  if (!c.stream.center.empty()) stream["center"] = c.stream.center;
  j["stream"] = stream;

  json params = {{"preset", c.preset}};
  if (c.preset == "custom") {
    params["sigma"] = c.sigma;
    params["alpha"] = c.alpha;
  }
  j["params"] = params;
  j["horizon"] = c.horizon;
  if (!c.horizons.empty()) j["horizons"] = c.horizons;
  j["theta_strategy"] = {{"kind", c.theta.kind}, {"eta", c.theta.eta}};
  j["solver"] = {{"max_iters", c.solver.max_iters},
                 {"tol", c.solver.tol},
                 {"relative_tol", c.solver.relative_tol}};
  if (!c.x1.empty()) j["x1"] = c.x1;
  j["route"] = c.route;
  if (!c.output.empty()) j["output"] = c.output;
  return j;
}

std::string serialize_config(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

}  // namespace opmm::harness
