// Copyright (c) opmm contributors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch.hpp>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "opmm/harness/commands.hpp"
#include "opmm/harness/config.hpp"
#include "opmm/harness/instance.hpp"
#include "opmm/harness/streams.hpp"

using namespace opmm;
using namespace opmm::harness;

namespace {

const char* kConvex = R"({
  "schema_version": 1,
  "set": {"kind": "box", "lower": [-1, -1], "upper": [1, 1]},
  "constraints": {"family": "linear", "a": [[1, 1], [1, -1]], "b": [0.5, 0.5]},
  "stream": {"id": "linear-drift", "seed": 7, "center": [-1, -1], "radius": 0.5},
  "params": {"preset": "theorem1"},
  "horizon": 60,
  "theta_strategy": {"kind": "scalar", "eta": 0},
  "solver": {"tol": 1e-11},
  "x1": [0.25, -0.5]
})";

const char* kSine = R"({
  "schema_version": 1,
  "set": {"kind": "box", "lower": [-1.5, -1.5], "upper": [1.5, 1.5]},
  "constraints": {"family": "nonconvex-sine", "a": [[1, 0.5]], "b": [1.0],
                  "amplitude": [0.3], "slater_point": [-1, -1]},
  "stream": {"id": "linear-drift", "seed": 5, "center": [-1, 0], "radius": 0.5},
  "params": {"preset": "theorem1"},
  "horizon": 20,
  "theta_strategy": {"kind": "zero"}
})";

using Rows = std::vector<std::vector<std::string>>;

Rows split_csv(const std::string& csv) {
  Rows rows;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

nlohmann::json with(const char* text, const std::string& pointer, nlohmann::json value) {
  auto j = nlohmann::json::parse(text);
  j[nlohmann::json::json_pointer(pointer)] = std::move(value);
  return j;
}

}  // namespace

TEST_CASE("config parsing", "[harness][config]") {
  const auto c = parse_config_text(kConvex);
  CHECK(c.set.kind == "box");
  CHECK(c.dim() == 2);
  CHECK(c.constraints.a.size() == 2);
  CHECK(c.stream.seed == 7);
  CHECK(c.preset == "theorem1");
  CHECK(c.horizon == 60);
  CHECK(c.solver.tol == 1e-11);
  CHECK(c.route == "primal");
  CHECK(c.x1 == std::vector<double>{0.25, -0.5});

  const auto big = parse_config(with(kConvex, "/stream/seed", 18446744073709551615ULL));
  CHECK(big.stream.seed == 18446744073709551615ULL);
}

TEST_CASE("config round trip is the identity", "[harness][config]") {
  for (const char* text : {kConvex, kSine}) {
    const auto c = parse_config_text(text);
    const auto text2 = serialize_config(c);
    const auto c2 = parse_config_text(text2);
    CHECK(c2 == c);
    CHECK(serialize_config(c2) == text2);
  }
  auto c = parse_config_text(kConvex);
  c.preset = "custom";
  c.sigma = 0.1;
  c.alpha = 1.0 / 3.0;
  c.horizons = {4, 8, 16, 32};
  c.route = "dual";
  c.output = "out.csv";
  CHECK(parse_config_text(serialize_config(c)) == c);
}

TEST_CASE("config schema violations", "[harness][config]") {
  CHECK_THROWS_AS(parse_config(with(kConvex, "/extra", 1)), ConfigError);
  CHECK_THROWS_AS(parse_config(with(kConvex, "/set/extra", 1)), ConfigError);
  CHECK_THROWS_AS(parse_config(with(kConvex, "/stream/colour", "red")), ConfigError);
  CHECK_THROWS_AS(parse_config(with(kConvex, "/params/sigma", 0.1)), ConfigError);
  CHECK_THROWS_AS(parse_config(with(kConvex, "/solver/extra", 0.1)), ConfigError);
  CHECK_THROWS_AS(parse_config(with(kConvex, "/schema_version", 2)), ConfigError);
  CHECK_THROWS_AS(parse_config(with(kConvex, "/stream/seed", -1)), ConfigError);
  CHECK_THROWS_AS(parse_config(with(kConvex, "/stream/seed", 1.5)), ConfigError);
  CHECK_THROWS_AS(parse_config(with(kConvex, "/set/kind", "torus")), ConfigError);
  CHECK_THROWS_AS(parse_config(with(kConvex, "/horizon", 0)), ConfigError);
  CHECK_THROWS_AS(parse_config(with(kConvex, "/route", "sideways")), ConfigError);
  CHECK_THROWS_AS(parse_config_text("{ not json"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
  auto j = nlohmann::json::parse(kConvex);
  j.erase("stream");
  CHECK_THROWS_AS(parse_config(j), ConfigError);
}

TEST_CASE("command-line options override the config", "[harness]") {
  const auto c = parse_config_text(kConvex);
  RunOptions o;
  o.seed = 99;
  o.route = "dual";
  const auto d = apply_options(c, o);
  CHECK(d.stream.seed == 99);
  CHECK(d.route == "dual");
  o.route = "sideways";
  CHECK_THROWS_AS(apply_options(c, o), ConfigError);
}

TEST_CASE("streams are reproducible", "[harness]") {
  const auto c = parse_config_text(kConvex);
  const auto set = make_set(c.set);
  const auto a = draw_losses(c.stream, set, 10);
  const auto b = draw_losses(c.stream, set, 10);
  auto other = c.stream;
  other.seed = 8;
  const auto d = draw_losses(other, set, 10);
  const Vector<double> x = Vector<double>::Constant(2, 0.3);
  for (int k = 0; k < 10; ++k) {
    CHECK(a[k].value(x) == b[k].value(x));
    CHECK(a[k].gradient(x) == b[k].gradient(x));
    CHECK(a[k].gradient(x).norm() <= a[k].kappa_f);
  }
  CHECK(a[0].gradient(x) != d[0].gradient(x));
}

TEST_CASE("run output is deterministic and consistent", "[harness]") {
  const auto c = parse_config_text(kConvex);
  const auto r1 = run_experiment(c);
  const auto r2 = run_experiment(c);
  CHECK(r1.csv == r2.csv);
  CHECK(r1.summary.dump() == r2.summary.dump());

  const auto rows = split_csv(r1.csv);
  REQUIRE(rows.size() == std::size_t(c.horizon + 1));
  CHECK(rows[0] == std::vector<std::string>{"t", "f_t_xt", "g_1", "g_2", "lambda_norm",
                                            "comp_residual", "lag_residual_avg_norm",
                                            "viol_avg_max", "psi_bound", "step_bound_ok"});
  double f = 0, comp = 0;
  std::vector<double> g(2, 0.0);
  for (std::size_t k = 1; k < rows.size(); ++k) {
    REQUIRE(rows[k].size() == 10);
    CHECK(std::stol(rows[k][0]) == long(k));
    f += std::stod(rows[k][1]);
    g[0] += std::stod(rows[k][2]);
    g[1] += std::stod(rows[k][3]);
    comp += std::stod(rows[k][5]);
  }
  const double T = double(c.horizon);
  const auto& reg = r1.summary["regrets"];
  CHECK(std::abs(reg["average_loss"].get<double>() - f / T) <= 1e-12);
  CHECK(std::abs(reg["complementarity"].get<double>() - comp / T) <= 1e-12);
  CHECK(std::abs(reg["violation"][0].get<double>() - g[0] / T) <= 1e-12);
  CHECK(std::abs(reg["violation"][1].get<double>() - g[1] / T) <= 1e-12);
  CHECK(std::abs(reg["max_violation"].get<double>() - std::max(g[0], g[1]) / T) <= 1e-12);
  CHECK(std::abs(reg["lagrangian"].get<double>() - std::stod(rows.back()[6])) <= 1e-12);
  CHECK(std::abs(reg["max_violation"].get<double>() - std::stod(rows.back()[7])) <= 1e-12);

  CHECK(r1.summary["audit_passed"].get<bool>());
  CHECK(r1.summary["multiplier_bound_ok"].get<bool>());
  CHECK(r1.summary["step_bound_ok"].get<bool>());
  CHECK(r1.summary["drift"]["hypothesis_holds"].get<bool>());
  CHECK(r1.summary["drift"]["bound_holds"].get<bool>());
  CHECK(r1.summary.contains("note"));
}

TEST_CASE("a one-round run", "[harness]") {
  auto j = with(kConvex, "/horizon", 1);
  j["x1"] = {-0.5, 0.0};
  j["stream"]["center"] = {0.0, 0.0};
  j["stream"]["radius"] = 0.0;
  const auto r = run_experiment(parse_config(j));
  const auto rows = split_csv(r.csv);
  REQUIRE(rows.size() == 2);
  // A zero loss keeps x at the strictly feasible x¹, so λ² = 0 and
  // complementarity holds exactly.
  CHECK(std::stod(rows[1][4]) == 0.0);
  CHECK(std::stod(rows[1][5]) == 0.0);
  CHECK(r.regrets.complementarity == 0.0);
  CHECK(r.regrets.lagrangian == 0.0);
  CHECK(r.regrets.average_loss == 0.0);
}

TEST_CASE("dual and primal routes agree on the CSV", "[harness][dual]") {
  auto c = parse_config_text(kConvex);
  const auto primal = run_experiment(c);
  c.route = "dual";
  const auto dual = run_experiment(c);
  const auto a = split_csv(primal.csv);
  const auto b = split_csv(dual.csv);
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 1; k < a.size(); ++k) {
    for (std::size_t col = 1; col + 1 < a[k].size(); ++col) {
      const double x = std::stod(a[k][col]);
      const double y = std::stod(b[k][col]);
      CHECK(std::abs(x - y) <= 1e-5);
    }
  }
}

TEST_CASE("check command examples", "[harness]") {
  auto convex = parse_config_text(kConvex);
  convex.route = "dual";
  CHECK(check_experiment(convex).passed);

  const auto sine = parse_config_text(kSine);
  const auto rep = check_experiment(sine);
  CHECK_FALSE(rep.passed);
  REQUIRE(rep.report.find("B2") != nullptr);
  CHECK_FALSE(rep.report.find("B2")->passed);

  auto dual_sine = sine;
  dual_sine.theta.kind = "concave-minorant";
  dual_sine.route = "dual";
  CHECK_FALSE(check_experiment(dual_sine).passed);
  CHECK_THROWS_AS(run_experiment(dual_sine), ConfigError);

  dual_sine.route = "primal";
  const auto ok = check_experiment(dual_sine);
  INFO(ok.report.to_text());
  CHECK(ok.passed);
}

TEST_CASE("sweep needs four horizons", "[harness]") {
  const auto c = parse_config_text(kConvex);
  CHECK_THROWS_AS(sweep_experiment(c, {4, 8, 16}), ConfigError);
  const auto s = sweep_experiment(c, {4, 8, 16, 32});
  CHECK(split_csv(s.csv).size() == 5);
  CHECK(s.regrets.size() == 4);
  CHECK(s.summary["horizons"].size() == 4);
}

TEST_CASE("declared curvature bound covers the objective model", "[harness]") {
  auto c = parse_config_text(kConvex);
  c.theta.eta = 1.5;
  const auto inst = make_instance(c);
  CHECK(inst.constants.kappa_q == 1.5);
  CHECK(check_experiment(c).passed);

  auto j = nlohmann::json::parse(kConvex);
  j["stream"] = {{"id", "quad-convex"}, {"seed", 3}, {"center", {0.5, 0.5}},
                 {"radius", 0.2}, {"curvature", {0.5, 2.0}}};
  j["params"]["preset"] = "prop4";
  j["theta_strategy"]["kind"] = "exact-hessian";
  const auto q = parse_config(j);
  CHECK(make_instance(q).constants.kappa_q == 2.0);
  CHECK(check_experiment(q).passed);

  const auto sine = parse_config_text(kSine);
  auto minorant = sine;
  minorant.theta.kind = "concave-minorant";
  minorant.theta.eta = 0.25;
  CHECK(make_instance(minorant).constants.kappa_q == Approx(make_instance(minorant)
                                                                .problem.constraints
                                                                .lipschitz_grad));
}
