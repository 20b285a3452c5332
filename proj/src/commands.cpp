// Copyright (c) opmm contributors
// SPDX-License-Identifier: Apache-2.0

#include "opmm/harness/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "opmm/harness/streams.hpp"
#include "opmm/offline.hpp"

namespace opmm::harness {

namespace {

using nlohmann::json;

constexpr double kStepSlack = 1e-9;

json regrets_json(const Regrets<double>& r) {
  return {{"lagrangian", r.lagrangian},
          {"violation", std::vector<double>(r.violation.data(),
                                            r.violation.data() + r.violation.size())},
          {"max_violation", r.max_violation},
          {"complementarity", r.complementarity},
          {"average_loss", r.average_loss}};
}

json constants_json(const StructuralConstants<double>& c) {
  return {{"kappa_f", c.kappa_f},         {"kappa_g", c.kappa_g},
          {"nu_g", c.nu_g},               {"lipschitz_f", c.lipschitz_f},
          {"lipschitz_g", c.lipschitz_g}, {"kappa_q", c.kappa_q},
          {"slater_margin", c.slater_margin}, {"diameter", c.diameter},
          {"p", c.p},                     {"beta0", c.beta0()},
          {"kappa0", c.kappa0()},         {"kappa1", c.kappa1()},
          {"kappa2", c.kappa2()},         {"kappa3", c.kappa3()}};
}

json bounds_json(const TheoryBounds<double>& b) {
  return {{"step_bound", b.step_bound},
          {"min_psi", b.min_psi},
          {"min_psi_s", b.min_psi_s},
          {"quarter_s", b.quarter_s},
          {"psi_at_quarter", b.psi_at_quarter},
          {"rho0", b.rho0},
          {"violation_coefficient", b.violation_coefficient},
          {"complementarity_coefficient", b.complementarity_coefficient}};
}

std::optional<double> slope_if_positive(const std::vector<double>& x,
                                        const std::vector<double>& y) {
  if (std::any_of(y.begin(), y.end(), [](double v) { return !(v > 0); })) {
    return std::nullopt;
  }
  return loglog_slope<double>(x, y);
}

json optional_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

RunConfig apply_options(RunConfig config, const RunOptions& options) {
  if (options.route) {
    if (*options.route != "primal" && *options.route != "dual") {
      throw ConfigError("--route: expected primal or dual");
    }
    config.route = *options.route;
  }
  if (options.seed) config.stream.seed = *options.seed;
  return config;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_header(Index p) {
  std::string h = "t,f_t_xt";
  for (Index i = 1; i <= p; ++i) h += ",g_" + std::to_string(i);
  h += ",lambda_norm,comp_residual,lag_residual_avg_norm,viol_avg_max,psi_bound,"
       "step_bound_ok\n";
  return h;
}

AuditReport audit_instance(const RunConfig& config, const Instance& inst,
                           Index horizon) {
  const Index count = std::min<Index>(horizon + 1, 32);
  const auto losses = draw_losses(config.stream, inst.problem.set, count);
  const auto params = make_params(config, horizon);
  AuditRequest<double> req;
  req.strategy = inst.strategy;
  req.kappa_q = inst.constants.kappa_q;
  req.sigma = params.sigma;
  req.dual_route = config.route == "dual";
  req.seed = config.stream.seed;
  return assumption_audit<double>(losses, inst.problem.constraints,
                                  inst.problem.set, req);
}

RunResult run_experiment(const RunConfig& config, bool strict) {
  const Instance inst = make_instance(config);
  const Index T = config.horizon;
  auto params = make_params(config, T);
  params.strategy = inst.strategy;
  params.strict = strict;

  RunResult out;
  out.audit = audit_instance(config, inst, T);
  if (params.route == Route::Dual) {
    const AuditCheck* route = out.audit.find("route");
    if (route == nullptr || !route->passed) {
      throw ConfigError("dual route rejected by the assumption audit: " +
                        (route ? route->witness : std::string("no route check")));
    }
  }

  SeededStream stream(config.stream, inst.problem.set);
  out.trace = opmm_run(inst.problem, stream, params);

  const auto& c = inst.constants;
  out.bounds = theory_bounds(c, params.sigma, params.alpha, T);
  const double step_limit = out.bounds.step_bound + kStepSlack;
  const Index p = inst.problem.constraints.p;

  RegretLedger<double> ledger(inst.problem.set.dim(), p);
  std::ostringstream csv;
  csv << csv_header(p);
  std::vector<double> lambda_norms{0.0};
  double max_lambda = 0;
  for (const auto& rec : out.trace.records) {
    ledger.accumulate(rec);
    const double ln = rec.lambda_next.norm();
    const bool step_ok = std::abs(ln - rec.lambda.norm()) <= step_limit;
    out.step_bound_ok = out.step_bound_ok && step_ok;
    lambda_norms.push_back(ln);
    max_lambda = std::max(max_lambda, ln);
    const double tt = double(rec.t);
    const Vector<double> viol = ledger.sum_g() / tt;

    csv << rec.t << ',' << format_double(rec.f_value);
    for (Index i = 0; i < p; ++i) csv << ',' << format_double(rec.g(i));
    csv << ',' << format_double(ln) << ','
        << format_double(ledger.entries().back().complementarity) << ','
        << format_double((ledger.sum_lagrangian() / tt).norm()) << ','
        << format_double(viol.maxCoeff()) << ','
        << format_double(out.bounds.min_psi) << ',' << (step_ok ? 1 : 0) << '\n';
  }
  out.csv = csv.str();
  out.regrets = regrets(ledger);
  out.multiplier_bound_ok = max_lambda <= out.bounds.min_psi;

  DriftHypothesis<double> hyp;
  hyp.t0 = out.bounds.quarter_s;
  hyp.theta = c.theta(params.sigma, params.alpha, hyp.t0);
  hyp.delta_max = out.bounds.step_bound;
  hyp.zeta = params.sigma * c.slater_margin / 2;
  hyp.step_tol = kStepSlack;
  out.drift = drift_check<double>(lambda_norms, hyp);

  json& s = out.summary;
  s["rounds"] = T;
  s["route"] = config.route;
  s["preset"] = config.preset;
  s["theta_strategy"] = to_string(inst.strategy.kind);
  s["sigma"] = params.sigma;
  s["alpha"] = params.alpha;
  s["seed"] = config.stream.seed;
  s["regrets"] = regrets_json(out.regrets);
  s["constants"] = constants_json(c);
  s["theory"] = bounds_json(out.bounds);
  s["max_lambda_norm"] = max_lambda;
  s["multiplier_bound_ok"] = out.multiplier_bound_ok;
  s["step_bound_ok"] = out.step_bound_ok;
  s["drift"] = {{"t0", hyp.t0},
                {"theta", hyp.theta},
                {"delta_max", hyp.delta_max},
                {"zeta", hyp.zeta},
                {"bound", out.drift.bound},
                {"hypothesis_holds", out.drift.hypothesis_holds},
                {"step_violation", out.drift.step_violation},
                {"drift_violation", out.drift.drift_violation},
                {"bound_holds", out.drift.bound_holds}};
  s["failed_rounds"] = out.trace.failed_rounds;
  s["audit_passed"] = out.audit.passed();
  s["note"] = "H_T uses f_{T+1}, drawn as loss T+1 of the same stream";

  const SeededStream probe(config.stream, inst.problem.set);
  const auto& cons = inst.problem.constraints;
  if (probe.quadratic() && (cons.all_convex() || inst.problem.set.dim() <= 3)) {
    const auto losses = draw_losses(config.stream, inst.problem.set, T);
    const auto opt = offline_oracle<double>(losses, inst.problem.set, cons);
    const double dist = (inst.problem.x1 - opt.point).norm();
    const auto obj = objective_regret(ledger, opt.average, c.kappa_f, c.nu_g, dist);
    s["objective"] = {{"regret", obj.regret},
                      {"bound", obj.bound},
                      {"offline_average", opt.average},
                      {"offline_point", std::vector<double>(opt.point.data(),
                                                            opt.point.data() + opt.point.size())},
                      {"dist_x1_to_optimum", dist},
                      {"bound_applies", config.preset == "prop4"}};
  }
  return out;
}

SweepResult sweep_experiment(const RunConfig& config,
                             const std::vector<Index>& horizons, bool strict) {
  if (horizons.size() < 4) {
    throw ConfigError("sweep: need at least 4 horizons");
  }
  SweepResult out;
  std::ostringstream csv;
  csv << "T,sigma,alpha,lagrangian,max_violation,complementarity,average_loss,"
         "objective_regret,objective_bound,max_lambda_norm,min_psi\n";
  std::vector<double> ts, lag, viol, comp, obj;
  bool have_obj = true;
  json runs = json::array();
  for (Index T : horizons) {
    RunConfig cfg = config;
    cfg.horizon = T;
    const RunResult r = run_experiment(cfg, strict);
    out.regrets.push_back(r.regrets);
    ts.push_back(double(T));
    lag.push_back(r.regrets.lagrangian);
    viol.push_back(r.regrets.max_violation);
    comp.push_back(r.regrets.complementarity);
    double oreg = std::nan(""), obound = std::nan("");
    if (r.summary.contains("objective")) {
      oreg = r.summary["objective"]["regret"].get<double>();
      obound = r.summary["objective"]["bound"].get<double>();
      obj.push_back(oreg);
    } else {
      have_obj = false;
    }
    csv << T << ',' << format_double(r.summary["sigma"].get<double>()) << ','
        << format_double(r.summary["alpha"].get<double>()) << ','
        << format_double(r.regrets.lagrangian) << ','
        << format_double(r.regrets.max_violation) << ','
        << format_double(r.regrets.complementarity) << ','
        << format_double(r.regrets.average_loss) << ',' << format_double(oreg)
        << ',' << format_double(obound) << ','
        << format_double(r.summary["max_lambda_norm"].get<double>()) << ','
        << format_double(r.bounds.min_psi) << '\n';
    runs.push_back(r.summary);
  }
  out.csv = csv.str();
  json& s = out.summary;
  s["horizons"] = horizons;
  s["slopes"] = {{"lagrangian", optional_json(slope_if_positive(ts, lag))},
                 {"max_violation", optional_json(slope_if_positive(ts, viol))},
                 {"complementarity", optional_json(slope_if_positive(ts, comp))},
                 {"objective_regret",
                  have_obj ? optional_json(slope_if_positive(ts, obj)) : json(nullptr)}};
  bool lag_nonincreasing = true;
  for (std::size_t k = 1; k < lag.size(); ++k) {
    lag_nonincreasing = lag_nonincreasing && lag[k] <= lag[k - 1];
  }
  s["lagrangian_nonincreasing"] = lag_nonincreasing;
  s["runs"] = runs;
  return out;
}

CheckResult check_experiment(const RunConfig& config) {
  const Instance inst = make_instance(config);
  CheckResult out;
  out.report = audit_instance(config, inst, config.horizon);
  out.passed = out.report.passed();
  return out;
}

}  // namespace opmm::harness
