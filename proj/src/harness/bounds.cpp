#include "unisam/harness/bounds.hpp"

#include "unisam/harness/experiment.hpp"
#include "unisam/schedules.hpp"

#include <cmath>

namespace unisam::harness {

namespace {

using nlohmann::json;

json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

}  // namespace

json bounds_report(const BoundsInput& in) {
  json out = {{"A", in.er.A}, {"B", in.er.B}, {"C", in.er.C},
              {"L", in.L},    {"lambda", in.lambda}};
  if (in.mu) {
    out["mu"] = *in.mu;
    PLOptions o;
    o.rho_fraction = in.rho_fraction;
    const PLRates r = pl_constant_steps(in.er, in.L, *in.mu, in.lambda, o);
    out["pl_constant"] = {{"rho_star", num(r.rho_star)}, {"gamma_star", num(r.gamma_star)},
                          {"rho", r.rho},                {"gamma", r.gamma},
                          {"N", num(r.N)},               {"rate", r.rate},
                          {"rho_clamped", r.rho_clamped}, {"gamma_clamped", r.gamma_clamped}};
  }
  if (in.eps && in.T) {
    const NonconvexSteps s = nonconvex_steps(*in.eps, in.lambda, in.L, in.er, *in.T,
                                             in.delta0.value_or(0.0));
    json rt = json::array(), gt = json::array();
    for (double t : s.rho_terms) rt.push_back(num(t));
    for (double t : s.gamma_terms) gt.push_back(num(t));
    out["nonconvex"] = {{"T", *in.T},
                        {"rho_bar", num(s.rho_bar)},
                        {"gamma_bar", num(s.gamma_bar)},
                        {"rho", s.rho},
                        {"gamma", s.gamma},
                        {"rho_terms", rt},
                        {"gamma_terms", gt}};
  }
  if (in.eps && in.delta0) {
    const NonconvexIterBound b = nonconvex_iter_bound(*in.eps, *in.delta0, in.L, in.er, in.lambda);
    json terms = json::array();
    for (double t : b.terms) terms.push_back(num(t));
    out["iteration_bound"] = {{"eps", *in.eps}, {"delta0", *in.delta0}, {"value", num(b.value)},
                              {"T", b.T}, {"terms", terms}};
  }
  return out;
}

json bounds_report(const ExperimentConfig& config) {
  const Experiment e = plan_experiment(config);
  json groups = json::array();
  for (const Group& g : e.groups) {
    if (g.source == StepSource::manual) continue;
    BoundsInput in;
    in.er = g.er;
    in.L = g.L;
    in.mu = e.problem->stats().mu;
    in.lambda = g.lambda.heuristic() ? 0.0 : g.lambda.value;
    in.rho_fraction = config.steps.rho_fraction;
    in.eps = config.steps.eps;
    in.delta0 = g.delta0;
    in.T = g.total_iters;
    json r = bounds_report(in);
    r["group"] = g.experiment_id;
    r["provenance"] = g.provenance;
    groups.push_back(std::move(r));
  }
  return {{"experiment", config.id}, {"groups", groups}};
}

}  // namespace unisam::harness
