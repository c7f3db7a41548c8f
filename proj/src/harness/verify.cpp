#include "unisam/harness/verify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace unisam::harness {

namespace {

using nlohmann::json;

json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

json vector_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

double rel_tolerance(double a, double b) {
  return 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

struct LemmaSample {
  double eg2 = 0.0;      // E||g(x)||^2
  double eg2_pert = 0.0; // E||g(x + perturbation)||^2
  double inner = 0.0;    // E<g(x + perturbation), grad f(x)>
  double grad_sq = 0.0;  // ||grad f(x)||^2
};

LemmaSample lemma_sample(const Problem& problem, const std::vector<WeightedOutcome>& outcomes,
                         const Vector& x, double rho, double lambda) {
  LemmaSample s;
  const Vector grad = grad_full(problem, x);
  s.grad_sq = grad.squaredNorm();
  Vector g, gp;
  for (const auto& o : outcomes) {
    grad_stoch_into(problem, x, o.v, g);
    const Vector xp = x + unified_perturbation(g, rho, lambda);
    grad_stoch_into(problem, xp, o.v, gp);
    s.eg2 += o.probability * g.squaredNorm();
    s.eg2_pert += o.probability * gp.squaredNorm();
    s.inner += o.probability * gp.dot(grad);
  }
  return s;
}

template <class Bound>
LemmaReport run_lemma(const Problem& problem, const SamplingScheme& scheme, RngStream& stream,
                      const LemmaOptions& options, Bound bound) {
  if (!scheme.is_enumerable())
    throw ConfigError("sampling", "lemma checks need an enumerable scheme");
  const ProblemStats& stats = problem.stats();
  const double L = estimator_smoothness(scheme, stats);
  const auto outcomes = enumerate_outcomes(scheme);
  const auto d = static_cast<Eigen::Index>(problem.d());
  const Vector center = stats.x_star ? *stats.x_star : Vector::Zero(d);

  LemmaReport r;
  r.triples = options.triples;
  r.worst_slack = std::numeric_limits<double>::infinity();
  Vector x(d);
  for (std::size_t k = 0; k < options.triples; ++k) {
    for (Eigen::Index j = 0; j < d; ++j) x[j] = center[j] + options.radius * stream.normal();
    const double rho = stream.uniform01() * options.rho_max_over_L / L;
    const double lambda = stream.uniform01();
    const LemmaSample s = lemma_sample(problem, outcomes, x, rho, lambda);
    const auto [lhs, rhs, slack] = bound(s, L, rho, lambda);
    if (slack < -rel_tolerance(lhs, rhs)) ++r.violations;
    if (slack < r.worst_slack) {
      r.worst_slack = slack;
      r.worst_x = x;
      r.worst_rho = rho;
      r.worst_lambda = lambda;
      r.worst_lhs = lhs;
      r.worst_rhs = rhs;
    }
  }
  r.passed = r.violations == 0;
  return r;
}

json lemma_json(const std::string& name, const LemmaReport& r) {
  return {{"name", name},
          {"passed", r.passed},
          {"triples", r.triples},
          {"violations", r.violations},
          {"worst_slack", finite_or_string(r.worst_slack)},
          {"worst_rho", r.worst_rho},
          {"worst_lambda", r.worst_lambda},
          {"worst_lhs", r.worst_lhs},
          {"worst_rhs", r.worst_rhs}};
}

}  // namespace

LemmaReport check_lemma_a4(const Problem& problem, const SamplingScheme& scheme, RngStream& stream,
                           const LemmaOptions& options) {
  return run_lemma(problem, scheme, stream, options,
                   [](const LemmaSample& s, double L, double rho, double lambda) {
                     const double q = (1.0 - lambda) * (1.0 - lambda);
                     const double rhs = 4.0 * L * L * rho * rho * lambda * lambda +
                                        2.0 * (2.0 * L * L * rho * rho * q + 1.0) * s.eg2;
                     return std::array<double, 3>{s.eg2_pert, rhs, rhs - s.eg2_pert};
                   });
}

LemmaReport check_lemma_a5(const Problem& problem, const SamplingScheme& scheme, RngStream& stream,
                           const LemmaOptions& options) {
  return run_lemma(problem, scheme, stream, options,
                   [](const LemmaSample& s, double L, double rho, double lambda) {
                     const double q = (1.0 - lambda) * (1.0 - lambda);
                     const double rhs = (1.0 - L * rho / 2.0) * s.grad_sq -
                                        L * rho * lambda * lambda - L * rho * q * s.eg2;
                     return std::array<double, 3>{s.inner, rhs, s.inner - rhs};
                   });
}

EnvelopeReport check_envelope(const Problem& problem, const SamplingScheme& scheme,
                              const PLRates& rates, std::size_t iterations,
                              std::size_t record_every, std::size_t trials,
                              std::uint64_t base_seed, double standard_errors) {
  if (trials < 2) throw ConfigError("verify.trials", "the envelope check needs at least 2 trials");
  const auto d = static_cast<Eigen::Index>(problem.d());
  OptimizerConfig oc{StepPlan::constant(rates.rho, rates.gamma, LambdaSchedule::constant(rates.lambda),
                                        "pl_constant"),
                     scheme,
                     iterations,
                     Vector::Zero(d),
                     std::nullopt,
                     record_every};
  std::vector<RunRecord> records;
  for (std::size_t k = 0; k < trials; ++k) {
    RngStream stream = RngStream::derive(base_seed, k);
    records.push_back(run(problem, oc, stream));
  }

  EnvelopeReport r;
  r.trials = trials;
  r.delta0 = records.front().delta0;
  r.N = rates.N;
  r.rate = rates.rate;
  r.worst_margin = std::numeric_limits<double>::infinity();
  const Aggregate a = aggregate(records);
  const double m = static_cast<double>(trials);
  r.points = a.iterations.size();
  for (std::size_t i = 0; i < a.iterations.size(); ++i) {
    const double t = static_cast<double>(a.iterations[i]);
    const double envelope = std::pow(rates.rate, t) * r.delta0 + rates.N;
    // aggregate() reports the population std; SE uses the sample std.
    const double se = a.subopt_std[i] * std::sqrt(m / (m - 1.0)) / std::sqrt(m);
    const double margin = envelope + standard_errors * se - a.subopt_mean[i];
    if (margin < 0.0) ++r.violations;
    if (margin < r.worst_margin) {
      r.worst_margin = margin;
      r.worst_iteration = a.iterations[i];
    }
  }
  for (const auto& rec : records)
    if (rec.diverged) ++r.violations;
  r.passed = r.violations == 0;
  return r;
}

VerifyOutcome verify(const ExperimentConfig& config) {
  const Experiment e = plan_experiment(config);
  const Problem& problem = *e.problem;
  const VerifyConfig& v = config.verify;
  VerifyOutcome out;
  json checks = json::array();
  auto add = [&](json check) {
    if (!check["passed"].get<bool>()) out.passed = false;
    checks.push_back(std::move(check));
  };

  RngStream stream = RngStream::derive(config.run.base_seed, 0x5eed);

  for (const Group& g : e.groups) {
    if (g.source == StepSource::manual) continue;
    json base = {{"group", g.experiment_id}, {"lambda", g.lambda.label()}};
    try {
      const ERConstants c = g.er.scaled(v.er_scale);
      ERCheckOptions o;
      o.points = v.points;
      o.draws = v.draws;
      const ERReport r = verify_er(problem, g.scheme, c, stream, o);
      json check = base;
      check.update({{"name", "expected_residual"},
                    {"passed", r.passed},
                    {"exact", r.exact},
                    {"A", c.A},
                    {"B", c.B},
                    {"C", c.C},
                    {"provenance", c.provenance},
                    {"points", r.points},
                    {"violations", r.violations},
                    {"worst_slack", finite_or_string(r.worst_slack)},
                    {"worst_standard_error", r.worst_standard_error},
                    {"worst_lhs", r.worst_lhs},
                    {"worst_rhs", r.worst_rhs}});
      if (!r.passed) check["worst_point"] = vector_json(r.worst_point);
      add(std::move(check));
    } catch (const MetadataMissingError& err) {
      json check = base;
      check.update({{"name", "expected_residual"}, {"passed", false}, {"error", err.what()}});
      add(std::move(check));
    }

    if (g.source == StepSource::pl_constant && g.pl && !g.lambda.heuristic()) {
      const EnvelopeReport r = check_envelope(problem, g.scheme, *g.pl, g.total_iters,
                                              g.record_every, v.trials, config.run.base_seed,
                                              v.envelope_standard_errors);
      json check = base;
      check.update({{"name", "pl_envelope"},
                    {"passed", r.passed},
                    {"trials", r.trials},
                    {"points", r.points},
                    {"violations", r.violations},
                    {"worst_margin", finite_or_string(r.worst_margin)},
                    {"worst_iteration", r.worst_iteration},
                    {"delta0", r.delta0},
                    {"N", r.N},
                    {"rate", r.rate}});
      add(std::move(check));
    }
  }

  const SamplingScheme uniform = SamplingScheme::uniform(problem.n());
  LemmaOptions lo;
  lo.triples = v.points;
  add(lemma_json("lemma_perturbed_second_moment", check_lemma_a4(problem, uniform, stream, lo)));
  add(lemma_json("lemma_perturbed_inner_product", check_lemma_a5(problem, uniform, stream, lo)));

  out.report = {{"experiment", config.id}, {"passed", out.passed}, {"checks", std::move(checks)}};
  return out;
}

}  // namespace unisam::harness
