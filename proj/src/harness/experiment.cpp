#include "unisam/harness/experiment.hpp"

#include "json.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

namespace unisam::harness {

std::shared_ptr<LinearModelProblem> build_problem(const ProblemConfig& config) {
  if (config.file) {
    std::ifstream in(*config.file);
    if (!in) throw ConfigError("problem.file", "cannot read '" + *config.file + "'");
    nlohmann::json doc;
    try {
      in >> doc;
      return std::shared_ptr<LinearModelProblem>(problem_from_json(doc));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("problem.file", e.what());
    }
  }
  if (config.family == Family::ridge) {
    RidgeSpec spec;
    static_cast<DesignSpec&>(spec) = config.design;
    return std::make_shared<RidgeProblem>(gen_ridge(spec));
  }
  LogisticSpec spec;
  static_cast<DesignSpec&>(spec) = config.design;
  return std::make_shared<LogisticProblem>(gen_logistic(spec));
}

SamplingScheme build_scheme(SamplingKind kind, const SamplingConfig& config,
                            const Problem& problem) {
  const std::size_t n = problem.n();
  switch (kind) {
    case SamplingKind::uniform: return SamplingScheme::uniform(n);
    case SamplingKind::importance:
      return SamplingScheme::single_element(importance_probs(problem.stats(), config.importance_floor));
    case SamplingKind::single_element:
      if (config.probabilities.size() != n)
        throw ConfigError("sampling.probabilities",
                          "expected " + std::to_string(n) + " entries, got " +
                              std::to_string(config.probabilities.size()));
      return SamplingScheme::single_element(config.probabilities);
    case SamplingKind::tau_nice: return SamplingScheme::tau_nice(n, config.tau);
    case SamplingKind::full_batch: return SamplingScheme::full_batch(n);
  }
  throw ConfigError("sampling.kind", "unhandled kind");
}

double step_smoothness(const std::string& setting, const SamplingScheme& scheme,
                       const ProblemStats& stats) {
  if (setting == "auto")
    return scheme.is_deterministic() ? stats.L_full.value_or(stats.L_max) : stats.L_max;
  if (setting == "L_max") return stats.L_max;
  if (setting == "L_full") {
    if (!stats.L_full) throw MetadataMissingError("the problem does not record the smoothness of f");
    return *stats.L_full;
  }
  if (setting == "estimator") return estimator_smoothness(scheme, stats);
  try {
    std::size_t pos = 0;
    const double v = std::stod(setting, &pos);
    if (pos == setting.size() && v > 0.0 && std::isfinite(v)) return v;
  } catch (const std::logic_error&) {
  }
  throw ConfigError("steps.smoothness",
                    "expected auto, L_max, L_full, estimator or a positive number, got '" + setting + "'");
}

ERConstants group_er_constants(const StepsConfig& steps, const SamplingScheme& scheme,
                               const ProblemStats& stats) {
  if (steps.er_A) return {*steps.er_A, *steps.er_B, *steps.er_C, "manual", std::nullopt};
  if (steps.er_preset) return er_preset(*steps.er_preset, steps.er_params);
  return er_constants(scheme, stats, steps.convexity_hint);
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Group plan_group(const ExperimentConfig& cfg, const LinearModelProblem& problem, SamplingKind kind,
                 StepSource source, const LambdaSchedule& lambda) {
  const ProblemStats& stats = problem.stats();
  SamplingScheme scheme = build_scheme(kind, cfg.sampling, problem);

  std::string id = cfg.id + "/" + to_string(kind) + "/" + to_string(source);
  if (lambda.heuristic()) id += "/" + to_string(lambda.kind);

  Group g(id, kind, source, lambda, std::move(scheme));
  g.iters_per_epoch = cfg.run.iters_per_epoch.value_or(
      (problem.n() + g.scheme.batch_size() - 1) / g.scheme.batch_size());
  g.total_iters = g.iters_per_epoch * cfg.run.epochs;
  g.record_every = cfg.run.record_every.value_or(cfg.run.record_every_epochs * g.iters_per_epoch);

  const Vector x0 = Vector::Zero(static_cast<Eigen::Index>(problem.d()));
  if (stats.f_star || stats.f_inf) g.delta0 = eval_loss(problem, x0) - stats.lower_bound();

  // The theorems fix lambda; time-varying schedules borrow the lambda = 0
  // steps, which are the smallest over [0, 1].
  const double lam = lambda.heuristic() ? 0.0 : lambda.value;
  std::string prov = to_string(source);

  if (source == StepSource::manual) {
    g.plan = StepPlan::constant(*cfg.steps.rho, *cfg.steps.gamma, lambda, "manual");
    g.er.provenance = "none";
  } else {
    g.L = step_smoothness(cfg.steps.smoothness, g.scheme, stats);
    g.er = group_er_constants(cfg.steps, g.scheme, stats);
    prov += " er=" + g.er.provenance + " L=" + fmt_double(g.L);

    if (source == StepSource::nonconvex) {
      if (!g.delta0) throw MetadataMissingError("non-convex steps need f(x0) - f_inf");
      NonconvexOptions o{cfg.steps.gamma_cap, cfg.steps.rho_cap};
      g.nonconvex = nonconvex_steps(*cfg.steps.eps, lam, g.L, g.er, g.total_iters, *g.delta0, o);
      g.iter_bound = nonconvex_iter_bound(*cfg.steps.eps, *g.delta0, g.L, g.er, lam);
      g.plan = StepPlan::constant(g.nonconvex->rho, g.nonconvex->gamma, lambda, "");
      if (g.nonconvex->rho_clamped) prov += "+rho_cap";
      if (g.nonconvex->gamma_clamped) prov += "+gamma_cap";
    } else {
      if (!stats.mu)
        throw ConfigError("steps.source", to_string(source) + " needs a PL constant; the problem has none");
      PLOptions o;
      o.rho_fraction = cfg.steps.rho_fraction;
      o.rho = cfg.steps.rho;
      o.gamma_cap = cfg.steps.gamma_cap;
      o.rho_cap = cfg.steps.rho_cap;
      g.pl = pl_constant_steps(g.er, g.L, *stats.mu, lam, o);
      if (g.pl->rho_clamped) prov += "+rho_cap";
      if (g.pl->gamma_clamped) prov += "+gamma_cap";
      if (source == StepSource::pl_constant) {
        g.plan = StepPlan::constant(g.pl->rho, g.pl->gamma, lambda, "");
      } else {
        const PLRates r = *g.pl;
        const double mu = *stats.mu;
        g.plan.rho_at = [r, mu](std::size_t t) { return pl_decreasing_steps(t, r, mu).first; };
        g.plan.gamma_at = [r, mu](std::size_t t) { return pl_decreasing_steps(t, r, mu).second; };
        g.plan.lambda = lambda;
      }
    }
  }
  if (lambda.heuristic()) prov += " lambda=" + to_string(lambda.kind) + "(heuristic)";
  g.provenance = prov;
  g.plan.provenance = prov;
  return g;
}

}  // namespace

Experiment plan_experiment(const ExperimentConfig& config) {
  config.validate();
  Experiment e{config, build_problem(config.problem), {}};

  std::vector<LambdaSchedule> lambdas;
  if (config.lambda.kind == LambdaKind::constant) {
    for (double l : config.lambda.values) lambdas.push_back(LambdaSchedule::constant(l));
  } else {
    lambdas.push_back({config.lambda.kind, 0.0});
  }
  for (auto kind : config.sampling.kinds)
    for (auto source : config.steps.sources)
      for (const auto& l : lambdas) e.groups.push_back(plan_group(config, *e.problem, kind, source, l));
  return e;
}

std::size_t worker_count() {
  if (const char* env = std::getenv("UNISAM_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

ExperimentResult run_experiment(const Experiment& experiment) {
  ExperimentResult result{experiment, {}};
  const auto& cfg = experiment.config;
  const std::size_t trials = cfg.run.trials;
  const std::size_t groups = experiment.groups.size();
  result.records.assign(groups, std::vector<RunRecord>(trials));

  const std::size_t tasks = groups * trials;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= tasks) return;
      const std::size_t gi = k / trials, trial = k % trials;
      const Group& g = experiment.groups[gi];
      try {
        OptimizerConfig oc{g.plan,
                           g.scheme,
                           g.total_iters,
                           Vector::Zero(static_cast<Eigen::Index>(experiment.problem->d())),
                           cfg.run.vasso_theta,
                           g.record_every};
        RngStream stream = RngStream::derive(cfg.run.base_seed, trial);
        result.records[gi][trial] = run(*experiment.problem, oc, stream);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(tasks);
      }
    }
  };

  const std::size_t n_workers = std::min(worker_count(), std::max<std::size_t>(tasks, 1));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  return run_experiment(plan_experiment(config));
}

Aggregate aggregate(const std::vector<RunRecord>& trials) {
  Aggregate a;
  if (trials.empty()) return a;
  std::size_t len = trials.front().entries.size();
  for (const auto& r : trials) len = std::min(len, r.entries.size());
  const double m = static_cast<double>(trials.size());

  auto stat = [&](std::size_t i, auto field, std::vector<double>& mean, std::vector<double>& sd) {
    double s = 0.0;
    for (const auto& r : trials) s += field(r.entries[i]);
    const double mu = s / m;
    double v = 0.0;
    for (const auto& r : trials) {
      const double d = field(r.entries[i]) - mu;
      v += d * d;
    }
    mean.push_back(mu);
    sd.push_back(std::sqrt(v / m));
  };

  for (std::size_t i = 0; i < len; ++i) {
    const RunEntry& e0 = trials.front().entries[i];
    a.iterations.push_back(e0.iteration);
    a.lambda.push_back(e0.lambda);
    stat(i, [](const RunEntry& e) { return e.rho; }, a.rho_mean, a.rho_std);
    stat(i, [](const RunEntry& e) { return e.gamma; }, a.gamma_mean, a.gamma_std);
    stat(i, [](const RunEntry& e) { return e.loss; }, a.loss_mean, a.loss_std);
    stat(i, [](const RunEntry& e) { return e.subopt; }, a.subopt_mean, a.subopt_std);
    stat(i, [](const RunEntry& e) { return e.grad_norm; }, a.grad_norm_mean, a.grad_norm_std);
    stat(i, [](const RunEntry& e) { return static_cast<double>(e.zero_grad_events); },
         a.zero_grad_mean, a.zero_grad_std);
  }
  return a;
}

}  // namespace unisam::harness
