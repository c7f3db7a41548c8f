#include "unisam/optimizer.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace unisam {

namespace {

/// Multiplier s with perturbation = s * dir.
double perturbation_scale(double norm, double rho, double lambda, bool& zero_grad) {
  zero_grad = norm <= tolerance::zero_gradient;
  if (zero_grad) return rho * (1.0 - lambda);
  return rho * (1.0 - lambda + lambda / norm);
}

void check_step_args(double rho, double gamma, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda", "outside [0, 1]");
  if (!(rho >= 0.0)) throw ConfigError("rho", "must be >= 0");
  if (!(gamma > 0.0)) throw ConfigError("gamma", "must be > 0");
}

}  // namespace

Vector unified_perturbation(const Vector& dir, double rho, double lambda, bool* zero_grad) {
  bool z;
  const double s = perturbation_scale(dir.norm(), rho, lambda, z);
  if (zero_grad) *zero_grad = z;
  return s * dir;
}

StepResult unified_sam_step(const Vector& x, const Vector& g, double rho, double gamma,
                            double lambda, const GradAt& grad_at) {
  check_step_args(rho, gamma, lambda);
  StepResult r;
  const double s = perturbation_scale(g.norm(), rho, lambda, r.zero_grad);
  const Vector xp = x + s * g;
  if (!xp.allFinite()) throw DivergenceError(0, "perturbed point is not finite");
  r.x = x - gamma * grad_at(xp);
  return r;
}

VassoStepResult unified_vasso_step(const Vector& x, const Vector& d_prev, const Vector& g,
                                   double theta, double rho, double gamma, double lambda,
                                   const GradAt& grad_at) {
  check_step_args(rho, gamma, lambda);
  if (!(theta > 0.0 && theta <= 1.0)) throw ConfigError("vasso_theta", "must lie in (0, 1]");
  VassoStepResult r;
  r.d = (1.0 - theta) * d_prev + theta * g;
  const double s = perturbation_scale(r.d.norm(), rho, lambda, r.zero_grad);
  const Vector xp = x + s * r.d;
  if (!xp.allFinite()) throw DivergenceError(0, "perturbed point is not finite");
  r.x = x - gamma * grad_at(xp);
  return r;
}

void OptimizerConfig::validate(const Problem& problem) const {
  if (max_iters < 1) throw ConfigError("max_iters", "must be >= 1");
  if (record_every < 1) throw ConfigError("record_every", "must be >= 1");
  if (static_cast<std::size_t>(x0.size()) != problem.d())
    throw ConfigError("x0", "dimension " + std::to_string(x0.size()) + " does not match d = " +
                                std::to_string(problem.d()));
  if (scheme.n() != problem.n())
    throw ConfigError("sampling", "scheme is over " + std::to_string(scheme.n()) +
                                      " components, problem has " + std::to_string(problem.n()));
  if (vasso_theta && !(*vasso_theta > 0.0 && *vasso_theta <= 1.0))
    throw ConfigError("vasso_theta", "must lie in (0, 1]");
  if (!plan.rho_at || !plan.gamma_at) throw ConfigError("steps", "step plan is empty");
}

RunRecord run(const Problem& problem, const OptimizerConfig& config, RngStream& stream) {
  config.validate(problem);
  const ProblemStats& stats = problem.stats();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> f_low;
  if (stats.f_star) f_low = stats.f_star;
  else if (stats.f_inf) f_low = stats.f_inf;

  RunRecord rec;
  Vector x = config.x0;
  Vector g, gp, xp, grad;
  Vector dir = Vector::Zero(x.size());  // VaSSO moving average

  auto log = [&](std::size_t t) -> bool {
    const double loss = problem.value(x);
    problem.full_grad(x, grad);
    RunEntry e;
    e.iteration = t;
    e.loss = loss;
    e.subopt = f_low ? loss - *f_low : nan;
    e.grad_norm = grad.norm();
    e.rho = config.plan.rho_at(t);
    e.gamma = config.plan.gamma_at(t);
    e.lambda = config.plan.lambda_at(t);
    e.zero_grad_events = rec.zero_grad_events;
    rec.entries.push_back(e);
    return std::isfinite(loss) && std::abs(loss) <= tolerance::divergence;
  };

  const double loss0 = problem.value(x);
  rec.delta0 = f_low ? loss0 - *f_low : nan;

  auto mark_diverged = [&](std::size_t t) {
    rec.diverged = true;
    rec.diverged_at = t;
  };

  if (!log(0)) {
    mark_diverged(0);
    rec.x_final = x;
    return rec;
  }

  for (std::size_t t = 0; t < config.max_iters; ++t) {
    const double rho = config.plan.rho_at(t);
    const double gamma = config.plan.gamma_at(t);
    const double lambda = config.plan.lambda_at(t);

    const SamplingVector v = draw(config.scheme, stream);
    grad_stoch_into(problem, x, v, g);

    bool zero = false;
    if (config.vasso_theta) {
      const double theta = *config.vasso_theta;
      dir = (1.0 - theta) * dir + theta * g;
      xp = x + perturbation_scale(dir.norm(), rho, lambda, zero) * dir;
    } else {
      xp = x + perturbation_scale(g.norm(), rho, lambda, zero) * g;
    }
    if (zero) ++rec.zero_grad_events;
    if (!xp.allFinite()) {
      mark_diverged(t);
      break;
    }
    grad_stoch_into(problem, xp, v, gp);
    x = x - gamma * gp;
    if (!x.allFinite()) {
      mark_diverged(t + 1);
      break;
    }

    const std::size_t next = t + 1;
    if (next % config.record_every == 0 || next == config.max_iters) {
      if (!log(next)) {
        mark_diverged(next);
        break;
      }
    }
  }
  rec.x_final = x;
  return rec;
}

}  // namespace unisam
