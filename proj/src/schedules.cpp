#include "unisam/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace unisam {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

/// num / den with 1/0 = inf. A zero numerator stays zero.
double ratio(double num, double den) {
  if (num == 0.0) return 0.0;
  if (den == 0.0) return num > 0.0 ? inf : -inf;
  return num / den;
}

void check_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw ConfigError("lambda", "lambda = " + std::to_string(lambda) + " is outside [0, 1]");
}

void check_positive(const char* field, double v) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw ConfigError(field, std::string("must be finite and > 0, got ") + std::to_string(v));
}

}  // namespace

std::string to_string(LambdaKind kind) {
  switch (kind) {
    case LambdaKind::constant: return "const";
    case LambdaKind::inv_t: return "inv_t";
    case LambdaKind::one_minus_inv_t: return "one_minus_inv_t";
  }
  return "?";
}

LambdaKind lambda_kind_from_string(const std::string& name) {
  if (name == "const" || name == "constant") return LambdaKind::constant;
  if (name == "inv_t") return LambdaKind::inv_t;
  if (name == "one_minus_inv_t") return LambdaKind::one_minus_inv_t;
  throw ConfigError("lambda.kind", "unknown schedule '" + name + "'");
}

double lambda_schedule(LambdaKind kind, double value, std::size_t t) {
  if (kind == LambdaKind::constant) return value;
  if (t == 0) throw std::domain_error("time-varying lambda schedules start at t = 1");
  const double inv = 1.0 / static_cast<double>(t);
  return kind == LambdaKind::inv_t ? inv : 1.0 - inv;
}

LambdaSchedule LambdaSchedule::constant(double lambda) {
  check_lambda(lambda);
  return {LambdaKind::constant, lambda};
}

double LambdaSchedule::at_iteration(std::size_t t) const {
  return lambda_schedule(kind, value, t + 1);
}

std::string LambdaSchedule::label() const {
  if (kind == LambdaKind::constant) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
  }
  return to_string(kind);
}

StepPlan StepPlan::constant(double rho, double gamma, LambdaSchedule lambda,
                            std::string provenance) {
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw ConfigError("steps.rho", "must be finite and >= 0");
  check_positive("steps.gamma", gamma);
  StepPlan p;
  p.rho_at = [rho](std::size_t) { return rho; };
  p.gamma_at = [gamma](std::size_t) { return gamma; };
  p.lambda = lambda;
  p.provenance = std::move(provenance);
  return p;
}

double pl_rho_star(const ERConstants& c, double L, double mu, double lambda) {
  const double q = (1.0 - lambda) * (1.0 - lambda);
  return ratio(mu, L * (mu + 2.0 * (c.B * mu + c.A) * q));
}

double pl_gamma_star(const ERConstants& c, double L, double mu, double lambda, double rho) {
  const double q = (1.0 - lambda) * (1.0 - lambda);
  const double num = mu - L * rho * (mu + 2.0 * (c.B * mu + c.A) * q);
  const double den = 2.0 * L * (c.B * mu + c.A) * (2.0 * L * L * rho * rho * q + 1.0);
  return ratio(num, den);
}

double pl_neighborhood(const ERConstants& c, double L, double mu, double lambda, double rho,
                       double gamma) {
  const double q = (1.0 - lambda) * (1.0 - lambda);
  return (L / mu) * (c.C * gamma + rho * (1.0 + 2.0 * gamma * L * L * rho) * (lambda * lambda + c.C * q));
}

PLRates pl_constant_steps(const ERConstants& c, double L, double mu, double lambda,
                          const PLOptions& options) {
  if (!(mu > 0.0)) throw ConfigError("mu", "constant PL steps need mu > 0");
  check_positive("L", L);
  check_lambda(lambda);

  PLRates r;
  r.L = L;
  r.mu = mu;
  r.lambda = lambda;
  r.rho_star = pl_rho_star(c, L, mu, lambda);

  double rho;
  if (options.rho) {
    rho = *options.rho;
    if (!(rho >= 0.0) || rho > r.rho_star)
      throw ConfigError("steps.rho", "rho = " + std::to_string(rho) + " exceeds rho* = " +
                                         std::to_string(r.rho_star));
  } else {
    if (!(options.rho_fraction > 0.0 && options.rho_fraction < 1.0))
      throw ConfigError("steps.rho_fraction", "must lie in (0, 1)");
    rho = options.rho_fraction * r.rho_star;
  }
  const double rho_cap = options.rho_cap.value_or(1.0 / L);
  if (rho > rho_cap) {
    rho = rho_cap;
    r.rho_clamped = true;
  }
  r.rho = rho;

  r.gamma_star = pl_gamma_star(c, L, mu, lambda, rho);
  const double gamma_cap = options.gamma_cap.value_or(1.0 / L);
  r.gamma = r.gamma_star;
  if (r.gamma > gamma_cap) {
    r.gamma = gamma_cap;
    r.gamma_clamped = true;
  }
  if (!(r.gamma > 0.0))
    throw ConfigError("steps", "operating rho leaves no positive gamma");

  r.N = pl_neighborhood(c, L, mu, lambda, r.rho, r.gamma);
  r.rate = 1.0 - r.gamma * mu;
  r.provenance = "pl_constant";
  if (r.rho_clamped) r.provenance += "+rho_cap";
  if (r.gamma_clamped) r.provenance += "+gamma_cap";
  return r;
}

std::pair<double, double> pl_decreasing_steps(std::size_t t, double rho_cap, double gamma_cap,
                                              double mu) {
  const double tt = static_cast<double>(t);
  const double rho = std::min(1.0 / (2.0 * tt + 1.0), rho_cap);
  const double gamma = std::min((2.0 * tt + 1.0) / ((tt + 1.0) * (tt + 1.0) * mu), gamma_cap);
  return {rho, gamma};
}

std::pair<double, double> pl_decreasing_steps(std::size_t t, const PLRates& rates, double mu) {
  return pl_decreasing_steps(t, rates.rho, rates.gamma, mu);
}

NonconvexSteps nonconvex_steps(double eps, double lambda, double L, const ERConstants& c,
                               std::size_t T, double /*delta0*/, const NonconvexOptions& options) {
  check_positive("eps", eps);
  check_positive("L", L);
  check_lambda(lambda);
  if (T == 0) throw ConfigError("T", "must be >= 1");

  const double A = c.A, B = c.B, C = c.C;
  const double om = 1.0 - lambda;
  const double q = om * om;
  const double sT = std::sqrt(static_cast<double>(T));
  const double e2 = eps * eps;
  const double noise = C * q + lambda * lambda;

  NonconvexSteps s;
  s.rho_terms = {ratio(1.0, 4.0 * L), ratio(1.0, 8.0 * B * L * q), 1.0 / sT,
                 ratio(e2, 12.0 * L * noise)};
  s.gamma_terms = {ratio(1.0, 8.0 * B * L),
                   ratio(1.0, 2.0 * L * om * std::sqrt(3.0 * A * L)),
                   ratio(1.0, 6.0 * L * A * q * sT),
                   ratio(1.0, std::sqrt(6.0 * A * L * static_cast<double>(T))),
                   ratio(e2, 24.0 * L * L * L * noise),
                   ratio(e2, 12.0 * L * C)};
  s.rho_bar = *std::min_element(s.rho_terms.begin(), s.rho_terms.end());
  s.gamma_bar = *std::min_element(s.gamma_terms.begin(), s.gamma_terms.end());

  const double rho_cap = options.rho_cap.value_or(1.0 / L);
  const double gamma_cap = options.gamma_cap.value_or(1.0 / L);
  s.rho_clamped = s.rho_bar > rho_cap;
  s.gamma_clamped = s.gamma_bar > gamma_cap;
  s.rho = s.rho_clamped ? rho_cap : s.rho_bar;
  s.gamma = s.gamma_clamped ? gamma_cap : s.gamma_bar;
  return s;
}

NonconvexIterBound nonconvex_iter_bound(double eps, double delta0, double L, const ERConstants& c,
                                        double lambda) {
  check_positive("eps", eps);
  check_positive("L", L);
  check_lambda(lambda);
  if (!(delta0 >= 0.0)) throw ConfigError("delta0", "must be >= 0");

  const double A = c.A, B = c.B, C = c.C;
  const double om = 1.0 - lambda;
  const double e2 = eps * eps;
  NonconvexIterBound b;
  b.terms = {96.0 * B,
             24.0 * om * std::sqrt(3.0 * L * A),
             5184.0 * L * A * A * std::pow(om, 4) * delta0 / e2,
             864.0 * delta0 * A / e2,
             144.0 * C / e2,
             288.0 * L * L * om * om / e2};
  b.value = delta0 * L / e2 * *std::max_element(b.terms.begin(), b.terms.end());
  const double ceil_v = std::ceil(b.value);
  b.T = ceil_v < 1.0 ? 1 : static_cast<std::size_t>(ceil_v);
  return b;
}

std::size_t nonconvex_min_iters(double eps, double delta0, double L, const ERConstants& c,
                                double lambda) {
  return nonconvex_iter_bound(eps, delta0, L, c, lambda).T;
}

}  // namespace unisam
