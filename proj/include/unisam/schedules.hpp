#pragma once

#include "unisam/sampling.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>

namespace unisam {

// ---------------------------------------------------------------------------
// lambda_t

enum class LambdaKind { constant, inv_t, one_minus_inv_t };
std::string to_string(LambdaKind kind);
LambdaKind lambda_kind_from_string(const std::string& name);

/// const -> value, inv_t -> 1/t, one_minus_inv_t -> 1 - 1/t. Time-varying
/// kinds need t >= 1 and throw std::domain_error at t = 0.
double lambda_schedule(LambdaKind kind, double value, std::size_t t);

struct LambdaSchedule {
  LambdaKind kind = LambdaKind::constant;
  double value = 0.0;  ///< used by the constant kind

  static LambdaSchedule constant(double lambda);

  /// lambda for 0-based iteration t; time-varying kinds are 1-based, so
  /// iteration t reads lambda_schedule(kind, value, t + 1).
  double at_iteration(std::size_t t) const;
  /// The convergence theorems assume a fixed lambda.
  bool heuristic() const { return kind != LambdaKind::constant; }
  std::string label() const;
};

/// (rho_t, gamma_t, lambda_t) for 0-based iterations.
struct StepPlan {
  std::function<double(std::size_t)> rho_at;
  std::function<double(std::size_t)> gamma_at;
  LambdaSchedule lambda;
  std::string provenance;

  double lambda_at(std::size_t t) const { return lambda.at_iteration(t); }

  static StepPlan constant(double rho, double gamma, LambdaSchedule lambda, std::string provenance);
};

// ---------------------------------------------------------------------------
// PL, constant steps

struct PLOptions {
  /// Operating rho as a fraction of rho*. rho = rho* zeroes gamma*.
  double rho_fraction = 0.5;
  /// Explicit operating rho; must not exceed rho*. Overrides rho_fraction.
  std::optional<double> rho;
  /// Defaults to 1/L.
  std::optional<double> gamma_cap;
  std::optional<double> rho_cap;
};

struct PLRates {
  double rho_star = 0.0;    ///< raw bound, may be +inf
  double gamma_star = 0.0;  ///< raw bound at the operating rho, may be +inf
  double rho = 0.0;         ///< operating rho (after the cap)
  double gamma = 0.0;       ///< operating gamma (after the cap)
  double N = 0.0;
  double rate = 1.0;  ///< 1 - gamma mu
  double L = 0.0;
  double mu = 0.0;
  double lambda = 0.0;
  bool rho_clamped = false;
  bool gamma_clamped = false;
  std::string provenance;
};

/// mu / (L (mu + 2 [B mu + A] (1-lambda)^2))
double pl_rho_star(const ERConstants& c, double L, double mu, double lambda);
/// (mu - L rho (mu + 2 [B mu + A] (1-lambda)^2)) / (2 L (B mu + A) [2 L^2 rho^2 (1-lambda)^2 + 1]),
/// with 1/0 = inf.
double pl_gamma_star(const ERConstants& c, double L, double mu, double lambda, double rho);
/// (L/mu) (C gamma + rho (1 + 2 gamma L^2 rho) [lambda^2 + C (1-lambda)^2])
double pl_neighborhood(const ERConstants& c, double L, double mu, double lambda, double rho,
                       double gamma);

/// Constant steps for a mu-PL problem. L is the smoothness the estimator
/// obeys (L_max in general). Throws ConfigError if mu <= 0.
PLRates pl_constant_steps(const ERConstants& c, double L, double mu, double lambda,
                          const PLOptions& options = {});

// ---------------------------------------------------------------------------
// PL, decreasing steps

/// rho_t = min{1/(2t+1), rho_cap}, gamma_t = min{(2t+1)/((t+1)^2 mu), gamma_cap}, t >= 0.
std::pair<double, double> pl_decreasing_steps(std::size_t t, double rho_cap, double gamma_cap,
                                              double mu);
/// Caps are the operating (rho, gamma) of `rates`: at the raw rho* the
/// constant-step gamma* is zero, so the raw pair is not a usable cap.
std::pair<double, double> pl_decreasing_steps(std::size_t t, const PLRates& rates, double mu);

// ---------------------------------------------------------------------------
// Non-convex

struct NonconvexOptions {
  std::optional<double> gamma_cap;  ///< defaults to 1/L
  std::optional<double> rho_cap;    ///< defaults to 1/L
};

struct NonconvexSteps {
  /// Terms in the order the theorem lists them; +inf for vanishing denominators.
  std::array<double, 4> rho_terms{};
  std::array<double, 6> gamma_terms{};
  double rho_bar = 0.0;    ///< raw minimum
  double gamma_bar = 0.0;  ///< raw minimum
  double rho = 0.0;        ///< after the cap
  double gamma = 0.0;      ///< after the cap
  bool rho_clamped = false;
  bool gamma_clamped = false;
};

/// Step pair for T iterations of the non-convex guarantee. delta0 does not
/// enter these expressions; it is accepted so callers can pass the same
/// inputs as to nonconvex_min_iters.
NonconvexSteps nonconvex_steps(double eps, double lambda, double L, const ERConstants& c,
                               std::size_t T, double delta0, const NonconvexOptions& options = {});

struct NonconvexIterBound {
  std::array<double, 6> terms{};  ///< the six entries of the max
  double value = 0.0;             ///< (delta0 L / eps^2) max{...}
  std::size_t T = 0;              ///< ceil(value), at least 1
};

NonconvexIterBound nonconvex_iter_bound(double eps, double delta0, double L, const ERConstants& c,
                                        double lambda);
std::size_t nonconvex_min_iters(double eps, double delta0, double L, const ERConstants& c,
                                double lambda);

}  // namespace unisam
