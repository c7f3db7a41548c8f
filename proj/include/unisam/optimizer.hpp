#pragma once

#include "unisam/core.hpp"
#include "unisam/rng.hpp"
#include "unisam/sampling.hpp"
#include "unisam/schedules.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

namespace unisam {

/// Gradient oracle at an arbitrary point. The optimizer binds it to the
/// sampling vector drawn for the current iteration.
using GradAt = std::function<Vector(const Vector&)>;

struct StepResult {
  Vector x;
  /// ||direction|| was at or below tolerance::zero_gradient, so the
  /// normalized part of the perturbation was dropped.
  bool zero_grad = false;
};

/// Perturbation rho (1 - lambda + lambda/||dir||) dir, or rho (1 - lambda) dir
/// when ||dir|| <= tolerance::zero_gradient.
Vector unified_perturbation(const Vector& dir, double rho, double lambda, bool* zero_grad = nullptr);

/// x - gamma * grad_at(x + rho (1 - lambda + lambda/||g||) g).
/// Throws DivergenceError (iteration 0) if the perturbed point is not finite.
StepResult unified_sam_step(const Vector& x, const Vector& g, double rho, double gamma,
                            double lambda, const GradAt& grad_at);

struct VassoStepResult {
  Vector x;
  Vector d;
  bool zero_grad = false;
};

/// d = (1 - theta) d_prev + theta g, then the Unified SAM step along d.
VassoStepResult unified_vasso_step(const Vector& x, const Vector& d_prev, const Vector& g,
                                   double theta, double rho, double gamma, double lambda,
                                   const GradAt& grad_at);

struct OptimizerConfig {
  StepPlan plan;
  SamplingScheme scheme;
  std::size_t max_iters = 1;
  Vector x0;
  std::optional<double> vasso_theta;
  std::size_t record_every = 1;

  void validate(const Problem& problem) const;
};

struct RunEntry {
  std::size_t iteration = 0;
  double loss = 0.0;
  /// f(x) - f* (or f - f_inf); NaN when neither is known.
  double subopt = 0.0;
  double grad_norm = 0.0;
  /// Steps used by the update leaving this iterate. The final entry repeats
  /// the schedule value at t = max_iters.
  double rho = 0.0;
  double gamma = 0.0;
  double lambda = 0.0;
  /// Cumulative count of zero-gradient events before this iterate.
  std::size_t zero_grad_events = 0;
};

struct RunRecord {
  std::vector<RunEntry> entries;
  /// f(x0) - f*, or f(x0) - f_inf; NaN when neither is known.
  double delta0 = 0.0;
  std::size_t zero_grad_events = 0;
  bool diverged = false;
  std::size_t diverged_at = 0;
  Vector x_final;
};

/// Runs max_iters iterations. Each iteration draws one sampling vector and
/// uses it for both the inner and the outer gradient. Entries are logged at
/// t = 0, every record_every iterations and at t = max_iters. A loss above
/// tolerance::divergence or a non-finite value stops the run with `diverged`
/// set; the record keeps everything logged so far.
RunRecord run(const Problem& problem, const OptimizerConfig& config, RngStream& stream);

}  // namespace unisam
