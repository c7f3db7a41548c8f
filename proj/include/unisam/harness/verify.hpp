#pragma once

#include "unisam/harness/experiment.hpp"

#include "json.hpp"

#include <cstddef>
#include <cstdint>

namespace unisam::harness {

struct LemmaOptions {
  std::size_t triples = 100;
  /// x = x_ref + radius * N(0, I); rho ~ U[0, rho_max_over_L / L]; lambda ~ U[0, 1].
  double radius = 1.0;
  double rho_max_over_L = 2.0;
};

struct LemmaReport {
  bool passed = true;
  std::size_t triples = 0;
  std::size_t violations = 0;
  double worst_slack = 0.0;  ///< min of (bound side) - (expectation side), signed
  Vector worst_x;
  double worst_rho = 0.0;
  double worst_lambda = 0.0;
  double worst_lhs = 0.0;
  double worst_rhs = 0.0;
};

/// E||g(x + rho (1 - lambda + lambda/||g||) g)||^2
///   <= 4 L^2 rho^2 lambda^2 + 2 [2 L^2 rho^2 (1-lambda)^2 + 1] E||g(x)||^2,
/// expectations by enumeration; L is the estimator smoothness.
LemmaReport check_lemma_a4(const Problem& problem, const SamplingScheme& scheme, RngStream& stream,
                           const LemmaOptions& options = {});

/// E<g(x + rho (1 - lambda + lambda/||g||) g), grad f(x)>
///   >= (1 - L rho/2) ||grad f||^2 - L rho lambda^2 - L rho (1-lambda)^2 E||g||^2.
LemmaReport check_lemma_a5(const Problem& problem, const SamplingScheme& scheme, RngStream& stream,
                           const LemmaOptions& options = {});

struct EnvelopeReport {
  bool passed = true;
  std::size_t trials = 0;
  std::size_t points = 0;
  std::size_t violations = 0;
  /// min over logged t of envelope + allowance - mean.
  double worst_margin = 0.0;
  std::size_t worst_iteration = 0;
  double delta0 = 0.0;
  double N = 0.0;
  double rate = 0.0;
};

/// Runs `trials` seeded runs with the constant steps of `rates` and checks
/// mean_k subopt_k(t) <= rate^t delta0 + N + se * SE(t) at every logged t.
EnvelopeReport check_envelope(const Problem& problem, const SamplingScheme& scheme,
                              const PLRates& rates, std::size_t iterations,
                              std::size_t record_every, std::size_t trials,
                              std::uint64_t base_seed, double standard_errors = 3.0);

/// verify subcommand: ER inequality per group, both lemma suites (uniform
/// single-element sampling), and the envelope for every constant-step PL group.
struct VerifyOutcome {
  bool passed = true;
  nlohmann::json report;
};
VerifyOutcome verify(const ExperimentConfig& config);

}  // namespace unisam::harness
