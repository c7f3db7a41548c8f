#pragma once

#include "unisam/harness/config.hpp"
#include "unisam/optimizer.hpp"

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace unisam::harness {

std::shared_ptr<LinearModelProblem> build_problem(const ProblemConfig& config);

SamplingScheme build_scheme(SamplingKind kind, const SamplingConfig& config, const Problem& problem);

/// Smoothness the step formulas use for this scheme (see StepsConfig::smoothness).
double step_smoothness(const std::string& setting, const SamplingScheme& scheme,
                       const ProblemStats& stats);

/// ER constants for the group: explicit triple, preset, or the sampling formulas.
ERConstants group_er_constants(const StepsConfig& steps, const SamplingScheme& scheme,
                               const ProblemStats& stats);

/// One (sampling, step source, lambda) combination; every trial of the group
/// shares its step plan.
struct Group {
  Group(std::string id, SamplingKind kind, StepSource source, LambdaSchedule lambda,
        SamplingScheme scheme)
      : experiment_id(std::move(id)),
        sampling_kind(kind),
        source(source),
        lambda(lambda),
        scheme(std::move(scheme)) {}

  std::string experiment_id;
  SamplingKind sampling_kind;
  StepSource source;
  LambdaSchedule lambda;
  SamplingScheme scheme;
  StepPlan plan;
  ERConstants er;
  double L = 0.0;
  std::size_t iters_per_epoch = 1;
  std::size_t total_iters = 1;
  std::size_t record_every = 1;
  /// f(x0) - f_low for x0 = 0, when f_low is known.
  std::optional<double> delta0;
  std::optional<PLRates> pl;
  std::optional<NonconvexSteps> nonconvex;
  std::optional<NonconvexIterBound> iter_bound;
  std::string provenance;
};

struct Experiment {
  ExperimentConfig config;
  std::shared_ptr<LinearModelProblem> problem;
  std::vector<Group> groups;
};

/// Resolves the config into a problem and one step plan per group.
Experiment plan_experiment(const ExperimentConfig& config);

std::size_t worker_count();

struct ExperimentResult {
  Experiment experiment;
  /// records[g][k]: trial k of group g.
  std::vector<std::vector<RunRecord>> records;
};

/// Runs every trial of every group on a pool of worker_count() threads.
/// Trial k of each group uses RngStream::derive(base_seed, k).
ExperimentResult run_experiment(const Experiment& experiment);
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Mean and population standard deviation over trials at each logged
/// iteration present in every trial.
struct Aggregate {
  std::vector<std::size_t> iterations;
  std::vector<double> lambda, rho_mean, rho_std, gamma_mean, gamma_std, loss_mean, loss_std,
      subopt_mean, subopt_std, grad_norm_mean, grad_norm_std, zero_grad_mean, zero_grad_std;
};
Aggregate aggregate(const std::vector<RunRecord>& trials);

}  // namespace unisam::harness
