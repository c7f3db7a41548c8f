#pragma once

#include "unisam/problems.hpp"
#include "unisam/sampling.hpp"
#include "unisam/schedules.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace unisam::harness {

struct ProblemConfig {
  Family family = Family::ridge;
  DesignSpec design;
  /// Load the problem from a JSON file written by `gen` instead of generating it.
  std::optional<std::string> file;
};

enum class SamplingKind { uniform, importance, single_element, tau_nice, full_batch };
std::string to_string(SamplingKind kind);
SamplingKind sampling_kind_from_string(const std::string& name);

struct SamplingConfig {
  /// One group of runs per entry.
  std::vector<SamplingKind> kinds{SamplingKind::uniform};
  std::vector<double> probabilities;  ///< single_element only
  std::size_t tau = 1;                ///< tau_nice only
  std::optional<double> importance_floor;
};

enum class StepSource { pl_constant, pl_decreasing, nonconvex, manual };
std::string to_string(StepSource source);
StepSource step_source_from_string(const std::string& name);

struct StepsConfig {
  /// One group of runs per entry.
  std::vector<StepSource> sources{StepSource::pl_constant};
  double rho_fraction = 0.5;
  std::optional<double> rho_cap;
  std::optional<double> gamma_cap;
  /// Manual steps, or an explicit operating rho for pl_constant.
  std::optional<double> rho;
  std::optional<double> gamma;
  /// Target gradient norm for the non-convex steps.
  std::optional<double> eps;
  /// "auto" (smoothness of f for deterministic schemes, L_max otherwise),
  /// "L_max", "L_full", "estimator", or a number.
  std::string smoothness = "auto";
  bool convexity_hint = false;
  /// ER constants: from the sampling formulas unless a preset or an explicit
  /// triple is given.
  std::optional<std::string> er_preset;
  ERPresetParams er_params;
  std::optional<double> er_A, er_B, er_C;
};

struct LambdaConfig {
  LambdaKind kind = LambdaKind::constant;
  /// Constant schedules: one group per value.
  std::vector<double> values{0.5};
};

struct RunConfig {
  std::size_t trials = 1;
  std::size_t epochs = 1;
  /// Defaults to ceil(n / batch size).
  std::optional<std::size_t> iters_per_epoch;
  std::uint64_t base_seed = 0;
  std::size_t record_every_epochs = 1;
  /// Logging stride in iterations; overrides record_every_epochs.
  std::optional<std::size_t> record_every;
  std::optional<double> vasso_theta;
  std::string output;
};

struct VerifyConfig {
  /// Multiplies the ER constants before checking (0.5 exhibits violations).
  double er_scale = 1.0;
  std::size_t points = 100;
  std::size_t draws = 10000;
  std::size_t trials = 20;
  double envelope_standard_errors = 3.0;
};

struct ExperimentConfig {
  std::string id = "run";
  std::string preset = "custom";
  ProblemConfig problem;
  SamplingConfig sampling;
  StepsConfig steps;
  LambdaConfig lambda;
  RunConfig run;
  VerifyConfig verify;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Parses TOML text. Unknown sections or keys raise ConfigError.
ExperimentConfig parse_config(const std::string& toml_text);
ExperimentConfig load_config(const std::string& path);

/// Applies "section.key=value" overrides on top of `base`. Values are parsed
/// as TOML, falling back to a bare string.
ExperimentConfig apply_overrides(const ExperimentConfig& base,
                                 const std::vector<std::string>& overrides);

/// Canonical TOML rendering; parse_config(to_toml(c)) reproduces c.
std::string to_toml(const ExperimentConfig& config);

}  // namespace unisam::harness
