#include "unisam/harness/presets.hpp"

namespace unisam::harness {

namespace {

// Problem seed shared by the presets; trials draw from run.base_seed.
constexpr std::uint64_t problem_seed = 1;

ExperimentConfig fig1() {
  ExperimentConfig c;
  c.id = "fig1";
  c.preset = "fig1";
  c.problem.family = Family::ridge;
  c.problem.design = {100, 100, 10.0, 0.0, problem_seed, {}};
  c.sampling.kinds = {SamplingKind::full_batch};
  c.steps.sources = {StepSource::pl_constant};
  c.lambda.values = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  c.run.trials = 1;
  c.run.epochs = 50;
  // With one full-gradient step per epoch, 50 epochs are too few to see the
  // lambda = 0 run reach its floor; an epoch here is n gradient steps.
  c.run.iters_per_epoch = 100;
  c.run.record_every_epochs = 1;
  c.run.output = "fig1.csv";
  return c;
}

ExperimentConfig fig2() {
  ExperimentConfig c;
  c.id = "fig2";
  c.preset = "fig2";
  c.problem.family = Family::logistic;
  c.problem.design = {100, 100, 10.0, 3.0 / 100.0, problem_seed, {}};
  c.sampling.kinds = {SamplingKind::uniform};
  c.steps.sources = {StepSource::pl_constant, StepSource::pl_decreasing};
  c.lambda.values = {0.0, 0.5, 1.0};
  c.run.trials = 5;
  c.run.epochs = 10000;
  c.run.record_every_epochs = 10;
  c.run.output = "fig2.csv";
  return c;
}

ExperimentConfig fig3() {
  ExperimentConfig c;
  c.id = "fig3";
  c.preset = "fig3";
  c.problem.family = Family::ridge;
  c.problem.design = {100, 100, 10.0, 3.0 / 100.0, problem_seed, {}};
  c.problem.design.spectrum = {Spectrum::Kind::uniform_random, 1.0, 10.0};
  c.sampling.kinds = {SamplingKind::uniform, SamplingKind::importance};
  c.steps.sources = {StepSource::pl_constant};
  c.lambda.values = {0.0, 0.5, 1.0};
  c.run.trials = 5;
  c.run.epochs = 3000;
  c.run.record_every_epochs = 10;
  c.run.output = "fig3.csv";
  return c;
}

}  // namespace

std::vector<std::string> preset_names() { return {"fig1", "fig2", "fig3"}; }

ExperimentConfig preset(const std::string& name) {
  if (name == "fig1") return fig1();
  if (name == "fig2") return fig2();
  if (name == "fig3") return fig3();
  throw ConfigError("experiment.preset", "unknown preset '" + name + "'");
}

}  // namespace unisam::harness
