#include "doctest.h"
#include "oracles.hpp"

#include "unisam/harness/bounds.hpp"
#include "unisam/harness/config.hpp"
#include "unisam/harness/csv.hpp"
#include "unisam/harness/experiment.hpp"
#include "unisam/harness/presets.hpp"
#include "unisam/harness/verify.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

using namespace unisam;
using namespace unisam::harness;

namespace {

const char* small_toml = R"(
[experiment]
id = "small"

[problem]
family = "ridge"
n = 12
d = 4
cond = 3.0
lambda_r = 0.1
seed = 5

[sampling]
kind = ["uniform", "importance"]

[steps]
source = ["pl_constant", "pl_decreasing"]

[lambda]
values = [0.0, 1.0]

[run]
trials = 3
epochs = 20
base_seed = 9
record_every = 7
)";

ExperimentConfig small() { return parse_config(small_toml); }

std::string csv_text(const ExperimentResult& r) {
  std::ostringstream os;
  write_csv(r, os);
  return os.str();
}

struct EnvGuard {
  explicit EnvGuard(const char* v) { setenv("UNISAM_WORKERS", v, 1); }
  ~EnvGuard() { unsetenv("UNISAM_WORKERS"); }
};

}  // namespace

TEST_CASE("config parsing") {
  const auto c = small();
  CHECK(c.id == "small");
  CHECK(c.problem.design.n == 12);
  CHECK(c.problem.design.lambda_r == 0.1);
  CHECK(c.sampling.kinds.size() == 2);
  CHECK(c.steps.sources[1] == StepSource::pl_decreasing);
  CHECK(c.lambda.values == std::vector<double>{0.0, 1.0});
  CHECK(c.run.base_seed == 9);
  CHECK(*c.run.record_every == 7);
}

TEST_CASE("unknown keys and bad values are errors") {
  auto field_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("<none>");
  };
  CHECK(field_of("[run]\ntrails = 3\n") == "run.trails");
  CHECK(field_of("[runs]\ntrials = 3\n") == "runs");
  CHECK(field_of("[run]\ntrials = 0\n") == "run.trials");
  CHECK(field_of("[lambda]\nvalues = [0.5, 2.0]\n") == "lambda.values");
  CHECK(field_of("[problem]\ncond = 0.5\n") == "cond");
  CHECK(field_of("[steps]\nsource = \"manual\"\n") == "steps");
  CHECK_THROWS_AS(parse_config("not toml ["), ConfigError);
}

TEST_CASE("overrides win") {
  const auto c = apply_overrides(small(), {"run.trials=5", "lambda.values=0.25,0.75",
                                           "sampling.kind=\"tau_nice\"", "sampling.tau=3"});
  CHECK(c.run.trials == 5);
  CHECK(c.lambda.values == std::vector<double>{0.25, 0.75});
  CHECK(c.sampling.kinds == std::vector<SamplingKind>{SamplingKind::tau_nice});
  CHECK(c.sampling.tau == 3);
  CHECK(c.problem.design.n == 12);
  CHECK_THROWS_AS(apply_overrides(small(), {"run.trails=5"}), ConfigError);
  CHECK_THROWS_AS(apply_overrides(small(), {"trials"}), ConfigError);
}

TEST_CASE("TOML round trip") {
  for (const auto& name : preset_names()) {
    const auto c = preset(name);
    const std::string text = to_toml(c);
    CHECK(to_toml(parse_config(text)) == text);
  }
  CHECK(to_toml(parse_config(to_toml(small()))) == to_toml(small()));
  CHECK_THROWS_AS(preset("fig4"), ConfigError);
}

TEST_CASE("presets plan the expected groups") {
  const auto f1 = plan_experiment(preset("fig1"));
  CHECK(f1.groups.size() == 11);
  for (const auto& g : f1.groups) {
    CHECK(g.scheme.is_deterministic());
    CHECK(g.total_iters == 5000);
    CHECK(g.L == *f1.problem->stats().L_full);
    CHECK(g.er.B == 1.0);
  }
  CHECK(f1.groups.front().experiment_id == "fig1/full_batch/pl_constant");
  CHECK(f1.problem->stats().L.size() == 100);
  CHECK(f1.problem->lambda_r() == 0.0);

  const auto f2 = preset("fig2");
  CHECK(f2.problem.family == Family::logistic);
  CHECK(f2.problem.design.lambda_r == doctest::Approx(0.03));
  CHECK(f2.run.epochs == 10000);
  CHECK(f2.run.trials == 5);
  CHECK(f2.steps.sources.size() == 2);
  CHECK(f2.lambda.values == std::vector<double>{0.0, 0.5, 1.0});

  const auto f3 = plan_experiment(preset("fig3"));
  CHECK(f3.groups.size() == 6);
  CHECK(f3.config.run.epochs == 3000);
  CHECK(f3.config.run.trials == 5);
  CHECK(f3.groups.front().iters_per_epoch == 100);
}

TEST_CASE("heuristic lambda schedules are flagged") {
  auto c = apply_overrides(small(), {"lambda.kind=\"one_minus_inv_t\""});
  const auto e = plan_experiment(c);
  CHECK(e.groups.size() == 4);
  for (const auto& g : e.groups) {
    CHECK(g.experiment_id.find("/one_minus_inv_t") != std::string::npos);
    CHECK(g.provenance.find("(heuristic)") != std::string::npos);
    CHECK(g.plan.lambda_at(0) == 0.0);
  }
}

TEST_CASE("non-convex and manual step sources") {
  auto c = apply_overrides(small(), {"steps.source=\"nonconvex,manual\"", "steps.eps=0.1",
                                     "steps.rho=0.01", "steps.gamma=0.02"});
  const auto e = plan_experiment(c);
  CHECK(e.groups.size() == 8);
  for (const auto& g : e.groups) {
    if (g.source == StepSource::manual) {
      CHECK(g.plan.rho_at(0) == 0.01);
      CHECK(g.plan.gamma_at(0) == 0.02);
    } else {
      REQUIRE(g.nonconvex);
      CHECK(g.plan.rho_at(3) == g.nonconvex->rho);
      CHECK(g.iter_bound->T >= 1);
    }
  }
}

TEST_CASE("CSV round trip is exact") {
  const auto r = run_experiment(small());
  const std::string text = csv_text(r);
  std::istringstream in(text);
  const CsvTable t = read_csv(in);
  CHECK_FALSE(t.comments.empty());

  std::size_t row = 0;
  const auto& groups = r.experiment.groups;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    for (std::size_t k = 0; k < r.records[gi].size(); ++k) {
      for (const auto& e : r.records[gi][k].entries) {
        const CsvRow& c = t.rows.at(row++);
        CHECK(c.experiment_id == groups[gi].experiment_id);
        CHECK(c.preset == "custom");
        CHECK(c.trial == std::to_string(k));
        CHECK(c.iteration == double(e.iteration));
        CHECK(c.epoch == double(e.iteration) / double(groups[gi].iters_per_epoch));
        CHECK(c.loss == e.loss);
        CHECK(c.subopt == e.subopt);
        CHECK(c.grad_norm == e.grad_norm);
        CHECK(c.rho == e.rho);
        CHECK(c.gamma == e.gamma);
        CHECK(c.lambda == e.lambda);
        CHECK(c.zero_grad_events == double(e.zero_grad_events));
      }
    }
    // A mean and a std row per logged iteration follow the trial rows of each group.
    const Aggregate a = aggregate(r.records[gi]);
    for (std::size_t i = 0; i < a.iterations.size(); ++i) {
      for (const std::string kind : {"mean", "std"}) {
        const CsvRow& c = t.rows.at(row++);
        CHECK(c.trial == kind);
        CHECK(c.iteration == double(a.iterations[i]));
      }
      CHECK(t.rows[row - 2].subopt == a.subopt_mean[i]);
      CHECK(t.rows[row - 1].subopt == a.subopt_std[i]);
    }
  }
  CHECK(row == t.rows.size());
}

TEST_CASE("aggregate rows match a recomputation") {
  const auto r = run_experiment(small());
  std::istringstream in(csv_text(r));
  const CsvTable t = read_csv(in);
  for (const auto& g : r.experiment.groups) {
    std::map<double, std::vector<double>> by_iter;
    std::map<double, double> mean, sd;
    for (const auto& row : t.rows) {
      if (row.experiment_id != g.experiment_id || row.lambda != g.lambda.value) continue;
      if (row.trial == "mean") mean[row.iteration] = row.subopt;
      else if (row.trial == "std") sd[row.iteration] = row.subopt;
      else by_iter[row.iteration].push_back(row.subopt);
    }
    REQUIRE(mean.size() == by_iter.size());
    for (const auto& [it, vals] : by_iter) {
      double m = 0.0;
      for (double v : vals) m += v;
      m /= double(vals.size());
      double var = 0.0;
      for (double v : vals) var += (v - m) * (v - m);
      const double s = std::sqrt(var / double(vals.size()));
      CHECK(std::abs(mean[it] - m) <= 1e-12 * std::max(1.0, std::abs(m)));
      CHECK(std::abs(sd[it] - s) <= 1e-12 * std::max(1.0, s));
    }
  }
}

TEST_CASE("worker count does not change the output") {
  std::string one, two;
  {
    EnvGuard g("1");
    CHECK(worker_count() == 1);
    one = csv_text(run_experiment(small()));
  }
  {
    EnvGuard g("3");
    CHECK(worker_count() == 3);
    two = csv_text(run_experiment(small()));
  }
  CHECK(one == two);
}

TEST_CASE("trial streams are derived from the base seed") {
  const auto r = run_experiment(small());
  const auto& g = r.experiment.groups.front();
  OptimizerConfig oc{g.plan, g.scheme, g.total_iters, Vector::Zero(4), std::nullopt, g.record_every};
  RngStream s = RngStream::derive(9, 2);
  const RunRecord rec = run(*r.experiment.problem, oc, s);
  CHECK(rec.x_final == r.records[0][2].x_final);
}

TEST_CASE("unwritable CSV path") {
  const auto r = run_experiment(apply_overrides(small(), {"run.trials=1", "run.epochs=1"}));
  CHECK_THROWS_AS(write_csv_file(r, "/nonexistent-dir/out.csv"), ConfigError);
}

TEST_CASE("csv header is validated") {
  std::istringstream in("a,b,c\n1,2,3\n");
  CHECK_THROWS(read_csv(in));
}

TEST_CASE("verify passes and halved constants fail") {
  auto c = apply_overrides(small(), {"sampling.kind=\"uniform\"", "steps.source=\"pl_constant\"",
                                     "lambda.values=0.5", "verify.points=30", "verify.trials=20"});
  const auto ok = verify(c);
  CHECK(ok.passed);
  std::vector<std::string> names;
  for (const auto& check : ok.report["checks"]) names.push_back(check["name"]);
  CHECK(std::count(names.begin(), names.end(), "expected_residual") == 1);
  CHECK(std::count(names.begin(), names.end(), "pl_envelope") == 1);
  CHECK(std::count(names.begin(), names.end(), "lemma_perturbed_second_moment") == 1);
  CHECK(std::count(names.begin(), names.end(), "lemma_perturbed_inner_product") == 1);

  // Square orthogonal A without regularization makes the uniform constants tight.
  const auto bad = verify(apply_overrides(
      c, {"verify.er_scale=0.5", "problem.d=12", "problem.cond=1.0", "problem.lambda_r=0.0"}));
  CHECK_FALSE(bad.passed);
  bool er_failed = false;
  for (const auto& check : bad.report["checks"])
    if (check["name"] == "expected_residual" && !check["passed"].get<bool>()) {
      er_failed = true;
      CHECK(check.contains("worst_point"));
    }
  CHECK(er_failed);
}

TEST_CASE("full-batch verify has zero slack") {
  auto c = apply_overrides(small(), {"sampling.kind=\"full_batch\"", "steps.source=\"pl_constant\"",
                                     "lambda.values=0.5", "verify.points=20"});
  const auto v = verify(c);
  CHECK(v.passed);
  for (const auto& check : v.report["checks"])
    if (check["name"] == "expected_residual")
      CHECK(std::abs(check["worst_slack"].get<double>()) <= 1e-12);
}

TEST_CASE("lemma checks on a ridge problem") {
  RidgeSpec spec;
  spec.n = 15;
  spec.d = 5;
  spec.cond = 4.0;
  spec.lambda_r = 0.02;
  spec.seed = 3;
  const auto p = gen_ridge(spec);
  RngStream s(1);
  for (const auto& scheme : {SamplingScheme::uniform(15),
                             SamplingScheme::single_element(importance_probs(p.stats())),
                             SamplingScheme::full_batch(15)}) {
    const auto a4 = check_lemma_a4(p, scheme, s);
    const auto a5 = check_lemma_a5(p, scheme, s);
    CHECK(a4.triples == 100);
    CHECK(a4.violations == 0);
    CHECK(a5.violations == 0);
  }
  CHECK_THROWS_AS(check_lemma_a4(p, SamplingScheme::tau_nice(15, 3), s), ConfigError);
}

TEST_CASE("bounds report") {
  BoundsInput in;
  in.er = {0, 1, 0, "manual", std::nullopt};
  in.L = 1.0;
  in.mu = 0.5;
  in.lambda = 1.0;
  in.eps = 0.1;
  in.delta0 = 1.0;
  in.T = 100;
  const auto j = bounds_report(in);
  CHECK(j["pl_constant"]["rho_star"].get<double>() == 1.0);
  CHECK(j["pl_constant"]["N"].get<double>() == doctest::Approx(1.25));
  CHECK(j["iteration_bound"]["T"].get<std::size_t>() == 9600);
  CHECK(j["nonconvex"]["rho_terms"][1] == "inf");

  const auto g = bounds_report(preset("fig1"));
  CHECK(g["groups"].size() == 11);
  CHECK(g["groups"][0].contains("pl_constant"));
}
