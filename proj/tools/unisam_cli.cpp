// unisam: generate problems, run experiments and presets, verify invariants,
// print step-size bounds.
//
// Exit codes: 0 success, 1 configuration error, 2 verification failure.

#include "unisam/harness/bounds.hpp"
#include "unisam/harness/config.hpp"
#include "unisam/harness/csv.hpp"
#include "unisam/harness/experiment.hpp"
#include "unisam/harness/presets.hpp"
#include "unisam/harness/verify.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <fstream>
#include <iostream>

using namespace unisam;
using namespace unisam::harness;

namespace {

constexpr int exit_config = 1;
constexpr int exit_verification = 2;

struct Source {
  std::string config_path;
  std::string preset_name;
  std::vector<std::string> overrides;
  std::string output;
};

void add_source_options(CLI::App* cmd, Source& s, bool with_preset = true) {
  cmd->add_option("-c,--config", s.config_path, "TOML experiment config");
  if (with_preset)
    cmd->add_option("-p,--preset", s.preset_name, "start from a preset (fig1, fig2, fig3)");
  cmd->add_option("-s,--set", s.overrides, "override a config value, e.g. run.trials=3")
      ->take_all();
  cmd->add_option("-o,--output", s.output, "output path");
}

ExperimentConfig resolve(const Source& s) {
  if (!s.config_path.empty() && !s.preset_name.empty())
    throw ConfigError("", "give either --config or --preset, not both");
  ExperimentConfig base;
  if (!s.preset_name.empty()) base = preset(s.preset_name);
  else if (!s.config_path.empty()) base = load_config(s.config_path);
  std::vector<std::string> overrides = s.overrides;
  if (!s.output.empty()) overrides.push_back("run.output=\"" + s.output + "\"");
  return apply_overrides(base, overrides);
}

void emit_json(const nlohmann::json& doc, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << doc.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("output", "cannot write '" + path + "'");
  out << doc.dump(2) << '\n';
}

int run_and_write(const ExperimentConfig& cfg) {
  const ExperimentResult r = run_experiment(cfg);
  if (cfg.run.output.empty() || cfg.run.output == "-") {
    write_csv(r, std::cout);
  } else {
    write_csv_file(r, cfg.run.output);
    std::size_t diverged = 0;
    for (const auto& g : r.records)
      for (const auto& rec : g) diverged += rec.diverged;
    std::cerr << "wrote " << cfg.run.output << " (" << r.experiment.groups.size() << " groups x "
              << cfg.run.trials << " trials";
    if (diverged) std::cerr << ", " << diverged << " diverged";
    std::cerr << ")\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unified SAM experiments on synthetic finite-sum problems"};
  app.require_subcommand(1);

  Source gen_src, run_src, verify_src, bounds_src;
  std::map<std::string, Source> fig_src;

  auto* gen = app.add_subcommand("gen", "write the problem of a config as JSON");
  add_source_options(gen, gen_src);

  auto* run_cmd = app.add_subcommand("run", "run an experiment and write its CSV");
  add_source_options(run_cmd, run_src);

  std::vector<CLI::App*> figs;
  for (const auto& name : preset_names()) {
    auto* f = app.add_subcommand(name, "run the " + name + " preset");
    add_source_options(f, fig_src[name], false);
    figs.push_back(f);
  }

  auto* verify_cmd = app.add_subcommand("verify", "check ER, lemma and envelope invariants");
  add_source_options(verify_cmd, verify_src);

  auto* bounds = app.add_subcommand("bounds", "print rho*, gamma*, N and the non-convex bounds");
  add_source_options(bounds, bounds_src);
  BoundsInput direct;
  double A = 0, B = 0, C = 0;
  std::optional<double> mu, eps, delta0;
  std::optional<std::size_t> T;
  auto* a_opt = bounds->add_option("--A", A, "ER constant A");
  bounds->add_option("--B", B, "ER constant B");
  bounds->add_option("--C", C, "ER constant C");
  bounds->add_option("--L", direct.L, "smoothness");
  bounds->add_option("--mu", mu, "PL constant");
  bounds->add_option("--lambda", direct.lambda, "lambda in [0, 1]");
  bounds->add_option("--rho-fraction", direct.rho_fraction, "operating rho / rho*");
  bounds->add_option("--eps", eps, "target gradient norm");
  bounds->add_option("--delta0", delta0, "f(x0) - f_inf");
  bounds->add_option("--T", T, "iteration budget for the non-convex steps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : exit_config;
  }

  try {
    if (gen->parsed()) {
      const ExperimentConfig cfg = resolve(gen_src);
      const auto problem = build_problem(cfg.problem);
      emit_json(problem_to_json(*problem), gen_src.output);
      return 0;
    }
    if (run_cmd->parsed()) return run_and_write(resolve(run_src));
    for (auto* f : figs) {
      if (!f->parsed()) continue;
      Source s = fig_src[f->get_name()];
      s.preset_name = f->get_name();
      return run_and_write(resolve(s));
    }
    if (verify_cmd->parsed()) {
      const ExperimentConfig cfg = resolve(verify_src);
      const VerifyOutcome v = verify(cfg);
      // run.output is the CSV path; the report goes to stdout unless -o was given.
      emit_json(v.report, verify_src.output);
      return v.passed ? 0 : exit_verification;
    }
    if (bounds->parsed()) {
      if (!bounds_src.config_path.empty() || !bounds_src.preset_name.empty()) {
        emit_json(bounds_report(resolve(bounds_src)), bounds_src.output);
      } else {
        if (!*a_opt && B == 0 && C == 0)
          std::cerr << "note: no ER constants given, using A = B = C = 0\n";
        direct.er = {A, B, C, "manual", std::nullopt};
        direct.mu = mu;
        direct.eps = eps;
        direct.delta0 = delta0;
        direct.T = T;
        emit_json(bounds_report(direct), bounds_src.output);
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const MetadataMissingError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_config;
  }
  return 0;
}
