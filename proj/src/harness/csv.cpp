#include "unisam/harness/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace unisam::harness {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : "none"; }

void write_row(std::ostream& out, const std::string& id, const std::string& preset,
               const std::string& trial, double epoch, std::size_t iteration, double lambda,
               double rho, double gamma, double loss, double subopt, double grad_norm,
               double zero_grad) {
  out << id << ',' << preset << ',' << trial << ',' << num(epoch) << ',' << iteration << ','
      << num(lambda) << ',' << num(rho) << ',' << num(gamma) << ',' << num(loss) << ','
      << num(subopt) << ',' << num(grad_norm) << ',' << num(zero_grad) << '\n';
}

}  // namespace

void write_csv(const ExperimentResult& result, std::ostream& out) {
  const Experiment& e = result.experiment;
  const ExperimentConfig& cfg = e.config;
  const ProblemStats& s = e.problem->stats();

  out << "# unisam experiment " << cfg.id << " preset " << cfg.preset << '\n';
  out << "# config begin\n";
  std::istringstream toml(to_toml(cfg));
  for (std::string line; std::getline(toml, line);) out << "#   " << line << '\n';
  out << "# config end\n";
  out << "# problem family=" << to_string(e.problem->family()) << " n=" << e.problem->n()
      << " d=" << e.problem->d() << " L_max=" << num(s.L_max) << " L_full=" << opt(s.L_full)
      << " mu=" << opt(s.mu) << " f_star=" << opt(s.f_star) << " sigma_star=" << opt(s.sigma_star)
      << '\n';
  for (const Group& g : e.groups) {
    out << "# group " << g.experiment_id << " lambda=" << g.lambda.label()
        << " sampling=" << g.scheme.label() << " iters_per_epoch=" << g.iters_per_epoch
        << " iterations=" << g.total_iters << " delta0=" << opt(g.delta0) << '\n';
    out << "#   steps " << g.provenance << " A=" << num(g.er.A) << " B=" << num(g.er.B)
        << " C=" << num(g.er.C);
    if (g.pl)
      out << " rho_star=" << num(g.pl->rho_star) << " gamma_star=" << num(g.pl->gamma_star)
          << " rho=" << num(g.pl->rho) << " gamma=" << num(g.pl->gamma) << " N=" << num(g.pl->N)
          << " rate=" << num(g.pl->rate);
    if (g.nonconvex)
      out << " rho_bar=" << num(g.nonconvex->rho_bar) << " gamma_bar=" << num(g.nonconvex->gamma_bar)
          << " rho=" << num(g.nonconvex->rho) << " gamma=" << num(g.nonconvex->gamma);
    if (g.iter_bound) out << " T_bound=" << g.iter_bound->T;
    out << '\n';
  }

  for (std::size_t c = 0; c < csv_columns.size(); ++c) out << (c ? "," : "") << csv_columns[c];
  out << '\n';

  for (std::size_t gi = 0; gi < e.groups.size(); ++gi) {
    const Group& g = e.groups[gi];
    const double ipe = static_cast<double>(g.iters_per_epoch);
    const auto& trials = result.records[gi];
    for (std::size_t k = 0; k < trials.size(); ++k)
      for (const RunEntry& r : trials[k].entries)
        write_row(out, g.experiment_id, cfg.preset, std::to_string(k),
                  static_cast<double>(r.iteration) / ipe, r.iteration, r.lambda, r.rho, r.gamma,
                  r.loss, r.subopt, r.grad_norm, static_cast<double>(r.zero_grad_events));
    const Aggregate a = aggregate(trials);
    for (std::size_t i = 0; i < a.iterations.size(); ++i) {
      const double epoch = static_cast<double>(a.iterations[i]) / ipe;
      write_row(out, g.experiment_id, cfg.preset, "mean", epoch, a.iterations[i], a.lambda[i],
                a.rho_mean[i], a.gamma_mean[i], a.loss_mean[i], a.subopt_mean[i],
                a.grad_norm_mean[i], a.zero_grad_mean[i]);
      write_row(out, g.experiment_id, cfg.preset, "std", epoch, a.iterations[i], a.lambda[i],
                a.rho_std[i], a.gamma_std[i], a.loss_std[i], a.subopt_std[i], a.grad_norm_std[i],
                a.zero_grad_std[i]);
    }
  }
}

void write_csv_file(const ExperimentResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("run.output", "cannot write '" + path + "'");
  write_csv(result, out);
  if (!out) throw ConfigError("run.output", "write to '" + path + "' failed");
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  bool header_seen = false;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      t.comments.push_back(line.substr(1));
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != csv_columns.size())
      throw std::runtime_error("csv line " + std::to_string(line_no) + ": expected " +
                               std::to_string(csv_columns.size()) + " cells");
    if (!header_seen) {
      for (std::size_t c = 0; c < cells.size(); ++c)
        if (cells[c] != csv_columns[c])
          throw std::runtime_error("csv header: column " + std::to_string(c) + " is '" +
                                   cells[c] + "', expected '" + csv_columns[c] + "'");
      header_seen = true;
      continue;
    }
    auto d = [&](std::size_t c) {
      char* end = nullptr;
      const double v = std::strtod(cells[c].c_str(), &end);
      if (end == cells[c].c_str() || *end != '\0')
        throw std::runtime_error("csv line " + std::to_string(line_no) + ": bad number '" +
                                 cells[c] + "'");
      return v;
    };
    t.rows.push_back({cells[0], cells[1], cells[2], d(3), d(4), d(5), d(6), d(7), d(8), d(9),
                      d(10), d(11)});
  }
  return t;
}

}  // namespace unisam::harness
