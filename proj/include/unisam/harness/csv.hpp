#pragma once

#include "unisam/harness/experiment.hpp"

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace unisam::harness {

inline constexpr std::array<const char*, 12> csv_columns{
    "experiment_id", "preset", "trial", "epoch",    "iteration", "lambda",
    "rho",           "gamma",  "loss",  "subopt",   "grad_norm", "zero_grad_events"};

/// One parsed row. `trial` is a trial index, "mean" or "std".
struct CsvRow {
  std::string experiment_id;
  std::string preset;
  std::string trial;
  double epoch = 0.0;
  double iteration = 0.0;
  double lambda = 0.0;
  double rho = 0.0;
  double gamma = 0.0;
  double loss = 0.0;
  double subopt = 0.0;
  double grad_norm = 0.0;
  double zero_grad_events = 0.0;
};

struct CsvTable {
  std::vector<std::string> comments;  ///< header lines without the leading '#'
  std::vector<CsvRow> rows;
};

/// Commented header (config echo, per-group provenance and constants), then
/// trial rows in (group, trial) order, each group followed by its mean and
/// std rows. Doubles are written with 17 significant digits.
void write_csv(const ExperimentResult& result, std::ostream& out);
/// Writes to the path; ConfigError if it cannot be opened.
void write_csv_file(const ExperimentResult& result, const std::string& path);

CsvTable read_csv(std::istream& in);

}  // namespace unisam::harness
