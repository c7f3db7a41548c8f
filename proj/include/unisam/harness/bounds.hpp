#pragma once

#include "unisam/harness/config.hpp"
#include "unisam/sampling.hpp"

#include "json.hpp"

#include <optional>

namespace unisam::harness {

struct BoundsInput {
  ERConstants er;
  double L = 1.0;
  std::optional<double> mu;
  double lambda = 0.0;
  double rho_fraction = 0.5;
  std::optional<double> eps;
  std::optional<double> delta0;
  std::optional<std::size_t> T;
};

/// rho*, gamma*, N and the rate when mu is given; rho_bar, gamma_bar when eps
/// and T are given; the iteration bound when eps and delta0 are given.
nlohmann::json bounds_report(const BoundsInput& in);

/// Same, for each group of a resolved experiment.
nlohmann::json bounds_report(const ExperimentConfig& config);

}  // namespace unisam::harness
