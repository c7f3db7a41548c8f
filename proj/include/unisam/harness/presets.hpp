#pragma once

#include "unisam/harness/config.hpp"

#include <string>
#include <vector>

namespace unisam::harness {

/// The three synthetic experiments: "fig1", "fig2", "fig3".
/// Throws ConfigError for any other name.
ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace unisam::harness
