#include "exitnas/search_space.hpp"

#include <algorithm>
#include <string>

#include "exitnas/errors.hpp"

namespace exitnas {

namespace {

void require_options(const std::vector<int>& options, const char* name, int min_value) {
  if (options.empty()) {
    throw ConfigError(std::string(name) + ": option list is empty");
  }
  for (int v : options) {
    if (v < min_value) {
      throw ConfigError(std::string(name) + ": option " + std::to_string(v) + " is below " +
                        std::to_string(min_value));
    }
  }
  auto sorted = options;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ConfigError(std::string(name) + ": duplicate option");
  }
}

} // namespace

int BackboneOptions::max_depth() const {
  if (depth_options.empty()) {
    return 0;
  }
  return *std::max_element(depth_options.begin(), depth_options.end());
}

std::vector<double> SearchSpace::default_threshold_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) {
    grid.push_back(i / 10.0);
  }
  return grid;
}

void SearchSpace::validate() const {
  require_options(backbone.depth_options, "backbone.depth_options", 1);
  require_options(backbone.kernel_options, "backbone.kernel_options", 1);
  require_options(backbone.expansion_options, "backbone.expansion_options", 1);
  require_options(backbone.resolution_options, "backbone.resolution_options", 1);
  require_options(exits.interpolation_options, "exits.interpolation_options", 1);
  require_options(exits.kernel_options, "exits.kernel_options", 1);
  require_options(exits.expansion_options, "exits.expansion_options", 1);

  if (backbone.stem_channels < 1 || backbone.head_channels < 1) {
    throw ConfigError("backbone: stem_channels and head_channels must be >= 1");
  }
  for (int w : backbone.block_widths) {
    if (w < 1) {
      throw ConfigError("backbone.block_widths: widths must be >= 1");
    }
  }
  if (exits.base_channels < 1) {
    throw ConfigError("exits.base_channels must be >= 1");
  }
  if (num_classes < 2) {
    throw ConfigError("num_classes must be >= 2");
  }
  if (input_channels < 1) {
    throw ConfigError("input_channels must be >= 1");
  }

  if (threshold_grid.empty()) {
    throw ConfigError("threshold_grid: empty");
  }
  for (std::size_t i = 0; i < threshold_grid.size(); ++i) {
    const double t = threshold_grid[i];
    if (!(t >= 0.0 && t <= 1.0)) {
      throw ConfigError("threshold_grid: value outside [0, 1]");
    }
    if (i > 0 && !(threshold_grid[i - 1] < t)) {
      throw ConfigError("threshold_grid: must be strictly increasing");
    }
  }
  if (threshold_grid.back() != 1.0) {
    throw ConfigError("threshold_grid: must contain 1.0 (the disabled-exit value)");
  }
}

} // namespace exitnas
