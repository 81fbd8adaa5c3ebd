#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace exitnas {

/// Backbone blocks; one potential exit branch follows each block.
inline constexpr std::size_t kNumBlocks = 5;
inline constexpr std::size_t kNumExitPositions = kNumBlocks;

/// Option lists and fixed widths of the inverted-bottleneck backbone.
struct BackboneOptions {
  std::vector<int> depth_options{2, 3, 4};
  std::vector<int> kernel_options{3, 5, 7};
  std::vector<int> expansion_options{3, 4, 6};
  std::vector<int> resolution_options{24, 28, 32};

  int stem_channels = 16;
  std::array<int, kNumBlocks> block_widths{16, 24, 40, 64, 96};
  int head_channels = 256;

  /// Layer slots per block (the largest depth option).
  int max_depth() const;

  bool operator==(const BackboneOptions&) const = default;
};

/// Option lists of one exit-branch block. The second block additionally
/// admits interpolation size 0, meaning "disabled".
struct ExitOptions {
  std::vector<int> interpolation_options{8, 10, 12};
  std::vector<int> kernel_options{3, 5};
  std::vector<int> expansion_options{1, 2};
  /// Exit conv output channels = base_channels * expansion_width.
  int base_channels = 8;

  bool operator==(const ExitOptions&) const = default;
};

struct SearchSpace {
  BackboneOptions backbone;
  ExitOptions exits;
  /// Threshold alphabet, sorted ascending, must contain 1.0.
  std::vector<double> threshold_grid = default_threshold_grid();
  int num_classes = 10;
  int input_channels = 3;

  /// Throws ConfigError naming the first unusable field.
  void validate() const;

  /// {0.0, 0.1, ..., 0.9, 1.0}
  static std::vector<double> default_threshold_grid();

  bool operator==(const SearchSpace&) const = default;
};

} // namespace exitnas
