#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "exitnas/genome.hpp"

namespace exitnas {

using MacCount = std::int64_t;

enum class LayerKind {
  conv,
  depthwise_conv,
  batchnorm,
  linear,
  maxpool,
  interpolate,
  relu,
  global_avgpool,
  softmax,
};

std::string_view to_string(LayerKind kind) noexcept;
LayerKind layer_kind_from_string(std::string_view name);

/// Counting convention. Backbone layers are counted without batch-norm cost,
/// exit-branch layers with it.
enum class Convention { backbone_mode, exit_mode };

std::string_view to_string(Convention c) noexcept;

struct LayerSpec {
  LayerKind kind = LayerKind::conv;
  int kernel = 1;
  int in_channels = 1;
  int out_channels = 1;
  int out_height = 1;
  int out_width = 1;
  int groups = 1;

  bool operator==(const LayerSpec&) const = default;
};

/// Throws ContractViolation when dims are < 1 or groups does not divide in_channels.
void check_layer(const LayerSpec& l);

/// conv/depthwise: k^2 * (cin/groups) * cout * h * w; linear: cin * cout;
/// batchnorm: c * h * w in exit_mode, 0 in backbone_mode; everything else 0.
MacCount layer_macs(const LayerSpec& l, Convention convention);

MacCount total_macs(std::span<const LayerSpec> layers, Convention convention);

struct DecodedLayer {
  std::string name;
  LayerSpec spec;
  Convention convention = Convention::backbone_mode;
};

/// Full backbone from stem to the final classifier (backbone_mode).
/// `prefix_end[b]` is the index one past the last layer of block b.
struct DecodedBackbone {
  std::vector<DecodedLayer> layers;
  std::array<std::size_t, kNumBlocks> prefix_end{};
  /// Output (channels, spatial size) of every block.
  std::array<int, kNumBlocks> block_channels{};
  std::array<int, kNumBlocks> block_size{};
};

DecodedBackbone decode_backbone(const Genome& g, const SearchSpace& space);

/// Layers of the exit branch attached after block `position` (exit_mode),
/// including its pooling + linear head.
std::vector<DecodedLayer> decode_exit_branch(const Genome& g, const SearchSpace& space,
                                             std::size_t position);

/// Position-independent MAC table of a genome: what every potential exit
/// would cost, regardless of thresholds.
struct CostTable {
  std::array<MacCount, kNumBlocks> backbone_prefix{}; ///< backbone MACs through block b
  MacCount backbone_total = 0;                        ///< through the final classifier
  std::array<MacCount, kNumExitPositions> branch{};   ///< branch + head MACs per position
};

CostTable cost_table(const Genome& g, const SearchSpace& space);

/// MAC profile of the active exits of an architecture. A sample leaving at
/// an exit pays the backbone up to that exit plus every enabled branch at or
/// before it; the final exit pays the whole backbone plus every enabled branch.
struct MacProfile {
  std::vector<std::size_t> exit_positions;     ///< active exits, ascending
  std::vector<MacCount> cumulative_exit_macs;  ///< one per active exit
  std::vector<MacCount> per_branch_macs;       ///< one per active exit
  MacCount final_macs = 0;

  std::size_t num_exits() const noexcept { return cumulative_exit_macs.size() + 1; }

  /// Cost of exit column `c` (the last column is the final classifier).
  MacCount column_cost(std::size_t c) const {
    return c < cumulative_exit_macs.size() ? cumulative_exit_macs[c] : final_macs;
  }

  /// Profile with only the exits where `keep[c]` is true still active.
  MacProfile restricted(const std::vector<bool>& keep) const;

  bool operator==(const MacProfile&) const = default;
};

MacProfile make_profile(const CostTable& table, const ThresholdVector& thresholds);

/// Throws ContractViolation if `g` is invalid.
MacProfile profile(const Genome& g, const SearchSpace& space);

/// Utilization-weighted mean of per-exit costs; `utilization` has one entry
/// per active exit plus the final exit, entries >= 0 summing to 1 (1e-9).
double average_macs(const MacProfile& profile, std::span<const double> utilization);

/// Per-layer audit rows for every backbone layer and every enabled exit branch.
struct MacBreakdownRow {
  std::string section; ///< "backbone" or "exit<k>"
  DecodedLayer layer;
  MacCount macs = 0;
};

std::vector<MacBreakdownRow> macs_breakdown(const Genome& g, const SearchSpace& space);

} // namespace exitnas
