#include "exitnas/macmodel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "exitnas/errors.hpp"

namespace exitnas {

namespace {

constexpr std::array<std::string_view, 9> kKindNames{
    "conv", "depthwise_conv", "batchnorm", "linear", "maxpool",
    "interpolate", "relu", "global_avgpool", "softmax"};

int same_padding_out(int in, int stride) {
  return (in + stride - 1) / stride;
}

class LayerWriter {
public:
  LayerWriter(std::vector<DecodedLayer>& out, Convention convention)
      : out_(out), convention_(convention) {}

  void add(std::string name, LayerKind kind, int kernel, int cin, int cout, int size,
           int groups = 1) {
    out_.push_back({std::move(name), LayerSpec{kind, kernel, cin, cout, size, size, groups},
                    convention_});
  }

  void conv_bn_relu(const std::string& prefix, int kernel, int cin, int cout, int size,
                    int groups, bool relu) {
    add(prefix + ".conv", groups == 1 ? LayerKind::conv : LayerKind::depthwise_conv, kernel, cin,
        cout, size, groups);
    add(prefix + ".bn", LayerKind::batchnorm, 1, cout, cout, size);
    if (relu) {
      add(prefix + ".relu", LayerKind::relu, 1, cout, cout, size);
    }
  }

private:
  std::vector<DecodedLayer>& out_;
  Convention convention_;
};

} // namespace

std::string_view to_string(LayerKind kind) noexcept {
  return kKindNames[static_cast<std::size_t>(kind)];
}

LayerKind layer_kind_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) {
      return static_cast<LayerKind>(i);
    }
  }
  throw ContractViolation("unknown layer kind: " + std::string(name));
}

std::string_view to_string(Convention c) noexcept {
  return c == Convention::backbone_mode ? "backbone_mode" : "exit_mode";
}

void check_layer(const LayerSpec& l) {
  if (l.kernel < 1 || l.in_channels < 1 || l.out_channels < 1 || l.out_height < 1 ||
      l.out_width < 1 || l.groups < 1) {
    throw ContractViolation("layer dims must be >= 1");
  }
  if (l.in_channels % l.groups != 0) {
    throw ContractViolation("groups must divide in_channels");
  }
}

MacCount layer_macs(const LayerSpec& l, Convention convention) {
  check_layer(l);
  const MacCount spatial = MacCount{l.out_height} * l.out_width;
  switch (l.kind) {
  case LayerKind::conv:
  case LayerKind::depthwise_conv:
    return MacCount{l.kernel} * l.kernel * (l.in_channels / l.groups) * l.out_channels * spatial;
  case LayerKind::linear:
    return MacCount{l.in_channels} * l.out_channels;
  case LayerKind::batchnorm:
    return convention == Convention::exit_mode ? MacCount{l.out_channels} * spatial : 0;
  case LayerKind::maxpool:
  case LayerKind::interpolate:
  case LayerKind::relu:
  case LayerKind::global_avgpool:
  case LayerKind::softmax:
    return 0;
  }
  return 0;
}

MacCount total_macs(std::span<const LayerSpec> layers, Convention convention) {
  MacCount sum = 0;
  for (const auto& l : layers) {
    sum += layer_macs(l, convention);
  }
  return sum;
}

DecodedBackbone decode_backbone(const Genome& g, const SearchSpace& space) {
  const auto& bb = space.backbone;
  const int max_depth = bb.max_depth();
  DecodedBackbone out;
  LayerWriter w(out.layers, Convention::backbone_mode);

  int size = same_padding_out(g.backbone.input_resolution, 2);
  int channels = bb.stem_channels;
  w.conv_bn_relu("stem", 3, space.input_channels, channels, size, 1, true);

  for (std::size_t b = 0; b < kNumBlocks; ++b) {
    const int width = bb.block_widths[b];
    for (int l = 0; l < g.backbone.block_depths[b]; ++l) {
      const int stride = (l == 0 && b > 0) ? 2 : 1;
      const int kernel = g.backbone.kernel(b, static_cast<std::size_t>(l), max_depth);
      const int mid = channels * g.backbone.expansion(b, static_cast<std::size_t>(l), max_depth);
      const int out_size = same_padding_out(size, stride);
      const std::string prefix = "block" + std::to_string(b + 1) + ".layer" + std::to_string(l + 1);
      w.conv_bn_relu(prefix + ".expand", 1, channels, mid, size, 1, true);
      w.conv_bn_relu(prefix + ".depthwise", kernel, mid, mid, out_size, mid, true);
      w.conv_bn_relu(prefix + ".project", 1, mid, width, out_size, 1, false);
      channels = width;
      size = out_size;
    }
    out.prefix_end[b] = out.layers.size();
    out.block_channels[b] = channels;
    out.block_size[b] = size;
  }

  w.conv_bn_relu("head.expand", 1, channels, bb.head_channels, size, 1, true);
  w.add("head.pool", LayerKind::global_avgpool, 1, bb.head_channels, bb.head_channels, 1);
  w.add("head.classifier", LayerKind::linear, 1, bb.head_channels, space.num_classes, 1);
  return out;
}

std::vector<DecodedLayer> decode_exit_branch(const Genome& g, const SearchSpace& space,
                                             std::size_t position) {
  if (position >= kNumExitPositions) {
    throw ContractViolation("exit position out of range");
  }
  const auto backbone = decode_backbone(g, space);
  int channels = backbone.block_channels[position];

  std::vector<DecodedLayer> layers;
  LayerWriter w(layers, Convention::exit_mode);
  const std::string exit_name = "exit" + std::to_string(position + 1);
  const auto& branch = g.exits[position];

  int block_index = 0;
  for (const auto* block : {&branch.block1, &branch.block2}) {
    ++block_index;
    if (!block->enabled()) {
      continue;
    }
    const std::string prefix = exit_name + ".block" + std::to_string(block_index);
    int size = block->interpolation_size;
    const int cout = space.exits.base_channels * block->expansion_width;
    w.add(prefix + ".interpolate", LayerKind::interpolate, 1, channels, channels, size);
    w.conv_bn_relu(prefix, block->kernel_size, channels, cout, size, 1, true);
    if (block->maxpool_enabled) {
      size = std::max(1, size / 2);
      w.add(prefix + ".maxpool", LayerKind::maxpool, 2, cout, cout, size);
    }
    channels = cout;
  }
  w.add(exit_name + ".head.pool", LayerKind::global_avgpool, 1, channels, channels, 1);
  w.add(exit_name + ".head.classifier", LayerKind::linear, 1, channels, space.num_classes, 1);
  return layers;
}

CostTable cost_table(const Genome& g, const SearchSpace& space) {
  if (auto violations = validate(g, space); !violations.empty()) {
    throw ContractViolation("profile: invalid genome: " + violations.front());
  }
  const auto backbone = decode_backbone(g, space);
  CostTable table;
  MacCount running = 0;
  std::size_t next = 0;
  for (std::size_t b = 0; b < kNumBlocks; ++b) {
    for (; next < backbone.prefix_end[b]; ++next) {
      running += layer_macs(backbone.layers[next].spec, Convention::backbone_mode);
    }
    table.backbone_prefix[b] = running;
  }
  for (; next < backbone.layers.size(); ++next) {
    running += layer_macs(backbone.layers[next].spec, Convention::backbone_mode);
  }
  table.backbone_total = running;

  for (std::size_t p = 0; p < kNumExitPositions; ++p) {
    MacCount branch = 0;
    for (const auto& layer : decode_exit_branch(g, space, p)) {
      branch += layer_macs(layer.spec, Convention::exit_mode);
    }
    table.branch[p] = branch;
  }
  return table;
}

MacProfile make_profile(const CostTable& table, const ThresholdVector& thresholds) {
  MacProfile profile;
  MacCount branches = 0;
  for (std::size_t p = 0; p < kNumExitPositions; ++p) {
    if (!thresholds.enabled(p)) {
      continue;
    }
    branches += table.branch[p];
    profile.exit_positions.push_back(p);
    profile.per_branch_macs.push_back(table.branch[p]);
    profile.cumulative_exit_macs.push_back(table.backbone_prefix[p] + branches);
  }
  profile.final_macs = table.backbone_total + branches;
  return profile;
}

MacProfile profile(const Genome& g, const SearchSpace& space) {
  return make_profile(cost_table(g, space), g.thresholds);
}

MacProfile MacProfile::restricted(const std::vector<bool>& keep) const {
  if (keep.size() != cumulative_exit_macs.size()) {
    throw ContractViolation("restricted: mask size does not match the number of active exits");
  }
  MacProfile out;
  MacCount dropped = 0;
  for (std::size_t c = 0; c < keep.size(); ++c) {
    if (!keep[c]) {
      dropped += per_branch_macs[c];
      continue;
    }
    out.exit_positions.push_back(exit_positions[c]);
    out.per_branch_macs.push_back(per_branch_macs[c]);
    out.cumulative_exit_macs.push_back(cumulative_exit_macs[c] - dropped);
  }
  out.final_macs = final_macs - dropped;
  return out;
}

double average_macs(const MacProfile& profile, std::span<const double> utilization) {
  if (utilization.size() != profile.num_exits()) {
    throw ContractViolation("average_macs: utilization needs one entry per active exit plus final");
  }
  double sum = 0.0;
  for (double u : utilization) {
    if (!(u >= 0.0)) {
      throw ContractViolation("average_macs: negative utilization");
    }
    sum += u;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ContractViolation("average_macs: utilization does not sum to 1");
  }
  double total = 0.0;
  for (std::size_t c = 0; c < utilization.size(); ++c) {
    total += utilization[c] * static_cast<double>(profile.column_cost(c));
  }
  return total;
}

std::vector<MacBreakdownRow> macs_breakdown(const Genome& g, const SearchSpace& space) {
  if (auto violations = validate(g, space); !violations.empty()) {
    throw ContractViolation("macs_breakdown: invalid genome: " + violations.front());
  }
  std::vector<MacBreakdownRow> rows;
  for (auto& layer : decode_backbone(g, space).layers) {
    const MacCount macs = layer_macs(layer.spec, layer.convention);
    rows.push_back({"backbone", std::move(layer), macs});
  }
  for (std::size_t p : g.thresholds.enabled_positions()) {
    for (auto& layer : decode_exit_branch(g, space, p)) {
      const MacCount macs = layer_macs(layer.spec, layer.convention);
      rows.push_back({"exit" + std::to_string(p + 1), std::move(layer), macs});
    }
  }
  return rows;
}

} // namespace exitnas
