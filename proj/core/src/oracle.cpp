#include "exitnas/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "exitnas/errors.hpp"
#include "exitnas/serialization.hpp"

namespace exitnas {

namespace {

double normalized(int value, const std::vector<int>& options) {
  const auto [lo, hi] = std::minmax_element(options.begin(), options.end());
  return *hi > *lo ? static_cast<double>(value - *lo) / static_cast<double>(*hi - *lo) : 0.0;
}

double sigmoid(double x) {
  return 1.0 / (1.0 + std::exp(-x));
}

double branch_capacity(const ExitBranchConfig& branch, const ExitOptions& options,
                       const SyntheticOracleParams& p) {
  const auto block_score = [&](const ExitBlockConfig& b) {
    return p.expansion_weight * normalized(b.expansion_width, options.expansion_options) +
           p.kernel_weight * normalized(b.kernel_size, options.kernel_options) +
           p.interpolation_weight * normalized(b.interpolation_size, options.interpolation_options);
  };
  double score = block_score(branch.block1);
  if (branch.has_second_block()) {
    score += p.second_block_weight + 0.5 * block_score(branch.block2);
  }
  return score;
}

} // namespace

void SyntheticOracleParams::validate() const {
  if (!(accuracy_floor >= 0.0 && accuracy_floor < accuracy_ceiling && accuracy_ceiling <= 1.0)) {
    throw ConfigError("synthetic oracle: need 0 <= accuracy_floor < accuracy_ceiling <= 1");
  }
  if (second_block_weight < 0.0 || expansion_weight < 0.0 || kernel_weight < 0.0 ||
      interpolation_weight < 0.0 || exit_branch_weight < 0.0 || exit_depth_weight < 0.0 ||
      final_depth_weight < 0.0) {
    throw ConfigError("synthetic oracle: capacity weights must be >= 0");
  }
  if (!(correct_margin_shape > 0.0) || wrong_margin_scale < 0.0 || wrong_margin_scale > 1.0 ||
      margin_noise < 0.0) {
    throw ConfigError("synthetic oracle: invalid margin parameters");
  }
}

void to_json(nlohmann::json& j, const SyntheticOracleParams& p) {
  j = nlohmann::json{{"accuracy_floor", p.accuracy_floor},
                     {"accuracy_ceiling", p.accuracy_ceiling},
                     {"exit_bias", p.exit_bias},
                     {"exit_depth_weight", p.exit_depth_weight},
                     {"exit_branch_weight", p.exit_branch_weight},
                     {"exit_resolution_weight", p.exit_resolution_weight},
                     {"final_bias", p.final_bias},
                     {"final_depth_weight", p.final_depth_weight},
                     {"final_resolution_weight", p.final_resolution_weight},
                     {"second_block_weight", p.second_block_weight},
                     {"expansion_weight", p.expansion_weight},
                     {"kernel_weight", p.kernel_weight},
                     {"interpolation_weight", p.interpolation_weight},
                     {"correct_margin_shape", p.correct_margin_shape},
                     {"wrong_margin_scale", p.wrong_margin_scale},
                     {"margin_noise", p.margin_noise},
                     {"noise_seed", p.noise_seed}};
}

void from_json(const nlohmann::json& j, SyntheticOracleParams& p) {
  SyntheticOracleParams d;
  p.accuracy_floor = j.value("accuracy_floor", d.accuracy_floor);
  p.accuracy_ceiling = j.value("accuracy_ceiling", d.accuracy_ceiling);
  p.exit_bias = j.value("exit_bias", d.exit_bias);
  p.exit_depth_weight = j.value("exit_depth_weight", d.exit_depth_weight);
  p.exit_branch_weight = j.value("exit_branch_weight", d.exit_branch_weight);
  p.exit_resolution_weight = j.value("exit_resolution_weight", d.exit_resolution_weight);
  p.final_bias = j.value("final_bias", d.final_bias);
  p.final_depth_weight = j.value("final_depth_weight", d.final_depth_weight);
  p.final_resolution_weight = j.value("final_resolution_weight", d.final_resolution_weight);
  p.second_block_weight = j.value("second_block_weight", d.second_block_weight);
  p.expansion_weight = j.value("expansion_weight", d.expansion_weight);
  p.kernel_weight = j.value("kernel_weight", d.kernel_weight);
  p.interpolation_weight = j.value("interpolation_weight", d.interpolation_weight);
  p.correct_margin_shape = j.value("correct_margin_shape", d.correct_margin_shape);
  p.wrong_margin_scale = j.value("wrong_margin_scale", d.wrong_margin_scale);
  p.margin_noise = j.value("margin_noise", d.margin_noise);
  p.noise_seed = j.value("noise_seed", d.noise_seed);
}

std::array<double, kNumExitPositions + 1> synthetic_exit_accuracies(
    const Genome& g, const SearchSpace& space, const SyntheticOracleParams& params) {
  const auto& bb = space.backbone;
  const int max_depth = bb.max_depth();

  std::array<double, kNumBlocks> block_capacity{};
  for (std::size_t b = 0; b < kNumBlocks; ++b) {
    for (int l = 0; l < g.backbone.block_depths[b]; ++l) {
      const auto slot = static_cast<std::size_t>(l);
      block_capacity[b] += 0.5 + 0.25 * normalized(g.backbone.kernel(b, slot, max_depth),
                                                   bb.kernel_options) +
                           0.25 * normalized(g.backbone.expansion(b, slot, max_depth),
                                             bb.expansion_options);
    }
  }
  const double max_capacity = static_cast<double>(kNumBlocks * static_cast<std::size_t>(max_depth));
  const double resolution = normalized(g.backbone.input_resolution, bb.resolution_options);
  const double span = params.accuracy_ceiling - params.accuracy_floor;

  std::array<double, kNumExitPositions + 1> acc{};
  double depth = 0.0;
  for (std::size_t p = 0; p < kNumExitPositions; ++p) {
    depth += block_capacity[p] / max_capacity;
    const double logit = params.exit_bias + params.exit_depth_weight * depth +
                         params.exit_branch_weight *
                             branch_capacity(g.exits[p], space.exits, params) +
                         params.exit_resolution_weight * resolution;
    acc[p] = params.accuracy_floor + span * sigmoid(logit);
  }
  const double final_logit = params.final_bias + params.final_depth_weight * depth +
                             params.final_resolution_weight * resolution;
  acc[kNumExitPositions] = params.accuracy_floor + span * sigmoid(final_logit);

  // Exits never beat the final classifier, and an enabled exit is at least as
  // accurate as the enabled exits before it. Disabled exits do not take part.
  double floor = 0.0;
  for (std::size_t p = 0; p < kNumExitPositions; ++p) {
    acc[p] = std::min(acc[p], acc[kNumExitPositions]);
    if (g.thresholds.enabled(p)) {
      acc[p] = std::max(acc[p], floor);
      floor = acc[p];
    }
  }
  return acc;
}

EvaluationResult synthetic_evaluate(const Genome& g, const SearchSpace& space,
                                    const SyntheticOracleParams& params, std::size_t n_samples,
                                    std::uint64_t seed) {
  params.validate();
  if (n_samples < 1) {
    throw ContractViolation("synthetic_evaluate: n_samples must be >= 1");
  }
  const auto encoding = encode(g, space);
  const auto accuracy = synthetic_exit_accuracies(g, space, params);

  EvaluationResult result;
  auto& t = result.trace;
  t.exit_positions = g.thresholds.enabled_positions();
  t.n_exits = t.exit_positions.size() + 1;
  t.n_samples = n_samples;
  t.margins.resize(n_samples * t.n_exits);
  t.correct.resize(n_samples * t.n_exits);

  std::vector<double> column_accuracy;
  for (std::size_t p : t.exit_positions) {
    column_accuracy.push_back(accuracy[p]);
  }
  column_accuracy.push_back(accuracy[kNumExitPositions]);

  Rng rng(derive_seed(derive_seed(params.noise_seed, seed), genome_id(encoding)));
  std::size_t final_correct = 0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    // One difficulty per sample keeps correctness nested across exits.
    const double difficulty = uniform_unit(rng);
    for (std::size_t c = 0; c < t.n_exits; ++c) {
      const double a = column_accuracy[c];
      const bool correct = difficulty < a;
      double margin = 0.0;
      if (correct) {
        margin = std::pow(1.0 - difficulty / a, params.correct_margin_shape);
      } else {
        const double v = uniform_unit(rng);
        margin = params.wrong_margin_scale * v * v;
      }
      margin += params.margin_noise * standard_normal(rng);
      t.margins[i * t.n_exits + c] = std::clamp(margin, 0.0, 1.0);
      t.correct[i * t.n_exits + c] = correct ? 1 : 0;
    }
    final_correct += t.correct[i * t.n_exits + t.n_exits - 1];
  }
  result.measured_error =
      static_cast<double>(n_samples - final_correct) / static_cast<double>(n_samples);
  return result;
}

} // namespace exitnas
