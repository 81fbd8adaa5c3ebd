#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "exitnas/rng.hpp"
#include "exitnas/search_space.hpp"

namespace exitnas {

/// Backbone genes. Kernel and expansion genes are stored block-major with
/// `max_depth` slots per block; slots at or beyond `block_depths[b]` are
/// inert but always hold valid option values.
struct BackboneGenes {
  std::array<int, kNumBlocks> block_depths{};
  std::vector<int> kernel_sizes;
  std::vector<int> expansion_rates;
  int input_resolution = 0;

  int kernel(std::size_t block, std::size_t slot, int max_depth) const {
    return kernel_sizes[block * static_cast<std::size_t>(max_depth) + slot];
  }
  int expansion(std::size_t block, std::size_t slot, int max_depth) const {
    return expansion_rates[block * static_cast<std::size_t>(max_depth) + slot];
  }

  bool operator==(const BackboneGenes&) const = default;
};

/// One exit-branch block: interpolate -> conv -> batch-norm -> ReLU -> [2x2/2 max-pool].
struct ExitBlockConfig {
  int interpolation_size = 0; ///< 0 disables the block (second block only)
  int kernel_size = 0;
  int expansion_width = 0;
  bool maxpool_enabled = false;

  bool enabled() const noexcept { return interpolation_size != 0; }
  bool operator==(const ExitBlockConfig&) const = default;
};

struct ExitBranchConfig {
  ExitBlockConfig block1;
  ExitBlockConfig block2;

  bool has_second_block() const noexcept { return block2.enabled(); }
  bool operator==(const ExitBranchConfig&) const = default;
};

/// Per-position exit thresholds. A value of 1 disables the exit; the final
/// classifier is always active and has no entry here.
struct ThresholdVector {
  std::array<double, kNumExitPositions> values{1.0, 1.0, 1.0, 1.0, 1.0};

  bool enabled(std::size_t position) const noexcept { return values[position] < 1.0; }
  std::size_t enabled_count() const noexcept;
  /// Enabled positions in ascending order.
  std::vector<std::size_t> enabled_positions() const;

  bool operator==(const ThresholdVector&) const = default;
};

struct Genome {
  BackboneGenes backbone;
  ThresholdVector thresholds;
  std::array<ExitBranchConfig, kNumExitPositions> exits{};

  bool operator==(const Genome&) const = default;
};

/// Samples `max_depth` exit-branch configurations. Block 1 draws every field
/// from its option list, block 2 draws its interpolation size from
/// [0] ++ interp_options, and each max-pool flag is a fair coin.
/// Throws ConfigError on an empty option list or max_depth < 1.
std::vector<ExitBranchConfig> sample_exit_layers(int max_depth,
                                                 const std::vector<int>& interp_options,
                                                 const std::vector<int>& kernel_options,
                                                 const std::vector<int>& expansion_options,
                                                 Rng& rng);
std::vector<ExitBranchConfig> sample_exit_layers(int max_depth,
                                                 const std::vector<int>& interp_options,
                                                 const std::vector<int>& kernel_options,
                                                 const std::vector<int>& expansion_options,
                                                 std::uint64_t seed);

/// Every configuration the exit-layer sampler can produce for one branch.
std::vector<ExitBranchConfig> exit_branch_support(const std::vector<int>& interp_options,
                                                  const std::vector<int>& kernel_options,
                                                  const std::vector<int>& expansion_options);

/// Architecture-level identity: a disabled second block has no further
/// hyperparameters, so its inert fields are cleared.
ExitBranchConfig canonical_architecture(ExitBranchConfig config);

/// Number of distinct branch architectures (after canonicalization) in the
/// sampler support.
std::size_t count_exit_branch_architectures(const std::vector<int>& interp_options,
                                            const std::vector<int>& kernel_options,
                                            const std::vector<int>& expansion_options);

Genome sample_genome(const SearchSpace& space, Rng& rng);
Genome sample_genome(const SearchSpace& space, std::uint64_t seed);

/// Every invariant violation of `g` against `space`; empty means valid.
std::vector<std::string> validate(const Genome& g, const SearchSpace& space);

inline bool is_valid(const Genome& g, const SearchSpace& space) {
  return validate(g, space).empty();
}

/// Re-samples each gene from its option list with probability `per_gene_probability`.
Genome mutate(const Genome& g, const SearchSpace& space, double per_gene_probability, Rng& rng);
Genome mutate(const Genome& g, const SearchSpace& space, double per_gene_probability,
              std::uint64_t seed);

/// Uniform gene-wise exchange.
std::pair<Genome, Genome> crossover(const Genome& a, const Genome& b, const SearchSpace& space,
                                    Rng& rng);
std::pair<Genome, Genome> crossover(const Genome& a, const Genome& b, const SearchSpace& space,
                                    std::uint64_t seed);

/// Flat option-index encoding. Layout (all entries are indices into the
/// matching option list):
///   [resolution] [depth x5] [kernel x5*max_depth] [expansion x5*max_depth]
///   [threshold x5 (grid index)]
///   per exit position: [b1 interp, b1 kernel, b1 expansion, b1 maxpool,
///                       b2 interp (0 = disabled, i+1 = option i), b2 kernel,
///                       b2 expansion, b2 maxpool]
std::vector<int> encode(const Genome& g, const SearchSpace& space);

/// Inverse of encode. Throws DecodeError on a wrong length or an index out of range.
Genome decode(const std::vector<int>& v, const SearchSpace& space);

/// Number of values each encoded position can take; same length as encode().
std::vector<int> gene_cardinalities(const SearchSpace& space);

std::size_t encoding_length(const SearchSpace& space);

/// Stable 64-bit identity of a genome's encoding.
std::uint64_t genome_id(const std::vector<int>& encoding);

} // namespace exitnas
