#include "exitnas/genome.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "exitnas/errors.hpp"

namespace exitnas {

namespace {

constexpr std::size_t kExitGenes = 8;

void require_nonempty(const std::vector<int>& options, const char* name) {
  if (options.empty()) {
    throw ConfigError(std::string("sample_exit_layers: empty ") + name + " option list");
  }
}

int index_of(const std::vector<int>& options, int value) {
  const auto it = std::find(options.begin(), options.end(), value);
  return it == options.end() ? -1 : static_cast<int>(it - options.begin());
}

int threshold_index(const std::vector<double>& grid, double value) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (std::abs(grid[i] - value) <= 1e-12) {
      return static_cast<int>(i);
    }
  }
  return -1;
}

std::size_t slots(const SearchSpace& space) {
  return kNumBlocks * static_cast<std::size_t>(space.backbone.max_depth());
}

auto as_tuple(const ExitBranchConfig& c) {
  return std::tuple(c.block1.interpolation_size, c.block1.kernel_size, c.block1.expansion_width,
                    c.block1.maxpool_enabled, c.block2.interpolation_size, c.block2.kernel_size,
                    c.block2.expansion_width, c.block2.maxpool_enabled);
}

} // namespace

std::size_t ThresholdVector::enabled_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [](double t) { return t < 1.0; }));
}

std::vector<std::size_t> ThresholdVector::enabled_positions() const {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < values.size(); ++p) {
    if (enabled(p)) {
      out.push_back(p);
    }
  }
  return out;
}

std::vector<ExitBranchConfig> sample_exit_layers(int max_depth,
                                                 const std::vector<int>& interp_options,
                                                 const std::vector<int>& kernel_options,
                                                 const std::vector<int>& expansion_options,
                                                 Rng& rng) {
  require_nonempty(interp_options, "interpolation");
  require_nonempty(kernel_options, "kernel");
  require_nonempty(expansion_options, "expansion");
  if (max_depth < 1) {
    throw ConfigError("sample_exit_layers: max_depth must be >= 1");
  }

  std::vector<int> interp_options_b2{0};
  interp_options_b2.insert(interp_options_b2.end(), interp_options.begin(), interp_options.end());
  const std::array<int, 2> maxpool_options{0, 1};

  std::vector<ExitBranchConfig> exit_layers(static_cast<std::size_t>(max_depth));
  for (auto& layer : exit_layers) {
    layer.block1.interpolation_size = random_choice(rng, interp_options);
    layer.block1.kernel_size = random_choice(rng, kernel_options);
    layer.block1.expansion_width = random_choice(rng, expansion_options);
    layer.block1.maxpool_enabled = random_choice(rng, maxpool_options) != 0;

    layer.block2.interpolation_size = random_choice(rng, interp_options_b2);
    layer.block2.kernel_size = random_choice(rng, kernel_options);
    layer.block2.expansion_width = random_choice(rng, expansion_options);
    layer.block2.maxpool_enabled = random_choice(rng, maxpool_options) != 0;
  }
  return exit_layers;
}

std::vector<ExitBranchConfig> sample_exit_layers(int max_depth,
                                                 const std::vector<int>& interp_options,
                                                 const std::vector<int>& kernel_options,
                                                 const std::vector<int>& expansion_options,
                                                 std::uint64_t seed) {
  Rng rng(seed);
  return sample_exit_layers(max_depth, interp_options, kernel_options, expansion_options, rng);
}

std::vector<ExitBranchConfig> exit_branch_support(const std::vector<int>& interp_options,
                                                  const std::vector<int>& kernel_options,
                                                  const std::vector<int>& expansion_options) {
  std::vector<ExitBlockConfig> first;
  for (int i : interp_options) {
    for (int k : kernel_options) {
      for (int e : expansion_options) {
        for (bool mp : {false, true}) {
          first.push_back({i, k, e, mp});
        }
      }
    }
  }
  std::vector<int> interp_b2{0};
  interp_b2.insert(interp_b2.end(), interp_options.begin(), interp_options.end());
  std::vector<ExitBlockConfig> second;
  for (int i : interp_b2) {
    for (int k : kernel_options) {
      for (int e : expansion_options) {
        for (bool mp : {false, true}) {
          second.push_back({i, k, e, mp});
        }
      }
    }
  }
  std::vector<ExitBranchConfig> out;
  out.reserve(first.size() * second.size());
  for (const auto& b1 : first) {
    for (const auto& b2 : second) {
      out.push_back({b1, b2});
    }
  }
  return out;
}

ExitBranchConfig canonical_architecture(ExitBranchConfig config) {
  if (!config.block2.enabled()) {
    config.block2 = ExitBlockConfig{};
  }
  return config;
}

std::size_t count_exit_branch_architectures(const std::vector<int>& interp_options,
                                            const std::vector<int>& kernel_options,
                                            const std::vector<int>& expansion_options) {
  std::set<decltype(as_tuple(ExitBranchConfig{}))> distinct;
  for (const auto& c : exit_branch_support(interp_options, kernel_options, expansion_options)) {
    distinct.insert(as_tuple(canonical_architecture(c)));
  }
  return distinct.size();
}

Genome sample_genome(const SearchSpace& space, Rng& rng) {
  space.validate();
  const auto& bb = space.backbone;
  const std::size_t n_slots = slots(space);

  Genome g;
  for (auto& d : g.backbone.block_depths) {
    d = random_choice(rng, bb.depth_options);
  }
  g.backbone.kernel_sizes.resize(n_slots);
  g.backbone.expansion_rates.resize(n_slots);
  for (std::size_t s = 0; s < n_slots; ++s) {
    g.backbone.kernel_sizes[s] = random_choice(rng, bb.kernel_options);
    g.backbone.expansion_rates[s] = random_choice(rng, bb.expansion_options);
  }
  g.backbone.input_resolution = random_choice(rng, bb.resolution_options);

  for (auto& t : g.thresholds.values) {
    t = random_choice(rng, space.threshold_grid);
  }

  const auto exits =
      sample_exit_layers(static_cast<int>(kNumExitPositions), space.exits.interpolation_options,
                         space.exits.kernel_options, space.exits.expansion_options, rng);
  std::copy(exits.begin(), exits.end(), g.exits.begin());
  return g;
}

Genome sample_genome(const SearchSpace& space, std::uint64_t seed) {
  Rng rng(seed);
  return sample_genome(space, rng);
}

std::vector<std::string> validate(const Genome& g, const SearchSpace& space) {
  std::vector<std::string> violations;
  const auto& bb = space.backbone;
  const std::size_t n_slots = slots(space);

  for (std::size_t b = 0; b < kNumBlocks; ++b) {
    if (index_of(bb.depth_options, g.backbone.block_depths[b]) < 0) {
      violations.push_back("block " + std::to_string(b + 1) + " depth off option list");
    }
  }
  if (g.backbone.kernel_sizes.size() != n_slots || g.backbone.expansion_rates.size() != n_slots) {
    violations.push_back("backbone layer slot count mismatch");
  } else {
    for (std::size_t s = 0; s < n_slots; ++s) {
      if (index_of(bb.kernel_options, g.backbone.kernel_sizes[s]) < 0) {
        violations.push_back("backbone kernel gene " + std::to_string(s) + " off option list");
      }
      if (index_of(bb.expansion_options, g.backbone.expansion_rates[s]) < 0) {
        violations.push_back("backbone expansion gene " + std::to_string(s) + " off option list");
      }
    }
  }
  if (index_of(bb.resolution_options, g.backbone.input_resolution) < 0) {
    violations.push_back("input resolution off option list");
  }

  for (std::size_t p = 0; p < kNumExitPositions; ++p) {
    const double t = g.thresholds.values[p];
    const std::string where = "exit " + std::to_string(p + 1) + ": ";
    if (!(t >= 0.0 && t <= 1.0)) {
      violations.push_back(where + "threshold out of range");
    } else if (threshold_index(space.threshold_grid, t) < 0) {
      violations.push_back(where + "threshold not on grid");
    }

    const auto& ex = space.exits;
    const auto& b1 = g.exits[p].block1;
    const auto& b2 = g.exits[p].block2;
    if (!b1.enabled()) {
      violations.push_back(where + "block1 disabled");
    } else if (index_of(ex.interpolation_options, b1.interpolation_size) < 0) {
      violations.push_back(where + "block1 interpolation size off option list");
    }
    if (b2.enabled() && index_of(ex.interpolation_options, b2.interpolation_size) < 0) {
      violations.push_back(where + "block2 interpolation size off option list");
    }
    for (const auto* block : {&b1, &b2}) {
      const char* name = block == &b1 ? "block1" : "block2";
      if (index_of(ex.kernel_options, block->kernel_size) < 0) {
        violations.push_back(where + name + " kernel size off option list");
      }
      if (index_of(ex.expansion_options, block->expansion_width) < 0) {
        violations.push_back(where + name + " expansion width off option list");
      }
    }
  }
  return violations;
}

std::vector<int> gene_cardinalities(const SearchSpace& space) {
  const auto& bb = space.backbone;
  const auto& ex = space.exits;
  const std::size_t n_slots = slots(space);
  std::vector<int> card;
  card.reserve(encoding_length(space));
  card.push_back(static_cast<int>(bb.resolution_options.size()));
  card.insert(card.end(), kNumBlocks, static_cast<int>(bb.depth_options.size()));
  card.insert(card.end(), n_slots, static_cast<int>(bb.kernel_options.size()));
  card.insert(card.end(), n_slots, static_cast<int>(bb.expansion_options.size()));
  card.insert(card.end(), kNumExitPositions, static_cast<int>(space.threshold_grid.size()));
  const int n_interp = static_cast<int>(ex.interpolation_options.size());
  const int n_kernel = static_cast<int>(ex.kernel_options.size());
  const int n_exp = static_cast<int>(ex.expansion_options.size());
  for (std::size_t p = 0; p < kNumExitPositions; ++p) {
    card.insert(card.end(), {n_interp, n_kernel, n_exp, 2, n_interp + 1, n_kernel, n_exp, 2});
  }
  return card;
}

std::size_t encoding_length(const SearchSpace& space) {
  return 1 + kNumBlocks + 2 * slots(space) + kNumExitPositions + kNumExitPositions * kExitGenes;
}

std::vector<int> encode(const Genome& g, const SearchSpace& space) {
  if (auto violations = validate(g, space); !violations.empty()) {
    throw ContractViolation("encode: invalid genome: " + violations.front());
  }
  const auto& bb = space.backbone;
  const auto& ex = space.exits;
  std::vector<int> v;
  v.reserve(encoding_length(space));
  v.push_back(index_of(bb.resolution_options, g.backbone.input_resolution));
  for (int d : g.backbone.block_depths) {
    v.push_back(index_of(bb.depth_options, d));
  }
  for (int k : g.backbone.kernel_sizes) {
    v.push_back(index_of(bb.kernel_options, k));
  }
  for (int e : g.backbone.expansion_rates) {
    v.push_back(index_of(bb.expansion_options, e));
  }
  for (double t : g.thresholds.values) {
    v.push_back(threshold_index(space.threshold_grid, t));
  }
  for (const auto& branch : g.exits) {
    const auto& b1 = branch.block1;
    const auto& b2 = branch.block2;
    v.push_back(index_of(ex.interpolation_options, b1.interpolation_size));
    v.push_back(index_of(ex.kernel_options, b1.kernel_size));
    v.push_back(index_of(ex.expansion_options, b1.expansion_width));
    v.push_back(b1.maxpool_enabled ? 1 : 0);
    v.push_back(b2.enabled() ? index_of(ex.interpolation_options, b2.interpolation_size) + 1 : 0);
    v.push_back(index_of(ex.kernel_options, b2.kernel_size));
    v.push_back(index_of(ex.expansion_options, b2.expansion_width));
    v.push_back(b2.maxpool_enabled ? 1 : 0);
  }
  return v;
}

Genome decode(const std::vector<int>& v, const SearchSpace& space) {
  const auto card = gene_cardinalities(space);
  if (v.size() != card.size()) {
    throw DecodeError("decode: expected " + std::to_string(card.size()) + " genes, got " +
                      std::to_string(v.size()));
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] < 0 || v[i] >= card[i]) {
      throw DecodeError("decode: gene " + std::to_string(i) + " index " + std::to_string(v[i]) +
                        " outside [0, " + std::to_string(card[i]) + ")");
    }
  }

  const auto& bb = space.backbone;
  const auto& ex = space.exits;
  const std::size_t n_slots = slots(space);
  const auto at = [&v](std::size_t i) { return static_cast<std::size_t>(v[i]); };

  Genome g;
  std::size_t pos = 0;
  g.backbone.input_resolution = bb.resolution_options[at(pos++)];
  for (auto& d : g.backbone.block_depths) {
    d = bb.depth_options[at(pos++)];
  }
  g.backbone.kernel_sizes.resize(n_slots);
  for (auto& k : g.backbone.kernel_sizes) {
    k = bb.kernel_options[at(pos++)];
  }
  g.backbone.expansion_rates.resize(n_slots);
  for (auto& e : g.backbone.expansion_rates) {
    e = bb.expansion_options[at(pos++)];
  }
  for (auto& t : g.thresholds.values) {
    t = space.threshold_grid[at(pos++)];
  }
  for (auto& branch : g.exits) {
    branch.block1.interpolation_size = ex.interpolation_options[at(pos++)];
    branch.block1.kernel_size = ex.kernel_options[at(pos++)];
    branch.block1.expansion_width = ex.expansion_options[at(pos++)];
    branch.block1.maxpool_enabled = v[pos++] != 0;
    const std::size_t b2_interp = at(pos++);
    branch.block2.interpolation_size = b2_interp == 0 ? 0 : ex.interpolation_options[b2_interp - 1];
    branch.block2.kernel_size = ex.kernel_options[at(pos++)];
    branch.block2.expansion_width = ex.expansion_options[at(pos++)];
    branch.block2.maxpool_enabled = v[pos++] != 0;
  }
  return g;
}

Genome mutate(const Genome& g, const SearchSpace& space, double per_gene_probability, Rng& rng) {
  if (!(per_gene_probability >= 0.0 && per_gene_probability <= 1.0)) {
    throw ContractViolation("mutate: probability outside [0, 1]");
  }
  auto v = encode(g, space);
  const auto card = gene_cardinalities(space);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (bernoulli(rng, per_gene_probability)) {
      v[i] = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(card[i])));
    }
  }
  return decode(v, space);
}

Genome mutate(const Genome& g, const SearchSpace& space, double per_gene_probability,
              std::uint64_t seed) {
  Rng rng(seed);
  return mutate(g, space, per_gene_probability, rng);
}

std::pair<Genome, Genome> crossover(const Genome& a, const Genome& b, const SearchSpace& space,
                                    Rng& rng) {
  if (!is_valid(a, space) || !is_valid(b, space)) {
    throw ConfigError("crossover: parents do not belong to the given search space");
  }
  auto va = encode(a, space);
  auto vb = encode(b, space);
  for (std::size_t i = 0; i < va.size(); ++i) {
    if (bernoulli(rng, 0.5)) {
      std::swap(va[i], vb[i]);
    }
  }
  return {decode(va, space), decode(vb, space)};
}

std::pair<Genome, Genome> crossover(const Genome& a, const Genome& b, const SearchSpace& space,
                                    std::uint64_t seed) {
  Rng rng(seed);
  return crossover(a, b, space, rng);
}

std::uint64_t genome_id(const std::vector<int>& encoding) {
  std::vector<unsigned char> bytes;
  bytes.reserve(encoding.size() * 2);
  for (int x : encoding) {
    bytes.push_back(static_cast<unsigned char>(x & 0xff));
    bytes.push_back(static_cast<unsigned char>((x >> 8) & 0xff));
  }
  return fnv1a(bytes);
}

} // namespace exitnas
