#include "exitnas/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "exitnas/errors.hpp"

namespace exitnas {

void TunerConfig::validate() const {
  if (!(gamma >= 0.0)) {
    throw ConfigError("tuner: gamma must be >= 0");
  }
  if (!(target_macs > 0.0)) {
    throw ConfigError("tuner: target_macs must be > 0");
  }
  if (grid.empty()) {
    throw ConfigError("tuner: grid is empty");
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0 && grid[i] <= 1.0) || (i > 0 && !(grid[i - 1] < grid[i]))) {
      throw ConfigError("tuner: grid must be strictly increasing within [0, 1]");
    }
  }
  if (grid.back() != 1.0) {
    throw ConfigError("tuner: grid must contain 1");
  }
  if (!(max_evaluations >= 1.0)) {
    throw ConfigError("tuner: max_evaluations must be >= 1");
  }
}

namespace {

double score(std::size_t correct, MacCount total_macs, std::size_t n, const TunerConfig& cfg) {
  const double accuracy = static_cast<double>(correct) / static_cast<double>(n);
  const double average = static_cast<double>(total_macs) / static_cast<double>(n);
  return accuracy - cfg.gamma * std::abs(average - cfg.target_macs) / cfg.target_macs;
}

/// Exhaustive search over the grid product. Samples are bucketed per column
/// by how many grid values lie strictly below their margin, so each search
/// node costs O(remaining samples + grid size) and the last column is
/// resolved from prefix sums.
class GridSearch {
public:
  GridSearch(const EvalTrace& trace, const MacProfile& profile, const TunerConfig& cfg)
      : trace_(trace), profile_(profile), cfg_(cfg), early_(trace.n_exits - 1),
        grid_size_(cfg.grid.size()) {
    below_.resize(trace.n_samples * early_);
    for (std::size_t i = 0; i < trace.n_samples; ++i) {
      for (std::size_t c = 0; c < early_; ++c) {
        const double m = trace.margin(i, c);
        below_[i * early_ + c] = static_cast<std::uint16_t>(
            std::lower_bound(cfg.grid.begin(), cfg.grid.end(), m) - cfg.grid.begin());
      }
    }
    choice_.assign(early_, 0);
    counts_.assign(early_, 0);
    correct_.assign(early_, 0);
    best_choice_.assign(early_, grid_size_ - 1);
  }

  std::vector<std::size_t> run() {
    std::vector<std::uint32_t> samples(trace_.n_samples);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      samples[i] = static_cast<std::uint32_t>(i);
    }
    if (early_ == 0) {
      return {};
    }
    scratch_.resize(early_);
    descend(0, samples);
    return best_choice_;
  }

private:
  void descend(std::size_t column, std::span<const std::uint32_t> remaining) {
    // Counting sort of the remaining samples by bucket (0..grid_size).
    const std::size_t buckets = grid_size_ + 1;
    std::vector<std::size_t> bucket_count(buckets, 0);
    std::vector<std::size_t> bucket_correct(buckets, 0);
    std::vector<std::size_t> bucket_final_correct(buckets, 0);
    const std::size_t final_column = early_;
    for (std::uint32_t i : remaining) {
      const std::size_t k = below_[i * early_ + column];
      ++bucket_count[k];
      bucket_correct[k] += trace_.is_correct(i, column) ? 1 : 0;
      bucket_final_correct[k] += trace_.is_correct(i, final_column) ? 1 : 0;
    }

    // Suffix sums: samples with bucket > g exit at threshold index g.
    std::vector<std::size_t> exit_count(grid_size_ + 1, 0);
    std::vector<std::size_t> exit_correct(grid_size_ + 1, 0);
    for (std::size_t g = grid_size_; g-- > 0;) {
      exit_count[g] = exit_count[g + 1] + bucket_count[g + 1];
      exit_correct[g] = exit_correct[g + 1] + bucket_correct[g + 1];
    }

    const bool last = column + 1 == early_;
    std::vector<std::uint32_t>& sorted = scratch_[column];
    std::vector<std::size_t> bucket_start;
    if (!last) {
      bucket_start.assign(buckets + 1, 0);
      for (std::size_t k = 0; k < buckets; ++k) {
        bucket_start[k + 1] = bucket_start[k] + bucket_count[k];
      }
      sorted.resize(remaining.size());
      std::vector<std::size_t> cursor(bucket_start.begin(), bucket_start.end() - 1);
      for (std::uint32_t i : remaining) {
        sorted[cursor[below_[i * early_ + column]]++] = i;
      }
    }

    std::size_t stay_final_correct = 0;
    for (std::size_t g = 0; g < grid_size_; ++g) {
      stay_final_correct += bucket_final_correct[g];
      choice_[column] = g;
      counts_[column] = exit_count[g];
      correct_[column] = exit_correct[g];
      if (last) {
        const std::size_t stay = remaining.size() - exit_count[g];
        evaluate_leaf(stay, stay_final_correct);
      } else {
        // Samples staying past this column are those in buckets 0..g.
        descend(column + 1, std::span<const std::uint32_t>(sorted.data(), bucket_start[g + 1]));
      }
    }
  }

  void evaluate_leaf(std::size_t final_count, std::size_t final_correct) {
    std::vector<bool> enabled(early_);
    for (std::size_t c = 0; c < early_; ++c) {
      enabled[c] = cfg_.grid[choice_[c]] < 1.0;
    }
    const auto costs = column_costs(profile_, enabled);
    MacCount total = static_cast<MacCount>(final_count) * costs[early_];
    std::size_t correct = final_correct;
    for (std::size_t c = 0; c < early_; ++c) {
      total += static_cast<MacCount>(counts_[c]) * costs[c];
      correct += correct_[c];
    }
    const double value = score(correct, total, trace_.n_samples, cfg_);
    // Enumeration is in ascending lexicographic order, so >= keeps the
    // lexicographically largest maximizer.
    if (value >= best_) {
      best_ = value;
      best_choice_ = choice_;
    }
  }

  const EvalTrace& trace_;
  const MacProfile& profile_;
  const TunerConfig& cfg_;
  std::size_t early_;
  std::size_t grid_size_;
  std::vector<std::uint16_t> below_;
  std::vector<std::vector<std::uint32_t>> scratch_;
  std::vector<std::size_t> choice_;
  std::vector<std::size_t> counts_;
  std::vector<std::size_t> correct_;
  std::vector<std::size_t> best_choice_;
  double best_ = -std::numeric_limits<double>::infinity();
};

std::vector<double> thresholds_from(const std::vector<std::size_t>& indices,
                                    const std::vector<double>& grid) {
  std::vector<double> out(indices.size());
  for (std::size_t c = 0; c < indices.size(); ++c) {
    out[c] = grid[indices[c]];
  }
  return out;
}

std::size_t nearest_grid_index(const std::vector<double>& grid, double value) {
  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    if (std::abs(grid[g] - value) < std::abs(grid[best] - value)) {
      best = g;
    }
  }
  return best;
}

std::vector<std::size_t> coordinate_descent(const EvalTrace& trace, const MacProfile& profile,
                                            const TunerConfig& cfg,
                                            std::vector<std::size_t> current) {
  const auto evaluate = [&](const std::vector<std::size_t>& choice) {
    return objective(assign_exits(trace, thresholds_from(choice, cfg.grid), profile), cfg);
  };
  double best = evaluate(current);
  bool improved = true;
  while (improved) {
    improved = false;
    for (std::size_t c = 0; c < current.size(); ++c) {
      // Only strict improvements move a coordinate, which guarantees termination.
      std::size_t best_g = current[c];
      for (std::size_t g = 0; g < cfg.grid.size(); ++g) {
        if (g == current[c]) {
          continue;
        }
        auto candidate = current;
        candidate[c] = g;
        const double value = evaluate(candidate);
        if (value > best) {
          best = value;
          best_g = g;
        }
      }
      if (best_g != current[c]) {
        current[c] = best_g;
        improved = true;
      }
    }
  }
  return current;
}

} // namespace

double objective(const PolicyResult& result, const TunerConfig& cfg) {
  if (!(cfg.target_macs > 0.0)) {
    throw ContractViolation("objective: target_macs must be > 0");
  }
  return result.accuracy -
         cfg.gamma * std::abs(result.average_macs - cfg.target_macs) / cfg.target_macs;
}

TuneResult tune(const EvalTrace& trace, const MacProfile& profile, const TunerConfig& cfg,
                std::optional<std::vector<double>> start) {
  cfg.validate();
  trace.check();
  if (profile.exit_positions != trace.exit_positions) {
    throw ContractViolation("tune: profile exits do not match trace exits");
  }
  const std::size_t early = trace.n_exits - 1;

  TuneResult result;
  const double product = std::pow(static_cast<double>(cfg.grid.size()), static_cast<double>(early));
  std::vector<std::size_t> choice;
  if (product <= cfg.max_evaluations) {
    choice = GridSearch(trace, profile, cfg).run();
  } else {
    std::vector<std::size_t> initial(early, cfg.grid.size() - 1);
    if (start) {
      if (start->size() != early) {
        throw ContractViolation("tune: start vector has the wrong length");
      }
      for (std::size_t c = 0; c < early; ++c) {
        initial[c] = nearest_grid_index(cfg.grid, (*start)[c]);
      }
    }
    choice = coordinate_descent(trace, profile, cfg, std::move(initial));
    result.approximate = true;
  }
  result.thresholds = thresholds_from(choice, cfg.grid);
  result.policy = assign_exits(trace, result.thresholds, profile);
  result.objective = objective(result.policy, cfg);
  return result;
}

ThresholdVector to_threshold_vector(const EvalTrace& trace, const std::vector<double>& columns) {
  if (columns.size() + 1 != trace.n_exits) {
    throw ContractViolation("to_threshold_vector: column count mismatch");
  }
  ThresholdVector out;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    out.values[trace.exit_positions[c]] = columns[c];
  }
  return out;
}

} // namespace exitnas
