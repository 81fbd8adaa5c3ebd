#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "exitnas/genome.hpp"
#include "exitnas/macmodel.hpp"

namespace exitnas {

/// Per-sample, per-exit (score margin, correctness) matrix. Columns are the
/// traced early exits in ascending backbone position followed by the final
/// classifier. Storage is row-major [sample][column].
struct EvalTrace {
  std::size_t n_samples = 0;
  std::size_t n_exits = 0; ///< columns including the final exit
  std::vector<std::size_t> exit_positions; ///< backbone position of each early column
  std::vector<double> margins;
  std::vector<std::uint8_t> correct;

  double margin(std::size_t sample, std::size_t column) const {
    return margins[sample * n_exits + column];
  }
  bool is_correct(std::size_t sample, std::size_t column) const {
    return correct[sample * n_exits + column] != 0;
  }

  /// Throws MalformedTrace naming the first violation.
  void check() const;

  /// Copy with early column `column` removed.
  EvalTrace without_column(std::size_t column) const;

  bool operator==(const EvalTrace&) const = default;
};

struct PolicyResult {
  std::vector<std::size_t> exit_index; ///< column each sample leaves at
  std::vector<std::size_t> exit_counts;
  std::vector<double> utilization;     ///< exit_counts / N, one per column
  std::size_t correct_count = 0;
  double accuracy = 0.0;
  MacCount total_macs = 0;             ///< exact sum of per-sample MACs
  double average_macs = 0.0;           ///< total_macs / N
};

/// top-1 minus top-2 probability. Requires >= 2 entries, all >= 0, summing to 1 (1e-6).
double score_margin(std::span<const double> probabilities);

/// Early-column thresholds of `trace` taken from a per-position vector.
/// Throws ContractViolation if `thresholds` enables a position the trace lacks.
std::vector<double> column_thresholds(const EvalTrace& trace, const ThresholdVector& thresholds);

/// Each sample leaves at the first column whose threshold is < 1 and whose
/// margin is strictly greater than the threshold, otherwise at the final
/// exit. `profile` must describe the traced exits; columns with threshold
/// >= 1 are treated as removed, so their branch cost is not charged.
PolicyResult assign_exits(const EvalTrace& trace, std::span<const double> thresholds,
                          const MacProfile& profile);

PolicyResult assign_exits(const EvalTrace& trace, const ThresholdVector& thresholds,
                          const MacProfile& profile);

/// Cost of every column under an enabled-mask, computed from the profile of
/// the traced exits. Disabled columns get the cost they would have if enabled
/// on top of the reduced set, but no sample can reach them.
std::vector<MacCount> column_costs(const MacProfile& profile, const std::vector<bool>& enabled);

} // namespace exitnas
