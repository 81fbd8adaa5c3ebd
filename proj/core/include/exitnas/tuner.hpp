#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "exitnas/exitsim.hpp"

namespace exitnas {

struct TunerConfig {
  double gamma = 0.1;
  /// Target average MACs, in MACs (not millions).
  double target_macs = 2.0e6;
  /// Sorted threshold candidates in [0, 1]; must contain 1.
  std::vector<double> grid = SearchSpace::default_threshold_grid();
  /// Largest grid product searched exhaustively; beyond it the tuner falls
  /// back to cyclic coordinate descent.
  double max_evaluations = 1e6;

  /// Throws ConfigError.
  void validate() const;
};

/// accuracy - gamma * |average_macs - target| / target.
double objective(const PolicyResult& result, const TunerConfig& cfg);

struct TuneResult {
  std::vector<double> thresholds; ///< one per early column of the trace
  PolicyResult policy;
  double objective = 0.0;
  bool approximate = false; ///< true when coordinate descent was used
};

/// Grid search for the early-exit thresholds maximizing objective(). Ties go
/// to the lexicographically largest threshold vector. `start` seeds the
/// coordinate-descent fallback (defaults to all exits disabled).
TuneResult tune(const EvalTrace& trace, const MacProfile& profile, const TunerConfig& cfg,
                std::optional<std::vector<double>> start = std::nullopt);

/// Writes tuned column thresholds back into a per-position vector; positions
/// absent from the trace are set to 1.
ThresholdVector to_threshold_vector(const EvalTrace& trace, const std::vector<double>& columns);

} // namespace exitnas
