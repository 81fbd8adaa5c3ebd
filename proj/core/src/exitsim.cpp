#include "exitnas/exitsim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "exitnas/errors.hpp"

namespace exitnas {

void EvalTrace::check() const {
  if (n_exits < 1) {
    throw MalformedTrace("n_exits", "final-exit column missing");
  }
  if (n_samples < 1) {
    throw MalformedTrace("n_samples", "must be >= 1");
  }
  if (exit_positions.size() + 1 != n_exits) {
    throw MalformedTrace("exit_positions", "expected " + std::to_string(n_exits - 1) +
                                               " early-exit positions, got " +
                                               std::to_string(exit_positions.size()));
  }
  for (std::size_t c = 0; c < exit_positions.size(); ++c) {
    if (exit_positions[c] >= kNumExitPositions) {
      throw MalformedTrace("exit_positions[" + std::to_string(c) + "]", "position out of range");
    }
    if (c > 0 && exit_positions[c] <= exit_positions[c - 1]) {
      throw MalformedTrace("exit_positions[" + std::to_string(c) + "]",
                           "positions must be strictly increasing");
    }
  }
  const std::size_t cells = n_samples * n_exits;
  if (margins.size() != cells) {
    throw MalformedTrace("margins", "expected " + std::to_string(cells) + " cells, got " +
                                        std::to_string(margins.size()));
  }
  if (correct.size() != cells) {
    throw MalformedTrace("correct", "expected " + std::to_string(cells) + " cells, got " +
                                        std::to_string(correct.size()));
  }
  for (std::size_t i = 0; i < cells; ++i) {
    const std::string cell =
        "[" + std::to_string(i / n_exits) + "," + std::to_string(i % n_exits) + "]";
    if (!(margins[i] >= 0.0 && margins[i] <= 1.0)) {
      throw MalformedTrace("margins" + cell, "margin outside [0, 1]");
    }
    if (correct[i] > 1) {
      throw MalformedTrace("correct" + cell, "flag must be 0 or 1");
    }
  }
}

EvalTrace EvalTrace::without_column(std::size_t column) const {
  if (column + 1 >= n_exits) {
    throw ContractViolation("without_column: only early columns can be removed");
  }
  EvalTrace out;
  out.n_samples = n_samples;
  out.n_exits = n_exits - 1;
  out.exit_positions = exit_positions;
  out.exit_positions.erase(out.exit_positions.begin() + static_cast<std::ptrdiff_t>(column));
  out.margins.reserve(n_samples * out.n_exits);
  out.correct.reserve(n_samples * out.n_exits);
  for (std::size_t i = 0; i < n_samples; ++i) {
    for (std::size_t c = 0; c < n_exits; ++c) {
      if (c != column) {
        out.margins.push_back(margin(i, c));
        out.correct.push_back(correct[i * n_exits + c]);
      }
    }
  }
  return out;
}

double score_margin(std::span<const double> probabilities) {
  if (probabilities.size() < 2) {
    throw ContractViolation("score_margin: need at least 2 classes");
  }
  double sum = 0.0;
  double top1 = -1.0;
  double top2 = -1.0;
  for (double p : probabilities) {
    if (!(p >= 0.0)) {
      throw ContractViolation("score_margin: negative probability");
    }
    sum += p;
    if (p > top1) {
      top2 = top1;
      top1 = p;
    } else if (p > top2) {
      top2 = p;
    }
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw ContractViolation("score_margin: probabilities do not sum to 1");
  }
  return std::clamp(top1 - top2, 0.0, 1.0);
}

std::vector<double> column_thresholds(const EvalTrace& trace, const ThresholdVector& thresholds) {
  for (std::size_t p = 0; p < kNumExitPositions; ++p) {
    if (thresholds.enabled(p) && std::find(trace.exit_positions.begin(), trace.exit_positions.end(),
                                           p) == trace.exit_positions.end()) {
      throw ContractViolation("thresholds enable exit " + std::to_string(p + 1) +
                              " which the trace does not contain");
    }
  }
  std::vector<double> out;
  out.reserve(trace.exit_positions.size());
  for (std::size_t p : trace.exit_positions) {
    out.push_back(thresholds.values[p]);
  }
  return out;
}

std::vector<MacCount> column_costs(const MacProfile& profile, const std::vector<bool>& enabled) {
  const std::size_t early = profile.cumulative_exit_macs.size();
  std::vector<MacCount> costs(early + 1);
  MacCount dropped = 0;
  for (std::size_t c = 0; c < early; ++c) {
    if (!enabled[c]) {
      dropped += profile.per_branch_macs[c];
    }
    costs[c] = profile.cumulative_exit_macs[c] - dropped;
  }
  costs[early] = profile.final_macs - dropped;
  return costs;
}

PolicyResult assign_exits(const EvalTrace& trace, std::span<const double> thresholds,
                          const MacProfile& profile) {
  const std::size_t early = trace.n_exits - 1;
  if (thresholds.size() != early) {
    throw ContractViolation("assign_exits: " + std::to_string(thresholds.size()) +
                            " thresholds for " + std::to_string(early) + " early exits");
  }
  if (profile.exit_positions != trace.exit_positions) {
    throw ContractViolation("assign_exits: profile exits do not match trace exits");
  }

  std::vector<bool> enabled(early);
  for (std::size_t c = 0; c < early; ++c) {
    enabled[c] = thresholds[c] < 1.0;
  }
  const auto costs = column_costs(profile, enabled);

  PolicyResult r;
  r.exit_index.resize(trace.n_samples);
  r.exit_counts.assign(trace.n_exits, 0);
  for (std::size_t i = 0; i < trace.n_samples; ++i) {
    std::size_t column = early;
    for (std::size_t c = 0; c < early; ++c) {
      if (enabled[c] && trace.margin(i, c) > thresholds[c]) {
        column = c;
        break;
      }
    }
    r.exit_index[i] = column;
    ++r.exit_counts[column];
    if (trace.is_correct(i, column)) {
      ++r.correct_count;
    }
  }

  const double n = static_cast<double>(trace.n_samples);
  r.utilization.resize(trace.n_exits);
  for (std::size_t c = 0; c < trace.n_exits; ++c) {
    r.utilization[c] = static_cast<double>(r.exit_counts[c]) / n;
    r.total_macs += static_cast<MacCount>(r.exit_counts[c]) * costs[c];
  }
  r.accuracy = static_cast<double>(r.correct_count) / n;
  r.average_macs = static_cast<double>(r.total_macs) / n;
  return r;
}

PolicyResult assign_exits(const EvalTrace& trace, const ThresholdVector& thresholds,
                          const MacProfile& profile) {
  const auto columns = column_thresholds(trace, thresholds);
  return assign_exits(trace, columns, profile);
}

} // namespace exitnas
