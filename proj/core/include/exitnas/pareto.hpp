#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace exitnas {

/// Bi-objective point, both minimized.
struct ObjectiveVector {
  double f1 = 0.0;
  double f2 = 0.0;

  bool operator==(const ObjectiveVector&) const = default;
};

/// a dominates b: no worse in both objectives and strictly better in one.
constexpr bool dominates(const ObjectiveVector& a, const ObjectiveVector& b) noexcept {
  return a.f1 <= b.f1 && a.f2 <= b.f2 && (a.f1 < b.f1 || a.f2 < b.f2);
}

/// Partition into non-domination fronts (indices, each front ascending).
/// Sort-and-sweep specialised to two objectives, O(n log n).
std::vector<std::vector<std::size_t>> nondominated_sort(std::span<const ObjectiveVector> points);

/// Front rank of each point (0 = first front).
std::vector<std::size_t> front_ranks(std::span<const ObjectiveVector> points);

/// Crowding distance of each member of `front`, in the order of `front`.
std::vector<double> crowding_distance(std::span<const ObjectiveVector> points,
                                      std::span<const std::size_t> front);

/// Area dominated by `points` and bounded by `reference` (minimization).
double hypervolume_2d(std::span<const ObjectiveVector> points, const ObjectiveVector& reference);

/// Greedy hypervolume-contribution selection of k indices. Candidates are the
/// leading fronts, taken whole until at least k points are available; the
/// reference point is (max f1, max f2) over the whole population. Ties prefer
/// points not identical to an already-selected point, then lower f1, lower f2,
/// lower index. Throws ContractViolation if k <= 0 or k > population size.
std::vector<std::size_t> select_candidates(std::span<const ObjectiveVector> points, int k);

} // namespace exitnas
