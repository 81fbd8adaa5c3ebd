#include "exitnas/pareto.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <tuple>

#include "exitnas/errors.hpp"

namespace exitnas {

std::vector<std::vector<std::size_t>> nondominated_sort(std::span<const ObjectiveVector> points) {
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(points[a].f1, points[a].f2, a) < std::tie(points[b].f1, points[b].f2, b);
  });

  // In lexicographic order, a point is dominated by some member of a front
  // iff it is dominated by that front's most recently added member, and the
  // last members' f2 values increase with front index (binary search).
  std::vector<std::vector<std::size_t>> fronts;
  for (std::size_t idx : order) {
    const auto& p = points[idx];
    std::size_t lo = 0;
    std::size_t hi = fronts.size();
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (dominates(points[fronts[mid].back()], p)) {
        lo = mid + 1;
      } else {
        hi = mid;
      }
    }
    if (lo == fronts.size()) {
      fronts.emplace_back();
    }
    fronts[lo].push_back(idx);
  }
  for (auto& front : fronts) {
    std::sort(front.begin(), front.end());
  }
  return fronts;
}

std::vector<std::size_t> front_ranks(std::span<const ObjectiveVector> points) {
  std::vector<std::size_t> rank(points.size(), 0);
  const auto fronts = nondominated_sort(points);
  for (std::size_t r = 0; r < fronts.size(); ++r) {
    for (std::size_t idx : fronts[r]) {
      rank[idx] = r;
    }
  }
  return rank;
}

std::vector<double> crowding_distance(std::span<const ObjectiveVector> points,
                                      std::span<const std::size_t> front) {
  const std::size_t n = front.size();
  std::vector<double> distance(n, 0.0);
  if (n <= 2) {
    std::fill(distance.begin(), distance.end(), std::numeric_limits<double>::infinity());
    return distance;
  }
  for (int objective = 0; objective < 2; ++objective) {
    const auto value = [&](std::size_t i) {
      return objective == 0 ? points[front[i]].f1 : points[front[i]].f2;
    };
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return value(a) < value(b); });
    const double span = value(order.back()) - value(order.front());
    distance[order.front()] = std::numeric_limits<double>::infinity();
    distance[order.back()] = std::numeric_limits<double>::infinity();
    if (span <= 0.0) {
      continue;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
      distance[order[i]] += (value(order[i + 1]) - value(order[i - 1])) / span;
    }
  }
  return distance;
}

double hypervolume_2d(std::span<const ObjectiveVector> points, const ObjectiveVector& reference) {
  std::vector<ObjectiveVector> inside;
  for (const auto& p : points) {
    if (p.f1 < reference.f1 && p.f2 < reference.f2) {
      inside.push_back(p);
    }
  }
  std::sort(inside.begin(), inside.end(), [](const auto& a, const auto& b) {
    return std::tie(a.f1, a.f2) < std::tie(b.f1, b.f2);
  });
  double volume = 0.0;
  double ceiling = reference.f2;
  for (const auto& p : inside) {
    if (p.f2 < ceiling) {
      volume += (reference.f1 - p.f1) * (ceiling - p.f2);
      ceiling = p.f2;
    }
  }
  return volume;
}

std::vector<std::size_t> select_candidates(std::span<const ObjectiveVector> points, int k) {
  if (k <= 0) {
    throw ContractViolation("select_candidates: k must be positive");
  }
  if (static_cast<std::size_t>(k) > points.size()) {
    throw ContractViolation("select_candidates: population smaller than k");
  }

  ObjectiveVector reference{-std::numeric_limits<double>::infinity(),
                            -std::numeric_limits<double>::infinity()};
  for (const auto& p : points) {
    reference.f1 = std::max(reference.f1, p.f1);
    reference.f2 = std::max(reference.f2, p.f2);
  }

  std::vector<std::size_t> pool;
  for (const auto& front : nondominated_sort(points)) {
    if (pool.size() >= static_cast<std::size_t>(k)) {
      break;
    }
    pool.insert(pool.end(), front.begin(), front.end());
  }

  std::vector<std::size_t> selected;
  std::vector<ObjectiveVector> chosen;
  std::vector<bool> taken(pool.size(), false);
  double current = 0.0;
  while (selected.size() < static_cast<std::size_t>(k)) {
    std::size_t best = pool.size();
    double best_gain = -1.0;
    bool best_duplicate = true;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (taken[i]) {
        continue;
      }
      const auto& p = points[pool[i]];
      chosen.push_back(p);
      const double gain = hypervolume_2d(chosen, reference) - current;
      chosen.pop_back();
      const bool duplicate = std::find(chosen.begin(), chosen.end(), p) != chosen.end();
      bool better = false;
      if (best == pool.size() || gain > best_gain) {
        better = true;
      } else if (gain == best_gain) {
        const auto& q = points[pool[best]];
        better = std::tie(duplicate, p.f1, p.f2, pool[i]) <
                 std::tie(best_duplicate, q.f1, q.f2, pool[best]);
      }
      if (better) {
        best = i;
        best_gain = gain;
        best_duplicate = duplicate;
      }
    }
    taken[best] = true;
    selected.push_back(pool[best]);
    chosen.push_back(points[pool[best]]);
    current = hypervolume_2d(chosen, reference);
  }
  return selected;
}

} // namespace exitnas
