#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "exitnas/errors.hpp"
#include "exitnas/pareto.hpp"
#include "oracles.hpp"

using namespace exitnas;

namespace {

std::vector<ObjectiveVector> random_points(Rng& rng, std::size_t n, int levels) {
  std::vector<ObjectiveVector> pts;
  for (std::size_t i = 0; i < n; ++i)
    pts.push_back({static_cast<double>(uniform_index(rng, static_cast<std::size_t>(levels))),
                   static_cast<double>(uniform_index(rng, static_cast<std::size_t>(levels)))});
  return pts;
}

} // namespace

TEST_CASE("nondominated_sort examples") {
  std::vector<ObjectiveVector> pts{{1, 2}, {2, 1}, {2, 2}};
  auto fronts = nondominated_sort(pts);
  REQUIRE(fronts.size() == 2);
  CHECK(fronts[0] == std::vector<std::size_t>{0, 1});
  CHECK(fronts[1] == std::vector<std::size_t>{2});

  std::vector<ObjectiveVector> same(5, {0.3, 0.3});
  CHECK(nondominated_sort(same).size() == 1);
  CHECK(nondominated_sort(std::vector<ObjectiveVector>{}).empty());
}

TEST_CASE("nondominated_sort equals brute force") {
  Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    auto pts = random_points(rng, 1 + uniform_index(rng, 60), trial % 2 ? 6 : 1000);
    CHECK(nondominated_sort(pts) == oracle::fronts(pts));
  }
}

TEST_CASE("crowding distance") {
  std::vector<ObjectiveVector> pts{{0, 4}, {1, 2}, {2, 1}, {4, 0}};
  std::vector<std::size_t> front{0, 1, 2, 3};
  auto cd = crowding_distance(pts, front);
  CHECK(std::isinf(cd[0]));
  CHECK(std::isinf(cd[3]));
  CHECK(cd[1] == doctest::Approx(0.5 + 0.75));
  CHECK(cd[2] == doctest::Approx(0.75 + 0.5));
}

TEST_CASE("hypervolume agrees with the grid oracle") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    auto pts = random_points(rng, 1 + uniform_index(rng, 8), 10);
    ObjectiveVector ref{10, 10};
    CHECK(hypervolume_2d(pts, ref) == doctest::Approx(oracle::hypervolume(pts, ref)));
  }
}

TEST_CASE("select_candidates") {
  std::vector<ObjectiveVector> pts{{1, 5}, {2, 3}, {4, 1}, {5, 5}};
  SUBCASE("k = population size returns everything") {
    auto sel = select_candidates(pts, 4);
    std::sort(sel.begin(), sel.end());
    CHECK(sel == std::vector<std::size_t>{0, 1, 2, 3});
  }
  SUBCASE("invalid k") {
    CHECK_THROWS_AS(select_candidates(pts, 0), ContractViolation);
    CHECK_THROWS_AS(select_candidates(pts, 5), ContractViolation);
  }
  SUBCASE("k = 1 maximizes hypervolume (exhaustive oracle)") {
    Rng rng(9);
    for (int trial = 0; trial < 200; ++trial) {
      auto p = random_points(rng, 2 + uniform_index(rng, 5), 8);
      ObjectiveVector ref{0, 0};
      for (auto q : p) ref = {std::max(ref.f1, q.f1), std::max(ref.f2, q.f2)};
      double best = -1;
      for (auto q : p) best = std::max(best, oracle::hypervolume({q}, ref));
      auto sel = select_candidates(p, 1);
      CHECK(oracle::hypervolume({p[sel[0]]}, ref) == doctest::Approx(best));
    }
  }
  SUBCASE("two-point front: k = 1 picks the larger box") {
    std::vector<ObjectiveVector> two{{0, 3}, {1, 0}, {3, 4}};
    // Reference (3, 4): (0,3) covers 3x1 = 3, (1,0) covers 2x4 = 8.
    CHECK(select_candidates(two, 1) == std::vector<std::size_t>{1});
  }
  SUBCASE("duplicates are not both taken before distinct front members") {
    Rng rng(10);
    for (int trial = 0; trial < 200; ++trial) {
      auto p = random_points(rng, 3 + uniform_index(rng, 4), 6);
      p.push_back(p[uniform_index(rng, p.size())]);
      auto front = oracle::fronts(p)[0];
      std::vector<ObjectiveVector> distinct;
      for (auto i : front)
        if (std::find(distinct.begin(), distinct.end(), p[i]) == distinct.end()) distinct.push_back(p[i]);
      int k = static_cast<int>(distinct.size());
      auto sel = select_candidates(p, k);
      std::vector<ObjectiveVector> chosen;
      for (auto i : sel) chosen.push_back(p[i]);
      for (auto d : distinct) CHECK(std::find(chosen.begin(), chosen.end(), d) != chosen.end());
    }
  }
  SUBCASE("deterministic") {
    Rng rng(11);
    auto p = random_points(rng, 40, 20);
    CHECK(select_candidates(p, 8) == select_candidates(p, 8));
  }
}
