#include <doctest.h>

#include "exitnas/errors.hpp"
#include "exitnas/tuner.hpp"
#include "oracles.hpp"

using namespace exitnas;

namespace {

Genome genome_with_exits(const SearchSpace& space, std::uint64_t seed, std::vector<std::size_t> on) {
  Genome g = sample_genome(space, seed);
  g.thresholds = ThresholdVector{};
  for (auto p : on) g.thresholds.values[p] = 0.5;
  return g;
}

} // namespace

TEST_CASE("objective arithmetic") {
  PolicyResult r;
  r.accuracy = 0.8;
  r.average_macs = 120;
  TunerConfig cfg;
  cfg.gamma = 0.1;
  cfg.target_macs = 100;
  CHECK(objective(r, cfg) == doctest::Approx(0.78));
  cfg.gamma = 0.0;
  CHECK(objective(r, cfg) == 0.8);
  cfg.gamma = 0.5;
  r.average_macs = 100;
  CHECK(objective(r, cfg) == 0.8);
  cfg.target_macs = 0;
  CHECK_THROWS_AS(objective(r, cfg), ContractViolation);
}

TEST_CASE("tune equals exhaustive enumeration") {
  SearchSpace space;
  Rng rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<std::size_t> positions;
    for (std::size_t p = 0; p < kNumExitPositions && positions.size() < 3; ++p)
      if (bernoulli(rng, 0.5)) positions.push_back(p);
    Genome g = genome_with_exits(space, trial, positions);
    auto prof = profile(g, space);
    auto t = oracle::random_trace(rng, 1 + uniform_index(rng, 120), positions);
    TunerConfig cfg;
    cfg.gamma = 0.05 * static_cast<double>(uniform_index(rng, 5));
    cfg.target_macs = static_cast<double>(prof.final_macs) * (0.3 + 0.7 * uniform_unit(rng));
    auto brute = oracle::brute_tune(t, cost_table(g, space), cfg.grid, cfg.gamma, cfg.target_macs);
    auto tuned = tune(t, prof, cfg);
    CHECK(tuned.objective == brute.objective);
    CHECK(tuned.thresholds == brute.thresholds);
    CHECK_FALSE(tuned.approximate);
  }
}

TEST_CASE("an always-wrong exit is disabled") {
  SearchSpace space;
  Genome g = genome_with_exits(space, 5, {0});
  auto prof = profile(g, space);
  Rng rng(1);
  EvalTrace t;
  t.n_samples = 20;
  t.n_exits = 2;
  t.exit_positions = {0};
  for (int i = 0; i < 20; ++i) {
    t.margins.insert(t.margins.end(), {uniform_unit(rng), uniform_unit(rng)});
    t.correct.insert(t.correct.end(), {0, 1});
  }
  TunerConfig cfg;
  cfg.target_macs = static_cast<double>(cost_table(g, space).backbone_total);
  auto tuned = tune(t, prof, cfg);
  auto brute = oracle::brute_tune(t, cost_table(g, space), cfg.grid, cfg.gamma, cfg.target_macs);
  CHECK(tuned.thresholds == std::vector<double>{1.0});
  CHECK(tuned.thresholds == brute.thresholds);
}

TEST_CASE("single exit with grid {0, 1} picks the better policy") {
  SearchSpace space;
  Genome g = genome_with_exits(space, 6, {2});
  auto prof = profile(g, space);
  Rng rng(3);
  auto t = oracle::random_trace(rng, 30, {2});
  TunerConfig cfg;
  cfg.grid = {0.0, 1.0};
  cfg.target_macs = static_cast<double>(prof.cumulative_exit_macs[0]);
  auto table = cost_table(g, space);
  double at0 = oracle::scan_objective(oracle::scan(t, {0.0}, table), 30, cfg.gamma, cfg.target_macs);
  double at1 = oracle::scan_objective(oracle::scan(t, {1.0}, table), 30, cfg.gamma, cfg.target_macs);
  auto tuned = tune(t, prof, cfg);
  CHECK(tuned.objective == std::max(at0, at1));
  CHECK(tuned.thresholds[0] == (at1 >= at0 ? 1.0 : 0.0));
}

TEST_CASE("accuracy-only tuning with a perfect final exit disables every exit") {
  SearchSpace space;
  Genome g = genome_with_exits(space, 7, {0, 1, 4});
  auto prof = profile(g, space);
  Rng rng(4);
  auto t = oracle::random_trace(rng, 50, {0, 1, 4});
  for (std::size_t i = 0; i < t.n_samples; ++i) {
    t.correct[i * t.n_exits + 3] = 1;
    for (std::size_t c = 0; c < 3; ++c) t.correct[i * t.n_exits + c] = 0;
  }
  TunerConfig cfg;
  cfg.gamma = 0.0;
  auto tuned = tune(t, prof, cfg);
  CHECK(tuned.thresholds == std::vector<double>{1.0, 1.0, 1.0});
  CHECK(tuned.policy.accuracy == 1.0);
}

TEST_CASE("tuned result is never worse than no early exit, and stays on the grid") {
  SearchSpace space;
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::size_t> positions{0, 1, 2, 3, 4};
    Genome g = genome_with_exits(space, trial, positions);
    auto prof = profile(g, space);
    auto t = oracle::random_trace(rng, 40, positions);
    TunerConfig cfg;
    cfg.target_macs = 2e6;
    auto tuned = tune(t, prof, cfg);
    std::vector<double> ones(5, 1.0);
    CHECK(tuned.objective >= objective(assign_exits(t, ones, prof), cfg));
    for (double th : tuned.thresholds)
      CHECK(std::find(cfg.grid.begin(), cfg.grid.end(), th) != cfg.grid.end());
    CHECK(tune(t, prof, cfg).thresholds == tuned.thresholds);
  }
}

TEST_CASE("budget guard falls back to coordinate descent") {
  SearchSpace space;
  Genome g = genome_with_exits(space, 9, {0, 1, 2, 3, 4});
  auto prof = profile(g, space);
  Rng rng(5);
  auto t = oracle::random_trace(rng, 80, {0, 1, 2, 3, 4});
  TunerConfig cfg;
  cfg.max_evaluations = 1000; // 11^5 exceeds it
  auto approx = tune(t, prof, cfg);
  CHECK(approx.approximate);
  std::vector<double> ones(5, 1.0);
  CHECK(approx.objective >= objective(assign_exits(t, ones, prof), cfg));

  // Coordinate optimality: no single change improves the objective.
  for (std::size_t c = 0; c < 5; ++c)
    for (double v : cfg.grid) {
      auto th = approx.thresholds;
      th[c] = v;
      CHECK(objective(assign_exits(t, th, prof), cfg) <= approx.objective);
    }
  cfg.max_evaluations = 1e6;
  CHECK(tune(t, prof, cfg).objective >= approx.objective);
}

TEST_CASE("TunerConfig validation") {
  TunerConfig cfg;
  cfg.grid = {0.0, 0.5};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.grid = {0.5, 0.0, 1.0};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TunerConfig{};
  cfg.gamma = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
