#include <doctest.h>

#include "exitnas/errors.hpp"
#include "exitnas/exitsim.hpp"
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

TEST_CASE("score_margin") {
  std::vector<double> a{0.5, 0.3, 0.2}, u{0.25, 0.25, 0.25, 0.25}, one{0.0, 1.0, 0.0};
  CHECK(score_margin(a) == doctest::Approx(0.2));
  CHECK(score_margin(u) == 0.0);
  CHECK(score_margin(one) == 1.0);
  std::vector<double> single{1.0}, unnormalized{0.5, 0.6};
  CHECK_THROWS_AS(score_margin(single), ContractViolation);
  CHECK_THROWS_AS(score_margin(unnormalized), ContractViolation);
}

TEST_CASE("assign_exits examples") {
  SearchSpace space;
  Genome g = genome_with_exits(space, 1, {1});
  auto prof = profile(g, space);
  EvalTrace t;
  t.n_samples = 1;
  t.n_exits = 2;
  t.exit_positions = {1};
  t.margins = {0.4, 0.9};
  t.correct = {0, 1};

  std::vector<double> keep{0.3};
  auto r = assign_exits(t, keep, prof);
  CHECK(r.exit_index[0] == 0);
  CHECK(r.total_macs == prof.cumulative_exit_macs[0]);

  std::vector<double> pass{0.5};
  r = assign_exits(t, pass, prof);
  CHECK(r.exit_index[0] == 1);
  CHECK(r.accuracy == 1.0);

  std::vector<double> off{1.0};
  r = assign_exits(t, off, prof);
  CHECK(r.exit_index[0] == 1);
  // The disabled branch is not charged.
  CHECK(r.average_macs == static_cast<double>(prof.final_macs - prof.per_branch_macs[0]));
}

TEST_CASE("first passing exit wins") {
  SearchSpace space;
  Genome g = genome_with_exits(space, 2, {0, 3});
  auto prof = profile(g, space);
  EvalTrace t;
  t.n_samples = 1;
  t.n_exits = 3;
  t.exit_positions = {0, 3};
  t.margins = {0.4, 0.9, 1.0};
  t.correct = {1, 1, 1};
  std::vector<double> th{0.5, 0.0};
  CHECK(assign_exits(t, th, prof).exit_index[0] == 1);
  std::vector<double> zeros{0.0, 0.0};
  CHECK(assign_exits(t, zeros, prof).exit_index[0] == 0);
}

TEST_CASE("assign_exits equals the sequential scan oracle") {
  SearchSpace space;
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::size_t> positions;
    for (std::size_t p = 0; p < kNumExitPositions; ++p)
      if (bernoulli(rng, 0.5)) positions.push_back(p);
    Genome g = genome_with_exits(space, trial, positions);
    auto table = cost_table(g, space);
    auto t = oracle::random_trace(rng, 1 + uniform_index(rng, 60), positions);
    std::vector<double> th;
    for (std::size_t c = 0; c < positions.size(); ++c)
      th.push_back(static_cast<double>(uniform_index(rng, 11)) / 10.0);
    auto r = assign_exits(t, th, profile(g, space));
    auto o = oracle::scan(t, th, table);
    CHECK(r.exit_index == o.exit_column);
    CHECK(r.exit_counts == o.counts);
    CHECK(r.correct_count == o.correct);
    CHECK(r.total_macs == o.total_macs);
  }
}

TEST_CASE("trace and threshold mismatches are rejected") {
  SearchSpace space;
  Genome g = genome_with_exits(space, 3, {1, 2});
  EvalTrace t;
  t.n_samples = 1;
  t.n_exits = 2;
  t.exit_positions = {1};
  t.margins = {0.5, 0.5};
  t.correct = {1, 1};
  CHECK_THROWS_AS(assign_exits(t, g.thresholds, profile(g, space)), ContractViolation);
  std::vector<double> too_many{0.1, 0.2};
  CHECK_THROWS_AS(assign_exits(t, too_many, profile(genome_with_exits(space, 3, {1}), space)),
                  ContractViolation);
}

TEST_CASE("EvalTrace::check names the bad cell") {
  EvalTrace t;
  t.n_samples = 2;
  t.n_exits = 2;
  t.exit_positions = {0};
  t.margins = {0.1, 0.2, 1.5, 0.3};
  t.correct = {0, 1, 1, 1};
  try {
    t.check();
    FAIL("expected MalformedTrace");
  } catch (const MalformedTrace& e) {
    CHECK(e.field() == "margins[1,0]");
  }
}
