// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "exitnas/config.hpp"
#include "exitnas/genome.hpp"
#include "exitnas/macmodel.hpp"
#include "exitnas/mlp.hpp"
#include "exitnas/pareto.hpp"
#include "exitnas/report.hpp"
#include "exitnas/search.hpp"
#include "exitnas/tuner.hpp"
#include "oracles.hpp"

using namespace exitnas;
using nlohmann::json;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

Genome genome_with_exits(const SearchSpace& space, std::uint64_t seed, const std::vector<std::size_t>& on) {
  Genome g = sample_genome(space, seed);
  g.thresholds = ThresholdVector{};
  for (auto p : on) g.thresholds.values[p] = 0.5;
  return g;
}

std::vector<std::size_t> random_positions(Rng& rng, std::size_t max_count) {
  std::vector<std::size_t> positions;
  for (std::size_t p = 0; p < kNumExitPositions && positions.size() < max_count; ++p)
    if (bernoulli(rng, 0.5)) positions.push_back(p);
  return positions;
}

Outcome check_mac_exactness() {
  using K = LayerKind;
  auto bb = Convention::backbone_mode, ex = Convention::exit_mode;
  struct Fixture {
    LayerSpec layer;
    Convention convention;
    MacCount expected;
  };
  const std::vector<Fixture> fixtures{
      {{K::conv, 3, 3, 16, 32, 32, 1}, bb, 442368},
      {{K::conv, 3, 3, 16, 32, 32, 1}, ex, 442368},
      {{K::conv, 1, 16, 96, 32, 32, 1}, bb, 1572864},
      {{K::conv, 1, 96, 24, 16, 16, 1}, ex, 589824},
      {{K::conv, 3, 24, 48, 8, 8, 1}, bb, 663552},
      {{K::conv, 3, 32, 64, 4, 4, 4}, ex, 73728},
      {{K::depthwise_conv, 3, 96, 96, 32, 32, 96}, bb, 884736},
      {{K::depthwise_conv, 5, 96, 96, 16, 16, 96}, ex, 614400},
      {{K::depthwise_conv, 7, 48, 48, 8, 8, 48}, bb, 150528},
      {{K::linear, 1, 1280, 10, 1, 1, 1}, bb, 12800},
      {{K::linear, 1, 96, 100, 1, 1, 1}, ex, 9600},
      {{K::batchnorm, 1, 16, 16, 32, 32, 1}, bb, 0},
      {{K::batchnorm, 1, 16, 16, 32, 32, 1}, ex, 16384},
      {{K::batchnorm, 1, 96, 96, 16, 16, 1}, ex, 24576},
      {{K::batchnorm, 1, 96, 96, 16, 16, 1}, bb, 0},
      {{K::maxpool, 2, 16, 16, 16, 16, 1}, ex, 0},
      {{K::interpolate, 1, 16, 16, 8, 8, 1}, ex, 0},
  };
  Outcome o;
  for (std::size_t i = 0; i < fixtures.size(); ++i) {
    const auto& f = fixtures[i];
    MacCount got = layer_macs(f.layer, f.convention);
    o.require(got == f.expected, "fixture " + std::to_string(i) + ": got " + std::to_string(got) +
                                     ", expected " + std::to_string(f.expected));
  }
  o.require(fixtures.size() >= 12, "fewer than 12 fixtures");
  if (o.ok) o.detail = std::to_string(fixtures.size()) + " layers exact";
  return o;
}

Outcome check_branch_count() {
  std::vector<int> interp{8, 12}, kernel{3, 5}, expansion{1, 2};
  std::size_t engine = count_exit_branch_architectures(interp, kernel, expansion);
  std::size_t reference = oracle::enumerate_branches(interp, kernel, expansion);
  Outcome o;
  o.require(engine == 272, "engine count " + std::to_string(engine));
  o.require(reference == 272, "reference enumeration " + std::to_string(reference));
  if (o.ok) o.detail = "272 distinct branch architectures";
  return o;
}

Outcome check_tuner_oracle() {
  SearchSpace space;
  Rng rng(0x7e57);
  Outcome o;
  for (int trial = 0; trial < 50; ++trial) {
    auto positions = random_positions(rng, 3);
    Genome g = genome_with_exits(space, static_cast<std::uint64_t>(trial), positions);
    auto prof = profile(g, space);
    auto trace = oracle::random_trace(rng, 1 + uniform_index(rng, 200), positions);
    TunerConfig cfg;
    cfg.gamma = 0.05 * static_cast<double>(uniform_index(rng, 5));
    cfg.target_macs = static_cast<double>(prof.final_macs) * (0.3 + 0.7 * uniform_unit(rng));
    o.require(cfg.grid.size() == 11, "grid size " + std::to_string(cfg.grid.size()));
    auto tuned = tune(trace, prof, cfg);
    auto brute = oracle::brute_tune(trace, cost_table(g, space), cfg.grid, cfg.gamma, cfg.target_macs);
    std::ostringstream what;
    what.precision(17);
    what << "trace " << trial << ": tune " << tuned.objective << " vs exhaustive " << brute.objective;
    o.require(tuned.objective == brute.objective && !tuned.approximate, what.str());
  }
  if (o.ok) o.detail = "50 traces, objective exact";
  return o;
}

Outcome check_policy_invariants() {
  SearchSpace space;
  const auto& grid = space.threshold_grid;
  Rng rng(0x9011);
  Outcome o;
  for (int trial = 0; trial < 1000 && o.ok; ++trial) {
    auto positions = random_positions(rng, kNumExitPositions);
    if (positions.empty()) positions.push_back(uniform_index(rng, kNumExitPositions));
    Genome g = genome_with_exits(space, static_cast<std::uint64_t>(trial), positions);
    auto prof = profile(g, space);
    auto trace = oracle::random_trace(rng, 1 + uniform_index(rng, 200), positions);
    const std::size_t early = positions.size();
    std::vector<double> th(early);
    for (auto& t : th) t = grid[uniform_index(rng, grid.size())];
    std::string tag = "case " + std::to_string(trial) + ": ";

    auto base = assign_exits(trace, th, prof);
    double sum = 0.0;
    for (double u : base.utilization) sum += u;
    o.require(std::abs(sum - 1.0) <= 1e-12, tag + "utilization sums to " + std::to_string(sum));

    std::size_t c = uniform_index(rng, early);
    auto probe = th;
    PolicyResult prev;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      probe[c] = grid[k];
      auto r = assign_exits(trace, probe, prof);
      if (k > 0) {
        for (std::size_t i = 0; i < trace.n_samples; ++i)
          o.require(r.exit_index[i] >= prev.exit_index[i], tag + "raising a threshold moved a sample earlier");
        if (grid[k] < 1.0)
          o.require(r.average_macs >= prev.average_macs, tag + "average MACs decreased with threshold");
      }
      prev = std::move(r);
    }

    probe = th;
    probe[c] = 1.0;
    auto disabled = assign_exits(trace, probe, prof);
    Genome reduced = g;
    reduced.thresholds.values[positions[c]] = 1.0;
    auto rest = probe;
    rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(c));
    auto removed = assign_exits(trace.without_column(c), rest, profile(reduced, space));
    auto counts = disabled.exit_counts;
    o.require(counts[c] == 0, tag + "disabled exit received samples");
    counts.erase(counts.begin() + static_cast<std::ptrdiff_t>(c));
    o.require(counts == removed.exit_counts && disabled.total_macs == removed.total_macs &&
                  disabled.correct_count == removed.correct_count,
              tag + "threshold 1 differs from removing the exit");
  }
  if (o.ok) o.detail = "1000 cases";
  return o;
}

Outcome check_nondominated_sort() {
  Rng rng(0x50f7);
  Outcome o;
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n = 1 + uniform_index(rng, 100);
    std::vector<ObjectiveVector> pts(n);
    double step = bernoulli(rng, 0.5) ? 0.1 : 0.0;
    for (auto& p : pts) {
      p.f1 = step > 0 ? step * static_cast<double>(uniform_index(rng, 8)) : uniform_unit(rng);
      p.f2 = step > 0 ? step * static_cast<double>(uniform_index(rng, 8)) : uniform_unit(rng);
    }
    auto got = nondominated_sort(pts);
    for (auto& f : got) std::sort(f.begin(), f.end());
    o.require(got == oracle::fronts(pts), "population " + std::to_string(trial) + " differs");
  }
  if (o.ok) o.detail = "200 populations exact";
  return o;
}

Outcome check_gradient() {
  Rng rng(0x6ad);
  Outcome o;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    int in = 1 + static_cast<int>(uniform_index(rng, 8));
    std::vector<int> sizes{in};
    int hidden = 1 + static_cast<int>(uniform_index(rng, 2));
    for (int h = 0; h < hidden; ++h) sizes.push_back(2 + static_cast<int>(uniform_index(rng, 7)));
    sizes.push_back(1);
    Mlp model(sizes, static_cast<std::uint64_t>(trial));
    std::vector<double> params(model.parameters().size());
    for (auto& w : params) w = 2.0 * uniform_unit(rng) - 1.0;
    model.set_parameters(params);
    FeatureMatrix x{6, static_cast<std::size_t>(in), {}};
    for (std::size_t i = 0; i < x.rows * x.cols; ++i) x.data.push_back(2.0 * uniform_unit(rng) - 1.0);
    std::vector<double> y;
    for (int i = 0; i < 6; ++i) y.push_back(uniform_unit(rng));
    std::vector<double> grad;
    model.loss_and_gradient(x, y, {}, grad);
    auto numeric = oracle::numeric_gradient(model, x, y, 1e-6);
    o.require(grad.size() == numeric.size(), "gradient size mismatch");
    for (std::size_t p = 0; p < std::min(grad.size(), numeric.size()); ++p) {
      double scale = std::max({std::abs(grad[p]), std::abs(numeric[p]), 1e-6});
      worst = std::max(worst, std::abs(grad[p] - numeric[p]) / scale);
    }
  }
  std::ostringstream d;
  d << "max relative error " << worst;
  o.require(worst <= 1e-4, d.str());
  if (o.ok) o.detail = d.str();
  return o;
}

std::string archive_text(const SearchState& s) {
  return archive_json(archive_document(s)).dump();
}

Outcome check_end_to_end() {
  EngineConfig cfg;
  cfg.validate();
  auto work = std::filesystem::temp_directory_path() / "exitnas-acceptance";
  Outcome o;

  std::vector<double> best_after_stage;
  SearchHooks hooks;
  hooks.on_checkpoint = [&](const SearchState& s) {
    auto b = best_entry(s.archive);
    best_after_stage.push_back(b ? s.archive[*b].objective : -1e300);
  };
  auto start = std::chrono::steady_clock::now();
  auto evaluator = make_evaluator(cfg, work);
  SearchState run = run_search(cfg.search, cfg.space, *evaluator, hooks);
  double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  o.require(seconds < 300.0, "search took " + std::to_string(seconds) + " s");
  o.require(run.archive.size() == 340, "(a) archive has " + std::to_string(run.archive.size()) + " entries");
  for (std::size_t i = 1; i < best_after_stage.size(); ++i)
    o.require(best_after_stage[i] >= best_after_stage[i - 1], "(b) best objective dropped after stage " +
                                                                  std::to_string(i));
  o.require(best_after_stage.size() == static_cast<std::size_t>(cfg.search.iterations) + 1,
            "(b) saw " + std::to_string(best_after_stage.size()) + " stages");
  auto best = best_entry(run.archive);
  double target = cfg.search.target_macs * 1e6;
  double best_macs = best ? run.archive[*best].measured_average_macs : 0.0;
  std::ostringstream c;
  c << "best entry at " << best_macs / 1e6 << "M MACs";
  o.require(best && std::abs(best_macs - target) <= 0.1 * target, "(c) " + c.str() + ", target 2M");

  auto again_eval = make_evaluator(cfg, work);
  SearchState again = run_search(cfg.search, cfg.space, *again_eval, {});
  o.require(archive_text(again) == archive_text(run), "(d) rerun is not bit-identical");

  json saved;
  SearchHooks stop;
  stop.stop_after_iteration = cfg.search.iterations / 2;
  stop.on_checkpoint = [&](const SearchState& s) { saved = checkpoint_json(s); };
  auto part_eval = make_evaluator(cfg, work);
  run_search(cfg.search, cfg.space, *part_eval, stop);
  SearchState resumed = state_from_checkpoint(json::parse(saved.dump()));
  auto resume_eval = make_evaluator(cfg, work);
  continue_search(resumed, *resume_eval);
  o.require(archive_text(resumed) == archive_text(run), "(e) resumed run differs from uninterrupted run");

  std::ostringstream d;
  d.precision(4);
  d << "340 entries, " << c.str() << ", first run " << seconds << " s";
  if (o.ok) o.detail = d.str();
  std::filesystem::remove_all(work);
  return o;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream s(line);
  std::string cell;
  while (std::getline(s, cell, sep)) out.push_back(cell);
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(' ');
  auto e = s.find_last_not_of(' ');
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

Outcome check_report_fidelity() {
  Rng rng(0x4e9);
  std::vector<ArchiveEntry> archive;
  for (int i = 0; i < 400; ++i) {
    ArchiveEntry e;
    e.iteration = i / 20;
    e.measured_error = 0.05 * static_cast<double>(uniform_index(rng, 12));
    e.measured_average_macs = 2.5e5 * static_cast<double>(1 + uniform_index(rng, 12));
    std::size_t n = 1 + uniform_index(rng, 3000);
    std::vector<std::size_t> columns;
    for (std::size_t p = 0; p < kNumExitPositions; ++p)
      if (bernoulli(rng, 0.5)) columns.push_back(p);
    columns.push_back(kNumExitPositions);
    std::vector<std::size_t> counts(columns.size(), 0);
    for (std::size_t s = 0; s < n; ++s) ++counts[uniform_index(rng, columns.size())];
    for (std::size_t k = 0; k < columns.size(); ++k)
      e.utilization[columns[k]] = static_cast<double>(counts[k]) / static_cast<double>(n);
    archive.push_back(e);
  }

  Outcome o;
  std::vector<std::size_t> all(archive.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  std::istringstream table(utilization_table(utilization_rows(archive, all)));
  std::string line;
  std::getline(table, line);
  std::getline(table, line);
  std::size_t row = 0;
  while (std::getline(table, line)) {
    auto cells = split(line, '|');
    o.require(cells.size() == 10, "row " + std::to_string(row) + " has " + std::to_string(cells.size()) + " cells");
    if (cells.size() != 10) break;
    double sum = 0.0;
    for (std::size_t p = 0; p <= kNumExitPositions; ++p) {
      std::string cell = trim(cells[4 + p]);
      bool disabled = !archive[row].utilization[p].has_value();
      o.require(disabled == (cell == "-"), "row " + std::to_string(row) + " exit " + std::to_string(p + 1) +
                                               " renders \"" + cell + "\"");
      if (cell != "-") sum += std::stod(cell);
    }
    o.require(std::abs(sum - 100.0) <= 0.01, "row " + std::to_string(row) + " sums to " + std::to_string(sum));
    ++row;
  }
  o.require(row == archive.size(), "table has " + std::to_string(row) + " rows");

  std::istringstream csv(pareto_csv(archive));
  std::getline(csv, line);
  o.require(line == "iteration,measured_error,measured_average_macs,is_pareto", "pareto csv header: " + line);
  std::vector<ObjectiveVector> flagged, everything;
  while (std::getline(csv, line)) {
    auto cells = split(line, ',');
    ObjectiveVector v{std::stod(cells.at(1)), std::stod(cells.at(2))};
    everything.push_back(v);
    if (cells.at(3) == "true") flagged.push_back(v);
  }
  o.require(!flagged.empty(), "no Pareto rows flagged");
  for (const auto& a : flagged)
    for (const auto& b : flagged) o.require(!oracle::dominates(a, b), "flagged rows dominate each other");
  for (const auto& a : flagged)
    for (const auto& b : everything) o.require(!oracle::dominates(b, a), "a flagged row is dominated");
  if (o.ok) o.detail = std::to_string(row) + " rows, " + std::to_string(flagged.size()) + " Pareto rows";
  return o;
}

struct Criterion {
  const char* name;
  double limit_seconds;
  std::function<Outcome()> check;
};

} // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"MAC formula exactness", 1.0, check_mac_exactness},
      {"exit-branch space count", 1.0, check_branch_count},
      {"threshold-tuner oracle equivalence", 30.0, check_tuner_oracle},
      {"policy invariants", 30.0, check_policy_invariants},
      {"non-dominated sorting equivalence", 10.0, check_nondominated_sort},
      {"surrogate gradient check", 10.0, check_gradient},
      {"end-to-end synthetic search", 0.0, check_end_to_end},
      {"report fidelity", 5.0, check_report_fidelity},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("exception: ") + e.what();
    }
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_seconds > 0 && seconds >= c.limit_seconds && o.ok) {
      o.ok = false;
      o.detail = "over the " + std::to_string(c.limit_seconds) + " s limit";
    }
    failures += o.ok ? 0 : 1;
    std::printf("%s  %-36s %8.2fs  %s\n", o.ok ? "PASS" : "FAIL", c.name, seconds, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
