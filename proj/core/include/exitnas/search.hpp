#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "exitnas/exitsim.hpp"
#include "exitnas/genome.hpp"
#include "exitnas/oracle.hpp"
#include "exitnas/pareto.hpp"
#include "exitnas/surrogate.hpp"
#include "exitnas/tuner.hpp"

namespace exitnas {

/// Which objective pair candidates are ranked by: the accuracy-augmented pair
/// (error + beta * macs_error, macs_error) or the raw (error, MACs in millions).
enum class ObjectiveForm { displayed, raw };

struct SearchConfig {
  double target_macs = 2.0; ///< millions
  double beta = 0.2;
  double gamma = 0.1;
  int iterations = 30;
  int initial_population = 100;
  int per_iteration_evals = 8;
  int training_epochs = 5;
  double loss_weight = 1.0;
  std::string dataset = "cifar10";
  std::uint64_t seed = 0;

  int offspring_pool = 100;
  int pool_generations = 10;
  double crossover_probability = 0.9;
  double mutation_probability = 0.05;
  double tuner_max_evaluations = 1e6;
  int evaluator_retries = 0;
  int eval_threads = 1;
  ObjectiveForm objective_form = ObjectiveForm::displayed;
  SurrogateHyper surrogate;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  TunerConfig tuner(const SearchSpace& space) const;

  bool operator==(const SearchConfig&) const;
};

void to_json(nlohmann::json& j, const SearchConfig& c);
void from_json(const nlohmann::json& j, SearchConfig& c);

struct ArchiveEntry {
  Genome genome; ///< thresholds replaced by the tuned ones
  std::uint64_t genome_id = 0;
  double measured_error = 0.0;        ///< early-exit policy error under tuned thresholds
  double measured_average_macs = 0.0; ///< MACs under tuned thresholds
  double final_exit_error = 0.0;      ///< evaluator-reported error of the final classifier
  double objective = 0.0;             ///< tuned threshold-search objective
  bool approximate_tuning = false;
  int iteration = 0;                  ///< 0 = initial population
  /// Fraction leaving at each exit position then the final exit; empty when
  /// the exit is disabled.
  std::array<std::optional<double>, kNumExitPositions + 1> utilization{};
  /// Trace the measurement came from; not serialized.
  std::shared_ptr<const EvalTrace> trace;

  bool same_measurement(const ArchiveEntry& other) const;
};

void to_json(nlohmann::json& j, const ArchiveEntry& e);
void from_json(const nlohmann::json& j, ArchiveEntry& e);

/// |predicted - target| / target. Throws ContractViolation if target <= 0.
double macs_error(double predicted_macs, double target_macs);

/// Objective pair from error and average MACs (in MACs).
ObjectiveVector objective_pair(double error, double average_macs, const SearchConfig& cfg);

/// Surrogate-predicted objective pair of `g`.
ObjectiveVector objectives(const Genome& g, const SurrogatePair& s, const SearchConfig& cfg);

/// Indices of archive entries non-dominated in (measured_error, measured_average_macs).
std::vector<std::size_t> pareto_front(const std::vector<ArchiveEntry>& archive);

/// Index of the entry with the highest tuned objective (ties: earliest).
std::optional<std::size_t> best_entry(const std::vector<ArchiveEntry>& archive);

struct SearchState {
  SearchConfig config;
  SearchSpace space;
  std::vector<ArchiveEntry> archive;
  /// -1 before the initial population is archived, then the last finished iteration.
  int completed_iterations = -1;
  std::optional<SurrogatePair> surrogate;
  std::vector<std::string> log;
  /// Evaluations that failed after all retries.
  int failed_evaluations = 0;

  bool finished() const noexcept { return completed_iterations >= config.iterations; }
};

struct SearchHooks {
  /// Called after the initial population and after every iteration.
  std::function<void(const SearchState&)> on_checkpoint;
  std::function<void(const std::string&)> on_log;
  /// Stop after this iteration (for interrupted runs); nullopt runs to the end.
  std::optional<int> stop_after_iteration;
};

SearchState initial_state(const SearchConfig& cfg, const SearchSpace& space);

/// Runs the remaining stages of `state`: the initial population if not yet
/// done, then each iteration of surrogate fitting, offspring evolution,
/// candidate selection, true evaluation, threshold tuning and archiving.
void continue_search(SearchState& state, Evaluator& evaluator, const SearchHooks& hooks = {});

SearchState run_search(const SearchConfig& cfg, const SearchSpace& space, Evaluator& evaluator,
                       const SearchHooks& hooks = {});

/// Hash of the effective configuration and search space.
std::uint64_t config_hash(const SearchConfig& cfg, const SearchSpace& space);

inline constexpr int kCheckpointVersion = 1;

/// {"version", "config_hash", "seed", "config", "space", "completed_iterations",
///  "failed_evaluations", "archive", "surrogate", "log"}
nlohmann::json checkpoint_json(const SearchState& state);

/// Throws StateError if the checkpoint is unreadable, of another version or
/// its stored hash does not match its configuration.
SearchState state_from_checkpoint(const nlohmann::json& j);

} // namespace exitnas
