#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "exitnas/exitsim.hpp"
#include "exitnas/genome.hpp"
#include "exitnas/trace_io.hpp"

namespace exitnas {

/// What an evaluator returns for one genome: a trace over the genome's
/// enabled exits plus the final classifier, and the final-exit error.
struct EvaluationResult {
  EvalTrace trace;
  double measured_error = 0.0;
  std::optional<TraceFooter> footer;
};

/// Evaluators may be called concurrently from several threads.
class Evaluator {
public:
  virtual ~Evaluator() = default;
  virtual EvaluationResult evaluate(const Genome& g, std::uint64_t seed) = 0;
  virtual std::string kind() const = 0;
};

/// Parameters of the built-in synthetic accuracy model. Per-exit accuracy is
///   floor + (ceiling - floor) * sigmoid(bias + depth_weight * depth + branch_weight * branch
///                                       + resolution_weight * resolution)
/// where depth is the fraction of maximum backbone capacity up to the exit
/// and branch is the exit-branch capacity score. The final exit depends on
/// the backbone only; exits are capped by it and made non-decreasing over the
/// enabled exits.
struct SyntheticOracleParams {
  double accuracy_floor = 0.10;
  double accuracy_ceiling = 0.95;

  double exit_bias = -0.5;
  double exit_depth_weight = 4.0;
  double exit_branch_weight = 1.6;
  double exit_resolution_weight = 0.6;

  double final_bias = 1.5;
  double final_depth_weight = 2.0;
  double final_resolution_weight = 0.6;

  /// Branch capacity score weights.
  double second_block_weight = 0.4;
  double expansion_weight = 0.25;
  double kernel_weight = 0.15;
  double interpolation_weight = 0.2;

  /// Margin model: correct samples draw margins near (1 - difficulty ratio)^shape,
  /// incorrect ones near wrong_scale * v^2; both get gaussian noise.
  double correct_margin_shape = 0.5;
  double wrong_margin_scale = 0.35;
  double margin_noise = 0.05;

  std::uint64_t noise_seed = 0x5eed;

  /// Throws ConfigError.
  void validate() const;
};

void to_json(nlohmann::json& j, const SyntheticOracleParams& p);
void from_json(const nlohmann::json& j, SyntheticOracleParams& p);

/// Base accuracy of every potential exit position followed by the final exit.
std::array<double, kNumExitPositions + 1> synthetic_exit_accuracies(
    const Genome& g, const SearchSpace& space, const SyntheticOracleParams& params);

/// Deterministic function of (genome encoding, params, seed).
EvaluationResult synthetic_evaluate(const Genome& g, const SearchSpace& space,
                                    const SyntheticOracleParams& params, std::size_t n_samples,
                                    std::uint64_t seed);

class SyntheticEvaluator final : public Evaluator {
public:
  SyntheticEvaluator(SearchSpace space, SyntheticOracleParams params, std::size_t n_samples)
      : space_(std::move(space)), params_(params), n_samples_(n_samples) {}

  EvaluationResult evaluate(const Genome& g, std::uint64_t seed) override {
    return synthetic_evaluate(g, space_, params_, n_samples_, seed);
  }
  std::string kind() const override { return "synthetic"; }

private:
  SearchSpace space_;
  SyntheticOracleParams params_;
  std::size_t n_samples_;
};

inline constexpr const char* kEvaluatorSchemaVersion = "exitnas-eval/1";

/// Request document of wire protocol v1:
///   {"schema_version": "exitnas-eval/1", "genome": {...}, "space": {...},
///    "dataset": "...", "training_epochs": 5, "loss_weight": 1.0, "seed": S,
///    "output_path": "<where the evaluator must write its trace>",
///    "trace_encoding": "csv" | "binary"}
struct EvaluatorRequest {
  Genome genome;
  SearchSpace space;
  std::string dataset = "cifar10";
  int training_epochs = 5;
  double loss_weight = 1.0;
  std::uint64_t seed = 0;
  std::filesystem::path output_path;
  TraceEncoding trace_encoding = TraceEncoding::csv;

  /// Throws ContractViolation.
  void validate() const;
};

nlohmann::json to_request_json(const EvaluatorRequest& req);

struct ExternalEndpoint {
  /// Executable invoked as `<command> <request.json>`.
  std::filesystem::path command;
  std::chrono::milliseconds timeout{std::chrono::minutes(30)};
  /// Parent of the per-evaluation working directories.
  std::filesystem::path work_root = std::filesystem::temp_directory_path();
  bool keep_workdir = false;
};

/// Checks a parsed response against the genome: one column per enabled exit
/// in ascending position order plus the final exit, and a footer.
/// Throws MalformedTrace.
EvaluationResult validate_response(TraceDocument doc, const Genome& g);

/// Runs the external evaluator in an isolated working directory. Throws
/// MalformedTrace on protocol violations and EvaluatorUnavailable on launch
/// failure, non-zero exit or timeout.
EvaluationResult external_evaluate(const EvaluatorRequest& req, const ExternalEndpoint& endpoint);

class ExternalEvaluator final : public Evaluator {
public:
  ExternalEvaluator(ExternalEndpoint endpoint, SearchSpace space, std::string dataset,
                    int training_epochs, double loss_weight)
      : endpoint_(std::move(endpoint)), space_(std::move(space)), dataset_(std::move(dataset)),
        training_epochs_(training_epochs), loss_weight_(loss_weight) {}

  EvaluationResult evaluate(const Genome& g, std::uint64_t seed) override;
  std::string kind() const override { return "external:" + endpoint_.command.string(); }

private:
  ExternalEndpoint endpoint_;
  SearchSpace space_;
  std::string dataset_;
  int training_epochs_;
  double loss_weight_;
};

} // namespace exitnas
