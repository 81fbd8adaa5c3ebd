#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "exitnas/genome.hpp"
#include "exitnas/mlp.hpp"

namespace exitnas {

struct SurrogateHyper {
  std::vector<int> hidden_layers{64, 64};
  double learning_rate = 1e-3;
  int epochs = 200;
  std::size_t full_batch_below = 256;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  /// One-hot encode categorical genes instead of using option indices ordinally.
  bool one_hot = false;
};

/// Min-max scaled MLP regressor on arbitrary real features and one target.
/// Constant features/targets scale to 0 and unscale back to the constant.
class ScaledRegressor {
public:
  void fit(const FeatureMatrix& x, std::span<const double> y, const std::vector<int>& hidden,
           const TrainOptions& options);
  double predict(std::span<const double> features) const;

  bool fitted() const noexcept { return fitted_; }
  const std::vector<double>& loss_curve() const noexcept { return loss_curve_; }
  const Mlp& model() const noexcept { return model_; }

  friend void to_json(nlohmann::json& j, const ScaledRegressor& r);
  friend void from_json(const nlohmann::json& j, ScaledRegressor& r);

private:
  Mlp model_;
  std::vector<double> feature_lo_;
  std::vector<double> feature_hi_;
  double target_lo_ = 0.0;
  double target_hi_ = 0.0;
  std::vector<double> loss_curve_;
  bool fitted_ = false;
};

/// One evaluated architecture as a training example.
struct SurrogateSample {
  Genome genome;
  double error = 0.0;        ///< in [0, 1]
  double average_macs = 0.0; ///< MACs (not millions)
};

struct SurrogatePrediction {
  double error = 0.0;
  double macs = 0.0; ///< MACs (not millions)
};

/// Error and average-MAC regressors sharing one genome featurization.
/// The MAC target is regressed as log(MACs in millions).
class SurrogatePair {
public:
  /// Throws InsufficientData below 2 samples and ContractViolation on non-finite targets.
  static SurrogatePair fit(const SearchSpace& space, std::span<const SurrogateSample> archive,
                           const SurrogateHyper& hyper);

  /// Error clamped to [0, 1], MACs clamped to >= 0. Throws StateError if unfitted.
  SurrogatePrediction predict(const Genome& g) const;
  SurrogatePrediction predict_features(std::span<const double> features) const;

  std::vector<double> features(const Genome& g) const;

  bool fitted() const noexcept { return fitted_; }
  std::size_t training_archive_size() const noexcept { return training_archive_size_; }
  const ScaledRegressor& error_model() const noexcept { return error_model_; }
  const ScaledRegressor& macs_model() const noexcept { return macs_model_; }

  friend void to_json(nlohmann::json& j, const SurrogatePair& s);
  friend void from_json(const nlohmann::json& j, SurrogatePair& s);

private:
  SearchSpace space_;
  bool one_hot_ = false;
  ScaledRegressor error_model_;
  ScaledRegressor macs_model_;
  std::size_t training_archive_size_ = 0;
  bool fitted_ = false;
};

/// Clamp contract of SurrogatePair::predict, exposed for testing.
SurrogatePrediction clamp_prediction(double raw_error, double raw_macs);

/// Featurize a genome: option indices (ordinal) or one-hot blocks.
std::vector<double> genome_features(const Genome& g, const SearchSpace& space, bool one_hot);

} // namespace exitnas
