#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace exitnas {

/// Row-major feature matrix.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

/// Fully connected ReLU network with a single linear output, trained on
/// mean squared error. Parameters are one flat vector: for each layer the
/// weights (out x in, row-major) followed by the biases.
class Mlp {
public:
  Mlp() = default;
  /// `layer_sizes` = {inputs, hidden..., 1}. He-uniform initialization.
  Mlp(std::vector<int> layer_sizes, std::uint64_t seed);

  const std::vector<int>& layer_sizes() const noexcept { return sizes_; }
  std::size_t num_inputs() const noexcept { return sizes_.empty() ? 0 : static_cast<std::size_t>(sizes_.front()); }
  std::span<const double> parameters() const noexcept { return params_; }
  std::span<double> parameters() noexcept { return params_; }
  void set_parameters(std::vector<double> params);

  double predict(std::span<const double> x) const;
  std::vector<double> predict(const FeatureMatrix& x) const;

  /// Mean of (prediction - target)^2 over the given rows.
  double loss(const FeatureMatrix& x, std::span<const double> targets) const;

  /// Loss over the selected rows (all rows when `rows` is empty) and its
  /// gradient with respect to parameters(), by backpropagation.
  double loss_and_gradient(const FeatureMatrix& x, std::span<const double> targets,
                           std::span<const std::size_t> rows, std::vector<double>& gradient) const;

private:
  std::vector<int> sizes_;
  std::vector<double> params_;
};

struct TrainOptions {
  int epochs = 200;
  double learning_rate = 1e-3;
  /// Below this many rows every step uses the whole data set.
  std::size_t full_batch_below = 256;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
};

/// Adam on mean squared error. Returns the full-data loss after each epoch,
/// preceded by the loss before training.
std::vector<double> train(Mlp& model, const FeatureMatrix& x, std::span<const double> targets,
                          const TrainOptions& options);

} // namespace exitnas
